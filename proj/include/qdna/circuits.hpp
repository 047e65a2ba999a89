#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdna/rng.hpp"

namespace qdna {

enum class GateKind { H, X, ID, RX, RY, RZ, CNOT, IDLE };

inline const char* gate_kind_name(GateKind k) {
  switch (k) {
    case GateKind::H: return "H";
    case GateKind::X: return "X";
    case GateKind::ID: return "ID";
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::CNOT: return "CNOT";
    case GateKind::IDLE: return "IDLE";
  }
  return "?";
}

struct Gate {
  GateKind kind;
  std::vector<int> targets;
  double angle = 0.0;    // rotation kinds only
  int duration = 0;      // IDLE only, in idle-units (gate slots)

  static Gate h(int q) { return {GateKind::H, {q}}; }
  static Gate x(int q) { return {GateKind::X, {q}}; }
  static Gate id(int q) { return {GateKind::ID, {q}}; }
  static Gate rx(int q, double a) { return {GateKind::RX, {q}, a}; }
  static Gate ry(int q, double a) { return {GateKind::RY, {q}, a}; }
  static Gate rz(int q, double a) { return {GateKind::RZ, {q}, a}; }
  static Gate cnot(int c, int t) { return {GateKind::CNOT, {c, t}}; }
  static Gate idle(std::vector<int> qs, int t) {
    return {GateKind::IDLE, std::move(qs), 0.0, t};
  }
};

struct Seed {
  std::uint64_t value = 0;
};

struct NamedCircuit {
  std::string circuit_id;
  std::vector<Gate> gates;
  int n_qubits = 0;
  Seed seed;
  // qubits measured at the end; all qubits except for the CHSH family
  std::vector<int> measured;
};

inline Seed derive_circuit_seed(Seed master, const std::string& circuit_id) {
  return Seed{mix64(master.value ^ mix64(hash_str(circuit_id)))};
}

inline const std::array<const char*, 12>& suite_vocabulary() {
  static const std::array<const char*, 12> ids = {
      "baseline_readout", "random_1q_a",   "random_1q_b",  "ramsey",
      "spin_echo",        "pm",            "interleaved_x", "interleaved_h",
      "interleaved_id",   "entangler_chain", "crosstalk_probe", "chsh_bell"};
  return ids;
}

namespace detail {

constexpr int kRamseyIdle = 8;       // idle-units between the two H pulses
constexpr int kInterleaveReps = 16;  // repetitions in interleaved stress circuits

inline std::vector<int> all_qubits(int n) {
  std::vector<int> qs(n);
  for (int i = 0; i < n; ++i) qs[i] = i;
  return qs;
}

inline std::vector<Gate> random_1q_sequence(int n_qubits, RandomStream& rs) {
  int depth = 8 + static_cast<int>(rs.below(9));  // 8..16
  std::vector<Gate> gates;
  for (int d = 0; d < depth; ++d) {
    for (int q = 0; q < n_qubits; ++q) {
      double angle = rs.uniform(0.0, 2.0 * std::numbers::pi);
      switch (rs.below(3)) {
        case 0: gates.push_back(Gate::rx(q, angle)); break;
        case 1: gates.push_back(Gate::ry(q, angle)); break;
        default: gates.push_back(Gate::rz(q, angle)); break;
      }
    }
  }
  return gates;
}

}  // namespace detail

inline NamedCircuit build_circuit(const std::string& id, int n_qubits, Seed master) {
  using std::numbers::pi;
  Seed seed = derive_circuit_seed(master, id);
  RandomStream rs(seed.value);
  NamedCircuit c{id, {}, n_qubits, seed, detail::all_qubits(n_qubits)};

  if (id == "baseline_readout") {
    // measure only
  } else if (id == "random_1q_a" || id == "random_1q_b") {
    c.gates = detail::random_1q_sequence(n_qubits, rs);
  } else if (id == "ramsey" || id == "spin_echo") {
    // phi restricted to [0, pi/2) so the echo's refocused p0 sits above the
    // detuning-smeared Ramsey p0 for every draw
    double phi = rs.uniform(0.0, pi / 2.0);
    auto qs = detail::all_qubits(n_qubits);
    for (int q : qs) c.gates.push_back(Gate::h(q));
    if (id == "ramsey") {
      c.gates.push_back(Gate::idle(qs, detail::kRamseyIdle));
    } else {
      c.gates.push_back(Gate::idle(qs, detail::kRamseyIdle / 2));
      for (int q : qs) c.gates.push_back(Gate::x(q));
      c.gates.push_back(Gate::idle(qs, detail::kRamseyIdle / 2));
    }
    for (int q : qs) c.gates.push_back(Gate::rz(q, phi));
    for (int q : qs) c.gates.push_back(Gate::h(q));
  } else if (id == "pm") {
    for (int q = 0; q < n_qubits; ++q) c.gates.push_back(Gate::h(q));
  } else if (id == "interleaved_x" || id == "interleaved_h" || id == "interleaved_id") {
    for (int r = 0; r < detail::kInterleaveReps; ++r) {
      for (int q = 0; q < n_qubits; ++q) {
        if (id == "interleaved_x") c.gates.push_back(Gate::x(q));
        else if (id == "interleaved_h") c.gates.push_back(Gate::h(q));
        else c.gates.push_back(Gate::id(q));
      }
    }
  } else if (id == "entangler_chain") {
    for (int q = 0; q < n_qubits; ++q) c.gates.push_back(Gate::h(q));
    // CNOT chain links in seed-determined order
    std::vector<int> links;
    for (int q = 0; q + 1 < n_qubits; ++q) links.push_back(q);
    for (int i = static_cast<int>(links.size()) - 1; i > 0; --i) {
      std::swap(links[i], links[rs.below(static_cast<std::uint64_t>(i) + 1)]);
    }
    for (int q : links) c.gates.push_back(Gate::cnot(q, q + 1));
  } else if (id == "crosstalk_probe") {
    // strong, variable drive on qubit 0; the rest stay idle
    std::vector<int> idle_qs;
    for (int q = 1; q < n_qubits; ++q) idle_qs.push_back(q);
    for (int r = 0; r < 8; ++r) {
      c.gates.push_back(Gate::rx(0, rs.uniform(pi / 2.0, 3.0 * pi / 2.0)));
      if (!idle_qs.empty()) c.gates.push_back(Gate::idle(idle_qs, 1));
    }
  } else if (id == "chsh_bell") {
    c.gates.push_back(Gate::h(0));
    c.gates.push_back(Gate::cnot(0, 1));
    c.measured = {0, 1};
  } else {
    throw std::invalid_argument("unknown circuit_id: " + id);
  }
  return c;
}

inline std::vector<NamedCircuit> build_suite(int n_qubits, Seed master) {
  if (n_qubits < 2 || n_qubits > 5) {
    throw std::invalid_argument("n_qubits must be in [2,5]");
  }
  std::vector<NamedCircuit> suite;
  for (const char* id : suite_vocabulary()) {
    suite.push_back(build_circuit(id, n_qubits, master));
  }
  return suite;
}

struct ChshAngles {
  double a = 0.0;
  double a_prime = std::numbers::pi / 2.0;
  double b = std::numbers::pi / 4.0;
  double b_prime = -std::numbers::pi / 4.0;
};

// Measurement of the observable at angle theta in the X-Z plane:
// RY(-theta) then a Z-basis readout.
inline std::vector<NamedCircuit> build_chsh_settings(const NamedCircuit& base,
                                                     ChshAngles angles = {}) {
  if (base.n_qubits < 2) throw std::invalid_argument("CHSH base needs 2 qubits");
  struct Setting { const char* tag; double ta; double tb; };
  const Setting settings[4] = {{"ab", angles.a, angles.b},
                               {"ab'", angles.a, angles.b_prime},
                               {"a'b", angles.a_prime, angles.b},
                               {"a'b'", angles.a_prime, angles.b_prime}};
  std::vector<NamedCircuit> out;
  for (const auto& s : settings) {
    NamedCircuit c = base;
    c.circuit_id = base.circuit_id + ":" + s.tag;
    c.gates.push_back(Gate::ry(0, -s.ta));
    c.gates.push_back(Gate::ry(1, -s.tb));
    c.measured = {0, 1};
    out.push_back(std::move(c));
  }
  return out;
}

// One manifest line per circuit: id, seed, gate count.
inline std::string suite_manifest(const std::vector<NamedCircuit>& suite) {
  std::ostringstream os;
  for (const auto& c : suite) {
    os << c.circuit_id << "\t" << c.seed.value << "\t" << c.gates.size() << "\n";
  }
  return os.str();
}

}  // namespace qdna
