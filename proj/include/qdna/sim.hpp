#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdna/circuits.hpp"
#include "qdna/rng.hpp"

namespace qdna {

// Parameterized noise model standing in for one physical quantum device.
// All per-qubit fields are broadcast from a scalar when loaded from config.
struct DeviceProfile {
  std::string device_id;
  int n_qubits = 2;
  std::vector<double> readout_eps0;  // P(read 1 | state 0), per qubit
  std::vector<double> readout_eps1;  // P(read 0 | state 1), per qubit
  std::map<std::string, double> overrotation;  // gate kind -> angle factor
  double depol_1q = 0.0;
  double depol_2q = 0.0;
  double detune_sigma = 0.0;  // radians per idle-unit, quasi-static
  double t2_markov = 0.0;     // Markovian dephasing rate per idle-unit
  std::vector<double> crosstalk;  // kappa_j, drive-angle fraction leaked to neighbor j

  double overrotation_for(GateKind k) const {
    auto it = overrotation.find(gate_kind_name(k));
    return it == overrotation.end() ? 1.0 : it->second;
  }

  static DeviceProfile noiseless(const std::string& id, int n) {
    DeviceProfile p;
    p.device_id = id;
    p.n_qubits = n;
    p.readout_eps0.assign(n, 0.0);
    p.readout_eps1.assign(n, 0.0);
    p.crosstalk.assign(n, 0.0);
    return p;
  }

  void validate() const {
    if (n_qubits < 2 || n_qubits > 5) throw std::invalid_argument("n_qubits must be in [2,5]");
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    for (double v : readout_eps0) if (!in01(v)) throw std::invalid_argument("readout_eps0 out of [0,1]");
    for (double v : readout_eps1) if (!in01(v)) throw std::invalid_argument("readout_eps1 out of [0,1]");
    for (const auto& [k, v] : overrotation) if (v <= 0.0) throw std::invalid_argument("overrotation must be > 0");
    if (!in01(depol_1q) || !in01(depol_2q)) throw std::invalid_argument("depol out of [0,1]");
    if (detune_sigma < 0.0) throw std::invalid_argument("detune_sigma must be >= 0");
    if (t2_markov < 0.0) throw std::invalid_argument("t2_markov must be >= 0");
    for (double v : crosstalk) if (!in01(v)) throw std::invalid_argument("crosstalk out of [0,1]");
  }
};

struct QuantumState {
  std::vector<std::complex<double>> amplitudes;

  static QuantumState zero(int n_qubits) {
    QuantumState s;
    s.amplitudes.assign(std::size_t{1} << n_qubits, {0.0, 0.0});
    s.amplitudes[0] = 1.0;
    return s;
  }

  int n_qubits() const {
    int n = 0;
    while ((std::size_t{1} << n) < amplitudes.size()) ++n;
    return n;
  }

  double norm_sq() const {
    double s = 0.0;
    for (const auto& a : amplitudes) s += std::norm(a);
    return s;
  }
};

struct CountsTable {
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t shots = 0;
};

namespace detail {

using cplx = std::complex<double>;

inline void apply_1q_matrix(QuantumState& s, int q, const cplx m[2][2]) {
  const std::size_t bit = std::size_t{1} << q;
  const std::size_t dim = s.amplitudes.size();
  for (std::size_t i = 0; i < dim; ++i) {
    if (i & bit) continue;
    cplx a0 = s.amplitudes[i];
    cplx a1 = s.amplitudes[i | bit];
    s.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
    s.amplitudes[i | bit] = m[1][0] * a0 + m[1][1] * a1;
  }
}

inline void apply_rx(QuantumState& s, int q, double theta) {
  cplx c = std::cos(theta / 2.0), is = cplx(0.0, -std::sin(theta / 2.0));
  cplx m[2][2] = {{c, is}, {is, c}};
  apply_1q_matrix(s, q, m);
}

inline void apply_ry(QuantumState& s, int q, double theta) {
  double c = std::cos(theta / 2.0), sn = std::sin(theta / 2.0);
  cplx m[2][2] = {{c, -sn}, {sn, c}};
  apply_1q_matrix(s, q, m);
}

inline void apply_rz(QuantumState& s, int q, double theta) {
  cplx m[2][2] = {{std::exp(cplx(0.0, -theta / 2.0)), 0.0},
                  {0.0, std::exp(cplx(0.0, theta / 2.0))}};
  apply_1q_matrix(s, q, m);
}

// Rotation about the Hadamard axis (X+Z)/sqrt(2); theta = pi gives H up to phase.
inline void apply_h_axis(QuantumState& s, int q, double theta) {
  const double r = 1.0 / std::numbers::sqrt2;
  double c = std::cos(theta / 2.0), sn = std::sin(theta / 2.0);
  cplx m[2][2] = {{c - cplx(0.0, sn * r), cplx(0.0, -sn * r)},
                  {cplx(0.0, -sn * r), c + cplx(0.0, sn * r)}};
  apply_1q_matrix(s, q, m);
}

inline void apply_pauli(QuantumState& s, int q, int pauli) {  // 1=X, 2=Y, 3=Z
  if (pauli == 1) apply_rx(s, q, std::numbers::pi);
  else if (pauli == 2) apply_ry(s, q, std::numbers::pi);
  else if (pauli == 3) apply_rz(s, q, std::numbers::pi);
}

inline void apply_cnot(QuantumState& s, int control, int target) {
  const std::size_t cbit = std::size_t{1} << control;
  const std::size_t tbit = std::size_t{1} << target;
  const std::size_t dim = s.amplitudes.size();
  for (std::size_t i = 0; i < dim; ++i) {
    if ((i & cbit) && !(i & tbit)) {
      std::swap(s.amplitudes[i], s.amplitudes[i | tbit]);
    }
  }
}

}  // namespace detail

// Exact (noiseless) unitary application.
inline void apply_gate(QuantumState& state, const Gate& gate) {
  const int n = state.n_qubits();
  for (int q : gate.targets) {
    if (q < 0 || q >= n) throw std::out_of_range("gate target out of range");
  }
  if (std::abs(state.norm_sq() - 1.0) > 1e-6) {
    throw std::invalid_argument("input state not normalized");
  }
  if (!std::isfinite(gate.angle)) throw std::invalid_argument("non-finite gate angle");
  switch (gate.kind) {
    case GateKind::H: detail::apply_h_axis(state, gate.targets.at(0), std::numbers::pi); break;
    case GateKind::X: detail::apply_rx(state, gate.targets.at(0), std::numbers::pi); break;
    case GateKind::ID: break;
    case GateKind::RX: detail::apply_rx(state, gate.targets.at(0), gate.angle); break;
    case GateKind::RY: detail::apply_ry(state, gate.targets.at(0), gate.angle); break;
    case GateKind::RZ: detail::apply_rz(state, gate.targets.at(0), gate.angle); break;
    case GateKind::CNOT:
      if (gate.targets.size() != 2 || gate.targets[0] == gate.targets[1]) {
        throw std::invalid_argument("CNOT needs 2 distinct targets");
      }
      detail::apply_cnot(state, gate.targets[0], gate.targets[1]);
      break;
    case GateKind::IDLE: break;
  }
}

namespace detail {

inline void maybe_depolarize(QuantumState& s, const std::vector<int>& targets,
                             double prob, RandomStream& rs) {
  if (prob <= 0.0 || !rs.bernoulli(prob)) return;
  if (targets.size() == 1) {
    apply_pauli(s, targets[0], 1 + static_cast<int>(rs.below(3)));
  } else {
    // uniform over the 15 non-identity two-qubit Paulis
    int k = 1 + static_cast<int>(rs.below(15));
    int p0 = k % 4, p1 = k / 4;
    if (p0) apply_pauli(s, targets[0], p0);
    if (p1) apply_pauli(s, targets[1], p1);
  }
}

inline bool is_drive(GateKind k) {
  return k == GateKind::H || k == GateKind::X || k == GateKind::RX || k == GateKind::RY;
}

inline double drive_angle(const Gate& g) {
  return (g.kind == GateKind::H || g.kind == GateKind::X) ? std::numbers::pi : g.angle;
}

}  // namespace detail

// One stochastic unitary realization plus one measured sample.
inline std::string run_trajectory(const NamedCircuit& circuit, const DeviceProfile& profile,
                                  RandomStream& rs) {
  if (circuit.n_qubits > profile.n_qubits) {
    throw std::invalid_argument("circuit wider than device");
  }
  const int n = circuit.n_qubits;
  QuantumState state = QuantumState::zero(n);

  // quasi-static detuning, one draw per qubit per trajectory
  std::vector<double> detune(n, 0.0);
  for (int q = 0; q < n; ++q) detune[q] = rs.normal(0.0, profile.detune_sigma);

  for (const Gate& g : circuit.gates) {
    if (g.kind == GateKind::IDLE) {
      for (int q : g.targets) {
        if (q < 0 || q >= n) throw std::out_of_range("idle target out of range");
        detail::apply_rz(state, q, detune[q] * g.duration);
        double flip_p = (1.0 - std::exp(-profile.t2_markov * g.duration)) / 2.0;
        if (flip_p > 0.0 && rs.bernoulli(flip_p)) detail::apply_pauli(state, q, 3);
      }
      continue;
    }
    Gate noisy = g;
    double factor = profile.overrotation_for(g.kind);
    switch (g.kind) {
      case GateKind::RX:
      case GateKind::RY:
      case GateKind::RZ:
        noisy.angle = g.angle * factor;
        apply_gate(state, noisy);
        break;
      case GateKind::H:
        detail::apply_h_axis(state, g.targets.at(0), std::numbers::pi * factor);
        break;
      case GateKind::X:
        detail::apply_rx(state, g.targets.at(0), std::numbers::pi * factor);
        break;
      default:
        apply_gate(state, noisy);
        break;
    }
    // crosstalk: drive leaks an RX onto immediate chain neighbors
    if (detail::is_drive(g.kind)) {
      int q = g.targets.at(0);
      double theta = detail::drive_angle(g) * factor;
      for (int j : {q - 1, q + 1}) {
        if (j < 0 || j >= n) continue;
        double kappa = j < static_cast<int>(profile.crosstalk.size()) ? profile.crosstalk[j] : 0.0;
        if (kappa > 0.0) detail::apply_rx(state, j, kappa * theta);
      }
    }
    double depol = g.targets.size() >= 2 ? profile.depol_2q : profile.depol_1q;
    if (g.kind != GateKind::IDLE) detail::maybe_depolarize(state, g.targets, depol, rs);
  }

  // sample one basis state, then push it through the readout confusion
  double u = rs.uniform();
  std::size_t outcome = state.amplitudes.size() - 1;
  double acc = 0.0;
  for (std::size_t i = 0; i < state.amplitudes.size(); ++i) {
    acc += std::norm(state.amplitudes[i]);
    if (u < acc) { outcome = i; break; }
  }

  std::string bits(circuit.measured.size(), '0');
  for (std::size_t i = 0; i < circuit.measured.size(); ++i) {
    int q = circuit.measured[i];
    int b = (outcome >> q) & 1;
    double eps0 = q < static_cast<int>(profile.readout_eps0.size()) ? profile.readout_eps0[q] : 0.0;
    double eps1 = q < static_cast<int>(profile.readout_eps1.size()) ? profile.readout_eps1[q] : 0.0;
    if (b == 0 && rs.bernoulli(eps0)) b = 1;
    else if (b == 1 && rs.bernoulli(eps1)) b = 0;
    bits[i] = static_cast<char>('0' + b);
  }
  return bits;
}

// Deterministic: substream for shot s is derived from (seed, circuit_id, s),
// so identical inputs give bit-identical counts and shots are order-independent.
inline CountsTable execute_circuit(const NamedCircuit& circuit, const DeviceProfile& profile,
                                   std::uint64_t shots, Seed seed) {
  if (shots < 1) throw std::invalid_argument("shots must be >= 1");
  CountsTable table;
  table.shots = shots;
  for (std::uint64_t s = 0; s < shots; ++s) {
    RandomStream rs = RandomStream::derive(seed.value, circuit.circuit_id, s);
    ++table.counts[run_trajectory(circuit, profile, rs)];
  }
  return table;
}

// key=value profile config; '#' starts a comment; per-qubit fields accept a
// scalar (broadcast) or a comma list of length n_qubits.
inline DeviceProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open profile: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      auto e = s.find_last_not_of(" \t\r");
      s.erase(e == std::string::npos ? 0 : e + 1);
      return s;
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  auto parse_list = [](const std::string& v, int n) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    if (out.size() == 1) out.assign(n, out[0]);
    if (static_cast<int>(out.size()) != n) throw std::runtime_error("bad list length in profile");
    return out;
  };

  DeviceProfile p;
  if (!kv.count("device_id") || !kv.count("n_qubits")) {
    throw std::runtime_error("profile missing device_id or n_qubits");
  }
  p.device_id = kv["device_id"];
  p.n_qubits = std::stoi(kv["n_qubits"]);
  const int n = p.n_qubits;
  p.readout_eps0 = kv.count("readout_eps0") ? parse_list(kv["readout_eps0"], n) : std::vector<double>(n, 0.0);
  p.readout_eps1 = kv.count("readout_eps1") ? parse_list(kv["readout_eps1"], n) : std::vector<double>(n, 0.0);
  p.crosstalk = kv.count("crosstalk") ? parse_list(kv["crosstalk"], n) : std::vector<double>(n, 0.0);
  if (kv.count("depol_1q")) p.depol_1q = std::stod(kv["depol_1q"]);
  if (kv.count("depol_2q")) p.depol_2q = std::stod(kv["depol_2q"]);
  if (kv.count("detune_sigma")) p.detune_sigma = std::stod(kv["detune_sigma"]);
  if (kv.count("t2_markov")) p.t2_markov = std::stod(kv["t2_markov"]);
  if (kv.count("overrotation")) {
    double f = std::stod(kv["overrotation"]);
    for (const char* k : {"H", "X", "RX", "RY", "RZ", "CNOT"}) p.overrotation[k] = f;
  }
  for (const char* k : {"H", "X", "RX", "RY", "RZ", "CNOT"}) {
    std::string key = std::string("overrotation_") + k;
    for (auto& c : key) c = static_cast<char>(std::tolower(c));
    if (kv.count(key)) p.overrotation[k] = std::stod(kv[key]);
  }
  p.validate();
  return p;
}

}  // namespace qdna
