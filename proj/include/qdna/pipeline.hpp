#pragma once

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qdna/attest.hpp"
#include "qdna/circuits.hpp"
#include "qdna/features.hpp"
#include "qdna/provenance.hpp"
#include "qdna/sim.hpp"

namespace qdna {

// RFC-3339 UTC timestamp; QDNA_FIXED_TIME overrides the clock so artifacts
// are byte-reproducible in tests.
inline std::string utc_timestamp() {
  if (const char* fixed = std::getenv("QDNA_FIXED_TIME")) return fixed;
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct SessionResult {
  SessionRecord record;
  std::map<std::string, CountsTable> counts;  // circuit_id -> counts (incl. CHSH settings)
};

// One full probe session: build the 12-circuit suite, execute it plus the
// four CHSH settings, attest, and fingerprint every counts table.
inline SessionResult run_session(const DeviceProfile& profile, const std::string& session_id,
                                 Seed circuit_master, Seed exec_seed, std::uint64_t shots,
                                 double chsh_threshold = 2.0) {
  SessionResult out;
  SessionRecord& rec = out.record;
  rec.device_id = profile.device_id;
  rec.session_id = session_id;
  rec.timestamp_utc = utc_timestamp();
  rec.master_seed = circuit_master.value;
  rec.shots = shots;

  auto suite = build_suite(profile.n_qubits, circuit_master);
  const NamedCircuit* chsh_base = nullptr;
  for (const auto& c : suite) {
    rec.circuits.push_back({c.circuit_id, c.seed.value, c.gates.size()});
    CountsTable counts = execute_circuit(c, profile, shots, exec_seed);
    rec.features[c.circuit_id] = full_features(distribution_from_counts(counts));
    rec.counts_digest[c.circuit_id] = counts_digest_hex(counts);
    out.counts[c.circuit_id] = std::move(counts);
    if (c.circuit_id == "chsh_bell") chsh_base = &c;
  }

  std::array<CountsTable, 4> chsh_counts;
  auto settings = build_chsh_settings(*chsh_base);
  for (std::size_t i = 0; i < settings.size(); ++i) {
    chsh_counts[i] = execute_circuit(settings[i], profile, shots, exec_seed);
    rec.counts_digest[settings[i].circuit_id] = counts_digest_hex(chsh_counts[i]);
    out.counts[settings[i].circuit_id] = chsh_counts[i];
  }
  rec.chsh = attest_session(chsh_counts, chsh_threshold);

  rec.calibration_meta["n_qubits"] = std::to_string(profile.n_qubits);
  rec.calibration_meta["simulator"] = "trajectory-statevector";
  return out;
}

// -------- feature-file IO (the classify module consumes these) --------

// Sessions of one device read back from its stored artifacts, index order.
inline std::vector<std::pair<std::string, SessionFeatures>> load_device_sessions(
    const std::filesystem::path& device_dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(device_dir)) {
    if (e.path().extension() == ".json" &&
        e.path().filename().string().find(".qdna.") != std::string::npos) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<std::pair<std::string, SessionFeatures>> out;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    ProvenanceArtifact a = artifact_from_bytes(ss.str());
    out.emplace_back(a.record.session_id, a.record.features);
  }
  return out;
}

inline std::vector<SessionFeatures> load_feature_files(const std::filesystem::path& device_dir) {
  std::vector<SessionFeatures> out;
  for (auto& [sid, feats] : load_device_sessions(device_dir)) out.push_back(std::move(feats));
  return out;
}

// Flat CSV: one row per (session, circuit) with every FeatureVector field.
inline void write_features_csv(
    const std::vector<std::pair<std::string, SessionFeatures>>& sessions, std::ostream& os) {
  os << "session_id,circuit_id";
  for (const auto& name : FeatureVector::field_names()) os << "," << name;
  os << "\n";
  for (const auto& [sid, feats] : sessions) {
    for (const auto& [cid, fv] : feats) {
      os << sid << "," << cid;
      for (const auto& name : FeatureVector::field_names()) os << "," << fv.field(name);
      os << "\n";
    }
  }
}

}  // namespace qdna
