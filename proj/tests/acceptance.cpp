// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Usage: acceptance <profiles-dir>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <vector>

#include "qdna/classify.hpp"
#include "qdna/pipeline.hpp"
#include "qdna/store.hpp"

using namespace qdna;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void criterion(int number, const std::string& name, bool ok, const std::string& detail,
               double seconds) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << "criterion " << number << ": " << name
            << " — " << detail << " (" << seconds << " s)\n";
  if (!ok) ++g_failures;
}

class Timer {
 public:
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

ProbDist random_dist(RandomStream& rs, std::uint64_t K) {
  std::size_t bits = 0;
  while ((std::uint64_t{1} << bits) < K) ++bits;
  ProbDist d;
  d.K = K;
  double total = 0.0;
  std::uint64_t support = 1 + rs.below(K);
  for (std::uint64_t i = 0; i < support; ++i) {
    std::uint64_t outcome = rs.below(K);
    std::string key(bits, '0');
    for (std::size_t b = 0; b < bits; ++b) {
      if ((outcome >> b) & 1) key[bits - 1 - b] = '1';
    }
    double w = rs.uniform(0.01, 1.0);
    d.p[key] += w;
    total += w;
  }
  for (auto& [k, v] : d.p) v /= total;
  return d;
}

struct Fixture {
  DeviceProfile torino;
  DeviceProfile brisbane;
  std::vector<std::uint8_t> hmac_key = std::vector<std::uint8_t>(32, 0x5a);
  crypto::KeyPtr priv = crypto::generate_rsa_key(2048);

  // 25 sessions per device, 1024 shots, sealed into chains (generated once)
  std::vector<ProvenanceArtifact> chain_a, chain_b, chain_control;

  std::vector<ProvenanceArtifact> make_chain(const DeviceProfile& profile, int sessions,
                                             std::uint64_t circuit_master,
                                             std::uint64_t exec_base, std::uint64_t shots) {
    std::vector<ProvenanceArtifact> chain;
    std::optional<std::string> prev;
    for (int i = 0; i < sessions; ++i) {
      char sid[16];
      std::snprintf(sid, sizeof(sid), "s%03d", i);
      Seed exec{mix64(exec_base ^ mix64(static_cast<std::uint64_t>(i)))};
      SessionResult result = run_session(profile, sid, Seed{circuit_master}, exec, shots);
      result.record.signer_key_id = "acceptance";
      auto artifact = seal(result.record, prev, hmac_key, priv.get());
      prev = artifact.record_hash;
      chain.push_back(std::move(artifact));
    }
    return chain;
  }
};

std::vector<SessionFeatures> features_of(const std::vector<ProvenanceArtifact>& chain) {
  std::vector<SessionFeatures> out;
  for (const auto& a : chain) out.push_back(a.record.features);
  return out;
}

void crit1_feature_identities() {
  Timer t;
  RandomStream rs(1001);
  bool ok = true;
  std::string detail = "1000 random dists, identities within 1e-9";
  const std::uint64_t Ks[5] = {2, 4, 8, 16, 32};
  for (int i = 0; i < 1000 && ok; ++i) {
    std::uint64_t K = Ks[i % 5];
    auto d = random_dist(rs, K);
    auto f = full_features(d);
    double lnK = std::log(static_cast<double>(K));
    ok = std::abs(f.perplexity - std::exp(f.entropy)) < 1e-9 &&
         std::abs(f.kl_uniform - (lnK - f.entropy)) < 1e-9 &&
         f.entropy >= -1e-12 && f.entropy <= lnK + 1e-12 &&
         f.entropy_norm >= -1e-12 && f.entropy_norm <= 1.0 + 1e-12 &&
         f.perplexity >= 1.0 - 1e-9 && f.perplexity <= static_cast<double>(K) + 1e-9 &&
         f.gini >= -1e-12 && f.gini <= 1.0 - 1.0 / static_cast<double>(K) + 1e-12 &&
         f.parity_bias >= -1.0 && f.parity_bias <= 1.0 &&
         f.bernoulli_var >= 0.0 && f.bernoulli_var <= 0.25 &&
         f.tv_uniform >= -1e-12 && f.tv_uniform <= 1.0 &&
         f.js_uniform >= -1e-12 && f.js_uniform <= std::log(2.0) + 1e-12 &&
         f.kl_uniform >= -1e-9;
    if (!ok) detail = "identity violated at trial " + std::to_string(i);
  }
  double secs = t.elapsed();
  if (secs >= 5.0) { ok = false; detail += "; runtime budget exceeded"; }
  criterion(1, "feature identities", ok, detail, secs);
}

void crit2_trivial_exactness() {
  Timer t;
  ProbDist uniform;
  uniform.K = 8;
  for (int i = 0; i < 8; ++i) {
    std::string key = {char('0' + ((i >> 2) & 1)), char('0' + ((i >> 1) & 1)),
                       char('0' + (i & 1))};
    uniform.p[key] = 0.125;
  }
  auto fu = full_features(uniform);
  ProbDist point;
  point.K = 8;
  point.p = {{"000", 1.0}};
  auto fp = full_features(point);
  bool ok = std::abs(fu.entropy - std::log(8.0)) < 1e-12 && std::abs(fu.tv_uniform) < 1e-12 &&
            std::abs(fu.kl_uniform) < 1e-12 && std::abs(fu.js_uniform) < 1e-12 &&
            std::abs(fu.gini - (1.0 - 1.0 / 8.0)) < 1e-12 && fp.entropy == 0.0 &&
            fp.perplexity == 1.0 && fp.gini == 0.0;
  criterion(2, "trivial-case exactness", ok, "uniform and point-mass corners exact to 1e-12",
            t.elapsed());
}

void crit3_chsh_physics() {
  Timer t;
  auto profile = DeviceProfile::noiseless("ideal", 2);
  auto base = build_circuit("chsh_bell", 2, Seed{7});
  auto settings = build_chsh_settings(base);
  std::array<CountsTable, 4> counts;
  for (int i = 0; i < 4; ++i) counts[i] = execute_circuit(settings[i], profile, 10000, Seed{31});
  auto ev = attest_session(counts);
  double sigma = chsh_sigma(ev);
  double tsirelson = 2.0 * std::numbers::sqrt2;
  bool bell_ok = ev.S >= tsirelson - 3.0 * sigma && ev.S <= tsirelson + 3.0 * sigma &&
                 ev.pass == (ev.S >= ev.threshold);

  NamedCircuit product = base;
  product.gates = {Gate::h(0)};  // no entangler
  auto psettings = build_chsh_settings(product);
  for (int i = 0; i < 4; ++i) counts[i] = execute_circuit(psettings[i], profile, 10000, Seed{32});
  auto pev = attest_session(counts);
  bool local_ok = pev.S <= 2.0 + 3.0 * chsh_sigma(pev) && pev.pass == (pev.S >= pev.threshold);

  std::ostringstream detail;
  detail << "Bell S=" << ev.S << " vs 2*sqrt(2) +- 3*" << sigma << ", product S=" << pev.S;
  double secs = t.elapsed();
  bool ok = bell_ok && local_ok && secs < 30.0;
  criterion(3, "CHSH physics", ok, detail.str(), secs);
}

void crit4_ramsey_echo(const Fixture& fx) {
  Timer t;
  DeviceProfile profile = DeviceProfile::noiseless("echo_probe", fx.torino.n_qubits);
  profile.detune_sigma = 0.25;
  profile.t2_markov = 0.0;
  double ramsey_sum = 0.0, echo_sum = 0.0;
  const std::string zeros(profile.n_qubits, '0');
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto ramsey = build_circuit("ramsey", profile.n_qubits, Seed{seed});
    auto echo = build_circuit("spin_echo", profile.n_qubits, Seed{seed});
    auto rc = execute_circuit(ramsey, profile, 1024, Seed{seed * 977});
    auto ec = execute_circuit(echo, profile, 1024, Seed{seed * 977});
    auto p0 = [&](const CountsTable& c) {
      auto it = c.counts.find(zeros);
      return it == c.counts.end() ? 0.0 : static_cast<double>(it->second) / 1024.0;
    };
    ramsey_sum += p0(rc);
    echo_sum += p0(ec);
  }
  std::ostringstream detail;
  detail << "mean p0 echo=" << echo_sum / 20.0 << " > ramsey=" << ramsey_sum / 20.0
         << " over 20 seeds";
  criterion(4, "Ramsey/echo signature", echo_sum > ramsey_sum, detail.str(), t.elapsed());
}

void crit5_tamper_evidence(const Fixture& fx) {
  Timer t;
  bool ok = true;
  std::string detail;

  // untampered artifacts all pass
  for (const auto& a : fx.chain_a) {
    if (!verify(a, fx.priv.get(), &fx.hmac_key).pass()) {
      ok = false;
      detail = "untampered artifact failed verification";
    }
  }

  RandomStream rs(4242);
  int detected = 0;
  const int trials = 1000;
  for (int i = 0; i < trials; ++i) {
    const auto& victim = fx.chain_a[rs.below(fx.chain_a.size())];
    std::string bytes = artifact_to_bytes(victim);
    std::size_t pos = rs.below(bytes.size());
    bytes[pos] = static_cast<char>(bytes[pos] ^ (1u << rs.below(8)));
    bool flagged;
    try {
      flagged = !verify(artifact_from_bytes(bytes), fx.priv.get(), &fx.hmac_key).pass();
    } catch (const std::exception&) {
      flagged = true;
    }
    if (flagged) ++detected;
  }
  if (detected != trials) {
    ok = false;
    detail = "only " + std::to_string(detected) + "/1000 flips detected";
  }

  // chain audit localizes a mid-chain edit exactly
  fs::path root = fs::temp_directory_path() / "qdna_acceptance_store";
  fs::remove_all(root);
  {
    ArtifactStore store(root);
    for (const auto& a : fx.chain_a) store.append(a, fx.priv.get(), &fx.hmac_key);
    if (!store.audit_chain(fx.torino.device_id).clean) {
      ok = false;
      detail = "clean chain audited as broken";
    }
    const std::size_t victim_idx = 12;
    fs::path file = root / fx.torino.device_id /
                    (fx.chain_a[victim_idx].record.session_id + ".qdna.json");
    std::string bytes;
    {
      std::ifstream in(file, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      bytes = ss.str();
    }
    auto pos = bytes.find("\"shots\":1024");
    bytes.replace(pos, 12, "\"shots\":1025");
    {
      std::ofstream out(file, std::ios::binary | std::ios::trunc);
      out << bytes;
    }
    auto audit = store.audit_chain(fx.torino.device_id);
    if (audit.clean || !audit.first_break || *audit.first_break != victim_idx) {
      ok = false;
      detail = "audit did not localize the injected edit to index 12";
    }
  }
  fs::remove_all(root);

  double secs = t.elapsed();
  if (secs >= 60.0) { ok = false; detail += "; runtime budget exceeded"; }
  if (ok) detail = "1000/1000 flips flagged, audit break localized to index 12";
  criterion(5, "tamper evidence", ok, detail, secs);
}

void crit6_reproducibility(Fixture& fx) {
  Timer t;
  setenv("QDNA_FIXED_TIME", "2026-02-03T04:05:06Z", 1);
  auto run_once = [&](std::vector<std::string>& artifact_bytes, std::string& report_bytes) {
    auto chain_a = fx.make_chain(fx.torino, 6, 11, 21, 256);
    auto chain_b = fx.make_chain(fx.brisbane, 6, 11, 22, 256);
    for (const auto& a : chain_a) artifact_bytes.push_back(artifact_to_bytes(a));
    for (const auto& b : chain_b) artifact_bytes.push_back(artifact_to_bytes(b));
    FeatureMatrix m = assemble_matrix(features_of(chain_a), features_of(chain_b),
                                      "sim_torino", "sim_brisbane");
    CVParams params;
    params.folds = 3;
    params.seed = 5;
    json out;
    for (ModelKind kind : {ModelKind::nearest_centroid, ModelKind::logistic_regression,
                           ModelKind::random_forest}) {
      auto r = cross_validate(kind, m, params);
      out[r.model] = {{"acc", r.accuracy_mean}, {"auc", r.auc_mean}, {"f1", r.f1_macro}};
    }
    out["pval"] = permutation_test(m, 20, 3, params);
    report_bytes = out.dump();
  };
  std::vector<std::string> bytes1, bytes2;
  std::string report1, report2;
  run_once(bytes1, report1);
  run_once(bytes2, report2);
  unsetenv("QDNA_FIXED_TIME");
  bool ok = bytes1 == bytes2 && report1 == report2 && !bytes1.empty();
  criterion(6, "reproducibility", ok,
            "two fixed-clock pipeline runs byte-identical (" +
                std::to_string(bytes1.size()) + " artifacts + CV report)",
            t.elapsed());
}

void crit7_classification(const Fixture& fx) {
  Timer t;
  CVParams params;
  params.folds = 6;
  params.seed = 17;

  FeatureMatrix m = assemble_matrix(features_of(fx.chain_a), features_of(fx.chain_b),
                                    "sim_torino", "sim_brisbane",
                                    {"p0", "entropy", "js_uniform", "gini", "parity_bias"}, 0.9);
  auto nc = cross_validate(ModelKind::nearest_centroid, m, params);
  double pval = permutation_test(m, 999, 29, params);

  FeatureMatrix control = assemble_matrix(features_of(fx.chain_a), features_of(fx.chain_control),
                                          "sim_torino", "sim_torino_b",
                                          {"p0", "entropy", "js_uniform", "gini", "parity_bias"},
                                          0.9);
  auto nc_control = cross_validate(ModelKind::nearest_centroid, control, params);
  double pval_control = permutation_test(control, 999, 29, params);

  bool ok = nc.accuracy_mean >= 0.90 && pval <= 0.01 && nc_control.accuracy_mean >= 0.35 &&
            nc_control.accuracy_mean <= 0.65 && pval_control > 0.05;
  std::ostringstream detail;
  detail << "distinct: acc=" << nc.accuracy_mean << " p=" << pval
         << "; identical control: acc=" << nc_control.accuracy_mean << " p=" << pval_control;
  double secs = t.elapsed();
  if (secs >= 180.0) { ok = false; detail << "; runtime budget exceeded"; }
  criterion(7, "classification analog", ok, detail.str(), secs);
}

void crit8_ml_oracles() {
  Timer t;
  bool grad_ok = true;
  RandomStream rs(808);
  for (int trial = 0; trial < 20 && grad_ok; ++trial) {
    const std::size_t n = 14, d = 5;
    std::vector<std::vector<double>> X(n, std::vector<double>(d));
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : X[i]) v = rs.normal();
      y[i] = rs.bernoulli(0.5);
    }
    y[0] = 0;
    y[1] = 1;
    LogisticRegression lr;
    lr.l2_lambda = 0.5;
    std::vector<double> w(d);
    for (auto& v : w) v = rs.normal(0.0, 0.5);
    double b = rs.normal(0.0, 0.5);
    lr.set_params(w, b);
    std::vector<double> cw(n, 1.0);
    std::vector<double> gw;
    double gb;
    lr.gradient(X, y, cw, gw, gb);
    const double h = 1e-6;
    for (std::size_t j = 0; j < d && grad_ok; ++j) {
      auto wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      lr.set_params(wp, b);
      double fp = lr.objective(X, y, cw);
      lr.set_params(wm, b);
      double fm = lr.objective(X, y, cw);
      double fd = (fp - fm) / (2.0 * h);
      grad_ok = std::abs(gw[j] - fd) / std::max(1.0, std::abs(fd)) < 1e-5;
    }
  }

  // XOR: forest succeeds where the linear model cannot
  FeatureMatrix m;
  m.labels = {"a", "b"};
  RandomStream xr(33);
  for (int cx : {0, 1}) {
    for (int cy : {0, 1}) {
      for (int i = 0; i < 15; ++i) {
        m.X.push_back({cx * 4.0 + xr.normal(0.0, 0.4), cy * 4.0 + xr.normal(0.0, 0.4)});
        m.y.push_back(cx ^ cy);
      }
    }
  }
  RandomForest rf;
  rf.seed = 2;
  rf.fit(m.X, m.y);
  LogisticRegression lr;
  lr.fit(m.X, m.y);
  double rf_acc = 0.0, lr_acc = 0.0;
  for (std::size_t i = 0; i < m.X.size(); ++i) {
    rf_acc += rf.predict(m.X[i]) == m.y[i];
    lr_acc += lr.predict(m.X[i]) == m.y[i];
  }
  rf_acc /= static_cast<double>(m.X.size());
  lr_acc /= static_cast<double>(m.X.size());
  bool xor_ok = rf_acc - lr_acc >= 0.3;

  // permutation closed form on hand-counted cases
  CVParams params;
  params.folds = 3;
  params.seed = 1;
  FeatureMatrix sep;
  sep.labels = {"a", "b"};
  RandomStream sr(71);
  for (int c : {0, 1}) {
    for (int i = 0; i < 9; ++i) {
      sep.X.push_back({c * 50.0 + sr.normal(), c * 50.0 + sr.normal()});
      sep.y.push_back(c);
    }
  }
  double true_acc = 0.0;
  double p_sep = permutation_test(sep, 99, 13, params, &true_acc);
  // perfect separation: zero of 99 permutations reach accuracy 1.0
  bool perm_ok = true_acc == 1.0 && p_sep == 1.0 / 100.0;

  FeatureMatrix flat = sep;
  for (auto& row : flat.X) row.assign(row.size(), 1.0);
  double p_flat = permutation_test(flat, 99, 13, params);
  // constant features: every permutation ties the true accuracy
  perm_ok = perm_ok && p_flat == 1.0;

  std::ostringstream detail;
  detail << "grad FD ok=" << grad_ok << ", rf-lr=" << rf_acc - lr_acc
         << ", p(separable)=" << p_sep << ", p(constant)=" << p_flat;
  criterion(8, "ML correctness oracles", grad_ok && xor_ok && perm_ok, detail.str(), t.elapsed());
}

void crit9_drift_semantics(Fixture& fx) {
  Timer t;
  // duplicated session: zero drift
  const auto& feats = fx.chain_a[0].record.features;
  auto zero = drift_index(feats, feats, "entropy");
  bool zero_ok = zero.total == 0.0;

  // perturb idle dephasing mid-chain: the idle-bearing circuits are the
  // sensitive ones (echo refocuses static detuning but not Markovian flips)
  DeviceProfile perturbed = fx.torino;
  perturbed.t2_markov = 0.25;
  Seed exec{mix64(99ull)};
  SessionResult before = run_session(fx.torino, "t0", Seed{1}, exec, 1024);
  SessionResult after = run_session(perturbed, "t1", Seed{1}, exec, 1024);
  auto drift = drift_index(after.record.features, before.record.features, "entropy");

  auto sensitive = [](const std::string& cid) {
    return cid == "ramsey" || cid == "spin_echo" || cid == "crosstalk_probe";
  };
  std::string top_circuit;
  double top_delta = -1.0, sensitive_sum = 0.0, rest_sum = 0.0;
  for (const auto& [cid, delta] : drift.per_circuit_delta) {
    if (delta > top_delta) { top_delta = delta; top_circuit = cid; }
    (sensitive(cid) ? sensitive_sum : rest_sum) += delta;
  }
  bool dominate = sensitive(top_circuit) && sensitive_sum > rest_sum;
  std::ostringstream detail;
  detail << "dup total=0, perturbed total=" << drift.total << ", top=" << top_circuit
         << ", idle-bearing=" << sensitive_sum << " vs rest=" << rest_sum;
  criterion(9, "drift semantics", zero_ok && drift.total > 0.0 && dominate, detail.str(),
            t.elapsed());
}

}  // namespace

int main(int argc, char** argv) {
  std::string profile_dir = argc > 1 ? argv[1] : "profiles";
  Fixture fx;
  fx.torino = load_profile(profile_dir + "/sim_torino.profile");
  fx.brisbane = load_profile(profile_dir + "/sim_brisbane.profile");

  crit1_feature_identities();
  crit2_trivial_exactness();
  crit3_chsh_physics();
  crit4_ramsey_echo(fx);

  Timer chains;
  setenv("QDNA_FIXED_TIME", "2026-02-03T00:00:00Z", 1);
  fx.chain_a = fx.make_chain(fx.torino, 25, 1, 1000, 1024);
  fx.chain_b = fx.make_chain(fx.brisbane, 25, 1, 2000, 1024);
  fx.chain_control = fx.make_chain(fx.torino, 25, 1, 3000, 1024);
  unsetenv("QDNA_FIXED_TIME");
  std::cout << "(fixture chains: 3 devices x 25 sessions x 1024 shots in " << chains.elapsed()
            << " s)\n";

  crit5_tamper_evidence(fx);
  crit6_reproducibility(fx);
  crit7_classification(fx);
  crit8_ml_oracles();
  crit9_drift_semantics(fx);

  std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES: " + std::to_string(g_failures))
            << "\n";
  return g_failures == 0 ? 0 : 1;
}
