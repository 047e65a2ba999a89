// qdna: drive the probe-session trust chain and inspect its outputs.
//
// Exit codes: 0 success, 2 bad arguments, 3 I/O or config error,
// 4 verification/audit failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>

#include "qdna/classify.hpp"
#include "qdna/pipeline.hpp"
#include "qdna/store.hpp"

namespace fs = std::filesystem;
using namespace qdna;

namespace {

constexpr int kExitIo = 3;
constexpr int kExitVerify = 4;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string key_id_for(const std::string& pubkey_path) {
  return crypto::to_hex(crypto::sha256(read_file(pubkey_path))).substr(0, 16);
}

void print_report(const VerificationReport& r) {
  std::cout << "hash_ok:         " << check_name(r.hash_ok) << "\n"
            << "hmac_ok:         " << check_name(r.hmac_ok) << "\n"
            << "signature_ok:    " << check_name(r.signature_ok) << "\n"
            << "chsh_recheck_ok: " << check_name(r.chsh_recheck_ok) << "\n"
            << "chain_link_ok:   " << check_name(r.chain_link_ok) << "\n";
  for (const auto& d : r.details) std::cout << "  - " << d << "\n";
  std::cout << (r.pass() ? "PASS" : "FAIL") << "\n";
}

json report_json(const VerificationReport& r) {
  return json{{"hash_ok", check_name(r.hash_ok)},
              {"hmac_ok", check_name(r.hmac_ok)},
              {"signature_ok", check_name(r.signature_ok)},
              {"chsh_recheck_ok", check_name(r.chsh_recheck_ok)},
              {"chain_link_ok", check_name(r.chain_link_ok)},
              {"details", r.details},
              {"pass", r.pass()}};
}

int cmd_keygen(const std::string& out_dir) {
  fs::create_directories(out_dir);
  crypto::write_hmac_key(crypto::random_key(32), out_dir + "/hmac.key");
  auto key = crypto::generate_rsa_key(2048);
  crypto::write_private_pem(key.get(), out_dir + "/rsa_private.pem");
  crypto::write_public_pem(key.get(), out_dir + "/rsa_public.pem");
  std::cout << "wrote hmac.key, rsa_private.pem, rsa_public.pem to " << out_dir << "\n";
  return 0;
}

int cmd_session(const std::string& profile_path, const std::string& key_dir,
                const std::string& store_root, std::uint64_t shots, std::uint64_t master_seed,
                int count, std::optional<std::string> session_id_opt,
                const std::string& interval_label, double threshold) {
  DeviceProfile profile = load_profile(profile_path);
  auto hmac_key = crypto::load_hmac_key(key_dir + "/hmac.key");
  auto priv = crypto::load_private_pem(key_dir + "/rsa_private.pem");
  auto pub = crypto::load_public_pem(key_dir + "/rsa_public.pem");
  std::string signer = key_id_for(key_dir + "/rsa_public.pem");
  ArtifactStore store(store_root);

  for (int i = 0; i < count; ++i) {
    std::size_t chain_len = store.index(profile.device_id).size();
    std::string session_id;
    if (session_id_opt && count == 1) {
      session_id = *session_id_opt;
    } else {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "s%03zu", chain_len);
      session_id = buf;
    }
    // per-session execution substream; circuits themselves stay fixed
    Seed exec_seed{mix64(master_seed ^ mix64(chain_len + 0xa5a5ull))};
    SessionResult result = run_session(profile, session_id, Seed{master_seed}, exec_seed,
                                       shots, threshold);
    result.record.signer_key_id = signer;
    if (!interval_label.empty()) result.record.calibration_meta["interval"] = interval_label;

    auto artifact = seal(result.record, store.head_hash(profile.device_id), hmac_key, priv.get());
    store.append(artifact, pub.get(), &hmac_key);
    std::cout << profile.device_id << "/" << session_id << " " << artifact.record_hash
              << (artifact.record.chsh.pass ? " chsh=pass" : " chsh=FAIL") << "\n";
  }
  return 0;
}

int cmd_verify(const std::string& artifact_path, const std::string& pubkey_path,
               const std::string& hmac_path) {
  auto pub = crypto::load_public_pem(pubkey_path);
  ProvenanceArtifact artifact = artifact_from_bytes(read_file(artifact_path));
  std::vector<std::uint8_t> hmac_key;
  VerificationReport report;
  if (!hmac_path.empty()) {
    hmac_key = crypto::load_hmac_key(hmac_path);
    report = verify(artifact, pub.get(), &hmac_key);
  } else {
    report = verify(artifact, pub.get());
  }
  print_report(report);
  return report.pass() ? 0 : kExitVerify;
}

int cmd_audit(const std::string& store_root, const std::string& device) {
  ArtifactStore store(store_root);
  AuditReport report = store.audit_chain(device);
  std::cout << "device: " << device << "\nchain length: " << report.length << "\n";
  if (report.clean) {
    std::cout << "clean\n";
    return 0;
  }
  std::cout << "first break at index " << *report.first_break << "\n";
  for (const auto& f : report.findings) std::cout << "  - " << f << "\n";
  return kExitVerify;
}

int cmd_drift(const std::string& store_root, const std::string& device,
              const std::string& metric, const std::string& out_dir) {
  auto sessions = load_device_sessions(fs::path(store_root) / device);
  if (sessions.size() < 2) {
    std::cerr << "need at least 2 stored sessions for drift\n";
    return kExitIo;
  }
  fs::create_directories(out_dir);

  std::ofstream totals(out_dir + "/drift_totals.csv");
  std::ofstream deltas(out_dir + "/drift_per_circuit.csv");
  totals << "session_from,session_to,metric,total\n";
  deltas << "session_from,session_to,circuit_id,metric,delta\n";
  for (std::size_t i = 1; i < sessions.size(); ++i) {
    DriftReport r = drift_index(sessions[i].second, sessions[i - 1].second, metric);
    totals << sessions[i - 1].first << "," << sessions[i].first << "," << metric << ","
           << r.total << "\n";
    for (const auto& [cid, d] : r.per_circuit_delta) {
      deltas << sessions[i - 1].first << "," << sessions[i].first << "," << cid << ","
             << metric << "," << d << "\n";
    }
  }

  DistanceMatrix dm = session_distance_matrix(sessions, metric);
  std::ofstream dist(out_dir + "/distance_matrix.csv");
  dist << "session";
  for (const auto& s : dm.sessions) dist << "," << s;
  dist << "\n";
  for (std::size_t i = 0; i < dm.sessions.size(); ++i) {
    dist << dm.sessions[i];
    for (double v : dm.D[i]) dist << "," << v;
    dist << "\n";
  }
  std::cout << "wrote drift_totals.csv, drift_per_circuit.csv, distance_matrix.csv to "
            << out_dir << "\n";
  return 0;
}

int cmd_report(const std::string& store_root, const std::vector<std::string>& devices,
               const std::string& out_dir) {
  fs::create_directories(out_dir);
  ArtifactStore store(store_root);
  auto list = devices.empty() ? store.devices() : devices;
  for (const auto& device : list) {
    auto sessions = load_device_sessions(fs::path(store_root) / device);
    std::ofstream out(out_dir + "/" + device + "_features.csv");
    write_features_csv(sessions, out);
    std::cout << "wrote " << device << "_features.csv (" << sessions.size() << " sessions)\n";
  }
  return 0;
}

int cmd_classify(const std::string& dev_a, const std::string& dev_b,
                 const std::vector<std::string>& metrics, double min_presence, int folds,
                 int n_perm, bool opt_threshold, std::uint64_t seed,
                 const std::string& out_dir) {
  auto files_a = load_feature_files(dev_a);
  auto files_b = load_feature_files(dev_b);
  if (files_a.empty() || files_b.empty()) {
    std::cerr << "no feature files found\n";
    return kExitIo;
  }
  std::string label_a = fs::path(dev_a).filename().string();
  std::string label_b = fs::path(dev_b).filename().string();
  FeatureMatrix m = assemble_matrix(files_a, files_b, label_a, label_b,
                                    metrics.empty() ? default_metrics() : metrics, min_presence);
  CVParams params;
  params.folds = folds;
  params.opt_threshold = opt_threshold;
  params.seed = seed;

  fs::create_directories(out_dir);
  json out = json::object();
  out["devices"] = {label_a, label_b};
  out["sessions"] = m.X.size();
  out["columns"] = m.column_ids.size();
  out["folds"] = folds;

  std::ofstream folds_csv(out_dir + "/cv_folds.csv");
  folds_csv << "model,fold,accuracy,auc,precision_macro,recall_macro,f1_macro,"
               "threshold,tn,fp,fn,tp\n";
  for (ModelKind kind : {ModelKind::nearest_centroid, ModelKind::logistic_regression,
                         ModelKind::random_forest}) {
    CVReport r = cross_validate(kind, m, params);
    json jr = {{"accuracy_mean", r.accuracy_mean}, {"accuracy_std", r.accuracy_std},
               {"auc_mean", r.auc_mean},           {"auc_std", r.auc_std},
               {"precision_macro", r.precision_macro},
               {"recall_macro", r.recall_macro},   {"f1_macro", r.f1_macro},
               {"threshold_optimized", r.threshold_optimized}};
    out["models"][r.model] = jr;
    for (std::size_t f = 0; f < r.per_fold.size(); ++f) {
      const auto& fm = r.per_fold[f];
      folds_csv << r.model << "," << f << "," << fm.accuracy << "," << fm.auc << ","
                << fm.precision_macro << "," << fm.recall_macro << "," << fm.f1_macro << ","
                << fm.threshold << "," << fm.confusion[0][0] << "," << fm.confusion[0][1]
                << "," << fm.confusion[1][0] << "," << fm.confusion[1][1] << "\n";
    }
    std::cout << r.model << ": acc " << r.accuracy_mean << " +- " << r.accuracy_std
              << ", auc " << r.auc_mean << "\n";
  }

  double true_acc = 0.0;
  double pval = permutation_test(m, n_perm, seed, params, &true_acc);
  out["permutation"] = {{"model", "nearest_centroid_l1"},
                        {"n_perm", n_perm},
                        {"true_accuracy", true_acc},
                        {"p_value", pval}};
  std::cout << "permutation p-value (NC): " << pval << "\n";

  std::ofstream report(out_dir + "/cv_report.json");
  report << out.dump(2) << "\n";
  std::cout << "wrote cv_report.json, cv_folds.csv to " << out_dir << "\n";
  return 0;
}

int cmd_serve(const std::string& store_root, const std::string& pubkey_path,
              const std::string& host, int port) {
  ArtifactStore store(store_root);
  auto pub = crypto::load_public_pem(pubkey_path);

  httplib::Server server;
  server.Get(R"(/artifact/([^/]+)/([^/]+))",
             [&](const httplib::Request& req, httplib::Response& res) {
               try {
                 res.set_content(store.get_bytes(req.matches[1], req.matches[2]),
                                 "application/json");
               } catch (const std::exception& e) {
                 res.status = 404;
                 res.set_content(json{{"error", e.what()}}.dump() + "\n", "application/json");
               }
             });
  server.Post("/verify", [&](const httplib::Request& req, httplib::Response& res) {
    try {
      ProvenanceArtifact artifact = artifact_from_bytes(req.body);
      res.set_content(report_json(verify(artifact, pub.get())).dump() + "\n",
                      "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump() + "\n", "application/json");
    }
  });

  std::cout << "serving read-only verification API on " << host << ":" << port << "\n";
  if (!server.listen(host, port)) {
    std::cerr << "bind failed on " << host << ":" << port << "\n";
    return kExitIo;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QDNA-ID trust chain: probe sessions, sealed provenance, device analytics"};
  app.require_subcommand(1);

  // keygen
  auto* keygen = app.add_subcommand("keygen", "generate HMAC secret and RSA-2048 keypair");
  std::string key_out;
  keygen->add_option("--out", key_out, "output directory")->required();

  // session
  auto* session = app.add_subcommand("session", "run a probe session and append it to the store");
  std::string profile_path, key_dir, store_root = "store", interval_label;
  std::uint64_t shots = 1024, master_seed = 1;
  int count = 1;
  double threshold = 2.0;
  std::string session_id;
  session->add_option("--profile", profile_path, "device profile config")->required();
  session->add_option("--keys", key_dir, "key directory from keygen")->required();
  session->add_option("--store", store_root, "store root directory");
  session->add_option("--shots", shots, "shots per circuit (default 1024)");
  session->add_option("--master-seed", master_seed, "circuit-suite master seed");
  session->add_option("--count", count, "number of sessions to run");
  session->add_option("--session-id", session_id, "explicit session id (single session only)");
  session->add_option("--interval", interval_label, "session cadence label, metadata only");
  session->add_option("--chsh-threshold", threshold, "CHSH pass threshold (default 2.0)");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "verify one artifact file");
  std::string artifact_path, pubkey_path, hmac_path;
  verify_cmd->add_option("artifact", artifact_path, ".qdna.json file")->required();
  verify_cmd->add_option("--pubkey", pubkey_path, "RSA public key PEM")->required();
  verify_cmd->add_option("--hmac-key", hmac_path, "optional HMAC key file");

  // audit
  auto* audit = app.add_subcommand("audit", "walk and re-hash one device chain");
  std::string audit_store = "store", audit_device;
  audit->add_option("--store", audit_store, "store root directory");
  audit->add_option("--device", audit_device, "device id")->required();

  // drift
  auto* drift = app.add_subcommand("drift", "per-circuit drift tables and distance matrix");
  std::string drift_store = "store", drift_device, drift_metric = "entropy", drift_out = "reports";
  drift->add_option("--store", drift_store, "store root directory");
  drift->add_option("--device", drift_device, "device id")->required();
  drift->add_option("--metric", drift_metric, "feature field (default entropy)");
  drift->add_option("--out", drift_out, "output directory");

  // report
  auto* report = app.add_subcommand("report", "flat per-run feature series CSV");
  std::string report_store = "store", report_out = "reports";
  std::vector<std::string> report_devices;
  report->add_option("--store", report_store, "store root directory");
  report->add_option("--device", report_devices, "device ids (default: all)");
  report->add_option("--out", report_out, "output directory");

  // classify
  auto* classify = app.add_subcommand("classify", "two-device CV classification and permutation test");
  std::string dev_a, dev_b, classify_out = "reports";
  std::vector<std::string> metrics;
  double min_presence = 0.9;
  int folds = 6, n_perm = 999;
  bool opt_threshold = false;
  std::uint64_t classify_seed = 1;
  classify->add_option("--dev-a", dev_a, "device A artifact directory")->required();
  classify->add_option("--dev-b", dev_b, "device B artifact directory")->required();
  classify->add_option("--metrics", metrics, "feature fields (default: p0 entropy js_uniform gini parity_bias)");
  classify->add_option("--min-presence", min_presence, "circuit presence fraction (default 0.9)");
  classify->add_option("--folds", folds, "stratified CV folds (default 6)");
  classify->add_option("--n-perm", n_perm, "permutations (default 999)");
  classify->add_flag("--opt-threshold", opt_threshold, "pick threshold on test scores (optimistic)");
  classify->add_option("--seed", classify_seed, "pipeline seed");
  classify->add_option("--out", classify_out, "output directory");

  // serve
  auto* serve = app.add_subcommand("serve", "read-only verification endpoint");
  std::string serve_store = "store", serve_pubkey, serve_host = "127.0.0.1";
  int serve_port = 8080;
  serve->add_option("--store", serve_store, "store root directory");
  serve->add_option("--pubkey", serve_pubkey, "RSA public key PEM")->required();
  serve->add_option("--host", serve_host, "bind address");
  serve->add_option("--port", serve_port, "bind port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (keygen->parsed()) return cmd_keygen(key_out);
    if (session->parsed()) {
      return cmd_session(profile_path, key_dir, store_root, shots, master_seed, count,
                         session_id.empty() ? std::nullopt : std::optional(session_id),
                         interval_label, threshold);
    }
    if (verify_cmd->parsed()) return cmd_verify(artifact_path, pubkey_path, hmac_path);
    if (audit->parsed()) return cmd_audit(audit_store, audit_device);
    if (drift->parsed()) return cmd_drift(drift_store, drift_device, drift_metric, drift_out);
    if (report->parsed()) return cmd_report(report_store, report_devices, report_out);
    if (classify->parsed()) {
      return cmd_classify(dev_a, dev_b, metrics, min_presence, folds, n_perm, opt_threshold,
                          classify_seed, classify_out);
    }
    if (serve->parsed()) return cmd_serve(serve_store, serve_pubkey, serve_host, serve_port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 2;
}
