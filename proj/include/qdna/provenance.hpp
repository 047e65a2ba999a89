#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qdna/attest.hpp"
#include "qdna/crypto.hpp"
#include "qdna/features.hpp"

namespace qdna {

using json = nlohmann::json;

struct CircuitEntry {
  std::string circuit_id;
  std::uint64_t seed = 0;  // private in redacted mode
  std::uint64_t gate_count = 0;
};

struct SessionRecord {
  std::string schema_version = "1";
  std::string device_id;
  std::string session_id;
  std::string timestamp_utc;  // RFC-3339
  std::uint64_t master_seed = 0;
  std::uint64_t shots = 0;
  std::vector<CircuitEntry> circuits;
  std::map<std::string, FeatureVector> features;       // circuit_id -> features
  std::map<std::string, std::string> counts_digest;    // circuit_id -> sha256 hex
  ChshEvidence chsh;
  std::map<std::string, std::string> calibration_meta;
  std::string signer_key_id;
};

struct ProvenanceArtifact {
  SessionRecord record;
  bool has_private = true;  // false once redacted
  std::optional<std::string> prev_record_hash;  // hex, null for genesis
  std::string record_hash;      // hex
  std::string hmac_tag;         // hex
  std::string signature;        // hex
  bool redacted = false;
  std::string private_commitment;  // hex, present iff redacted
};

struct VerificationReport {
  enum class Check { ok, fail, skipped };
  Check hash_ok = Check::fail;
  Check hmac_ok = Check::skipped;
  Check signature_ok = Check::fail;
  Check chsh_recheck_ok = Check::fail;
  Check chain_link_ok = Check::fail;
  std::vector<std::string> details;

  bool pass() const {
    for (Check c : {hash_ok, hmac_ok, signature_ok, chsh_recheck_ok, chain_link_ok}) {
      if (c == Check::fail) return false;
    }
    return true;
  }
};

inline const char* check_name(VerificationReport::Check c) {
  switch (c) {
    case VerificationReport::Check::ok: return "ok";
    case VerificationReport::Check::fail: return "fail";
    case VerificationReport::Check::skipped: return "skipped";
  }
  return "?";
}

namespace detail {

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string("non-finite value in ") + what);
}

inline json feature_json(const FeatureVector& f) {
  json j;
  for (const auto& name : FeatureVector::field_names()) {
    double v = f.field(name);
    require_finite(v, "features");
    j[name] = v;
  }
  return j;
}

inline FeatureVector feature_from_json(const json& j) {
  FeatureVector f;
  f.p0 = j.at("p0");
  f.p1 = j.at("p1");
  f.entropy = j.at("entropy");
  f.entropy_norm = j.at("entropy_norm");
  f.perplexity = j.at("perplexity");
  f.gini = j.at("gini");
  f.parity_bias = j.at("parity_bias");
  f.bernoulli_var = j.at("bernoulli_var");
  f.tv_uniform = j.at("tv_uniform");
  f.kl_uniform = j.at("kl_uniform");
  f.js_uniform = j.at("js_uniform");
  f.support = j.at("support");
  return f;
}

inline json chsh_json(const ChshEvidence& e) {
  return json{{"E_ab", e.E_ab},       {"E_ab_p", e.E_ab_p},
              {"E_ap_b", e.E_ap_b},   {"E_ap_bp", e.E_ap_bp},
              {"S", e.S},             {"shots_per_setting", e.shots_per_setting},
              {"threshold", e.threshold}, {"pass", e.pass}};
}

inline ChshEvidence chsh_from_json(const json& j) {
  ChshEvidence e;
  e.E_ab = j.at("E_ab");
  e.E_ab_p = j.at("E_ab_p");
  e.E_ap_b = j.at("E_ap_b");
  e.E_ap_bp = j.at("E_ap_bp");
  e.S = j.at("S");
  e.shots_per_setting = j.at("shots_per_setting");
  e.threshold = j.at("threshold");
  e.pass = j.at("pass");
  return e;
}

}  // namespace detail

// Public half of the record: everything a redacted artifact still carries.
inline json record_public_json(const SessionRecord& r) {
  json circuits = json::array();
  for (const auto& c : r.circuits) {
    circuits.push_back({{"circuit_id", c.circuit_id}, {"gate_count", c.gate_count}});
  }
  json features = json::object();
  for (const auto& [cid, f] : r.features) features[cid] = detail::feature_json(f);
  return json{{"schema_version", r.schema_version},
              {"device_id", r.device_id},
              {"session_id", r.session_id},
              {"timestamp_utc", r.timestamp_utc},
              {"shots", r.shots},
              {"circuits", circuits},
              {"features", features},
              {"chsh", detail::chsh_json(r.chsh)},
              {"calibration_meta", r.calibration_meta},
              {"signer_key_id", r.signer_key_id}};
}

// Private half: seeds and raw-counts digests, stripped in redacted mode.
inline json record_private_json(const SessionRecord& r) {
  json seeds = json::object();
  for (const auto& c : r.circuits) seeds[c.circuit_id] = c.seed;
  return json{{"master_seed", r.master_seed},
              {"circuit_seeds", seeds},
              {"counts_digest", r.counts_digest}};
}

// Canonical bytes: compact dump with lexicographically sorted keys.
// The hash preimage binds public bytes, the private-block commitment, and the
// previous record hash, so a redacted artifact hashes to the same digest.
inline std::string canonical_public_bytes(const SessionRecord& r) {
  return record_public_json(r).dump();
}

inline std::string hash_preimage(const std::string& public_bytes,
                                 const std::string& commitment_hex,
                                 const std::optional<std::string>& prev_hash_hex) {
  return public_bytes + "\n" + commitment_hex + "\n" + (prev_hash_hex ? *prev_hash_hex : "");
}

inline ProvenanceArtifact seal(const SessionRecord& record,
                               std::optional<std::string> prev_hash_hex,
                               const std::vector<std::uint8_t>& hmac_key,
                               EVP_PKEY* signing_key) {
  if (hmac_key.size() != 32) throw std::invalid_argument("HMAC key must be 32 bytes");
  if (EVP_PKEY_bits(signing_key) < 2048) {
    throw std::invalid_argument("signing key must be >= 2048 bits");
  }
  ProvenanceArtifact a;
  a.record = record;
  a.prev_record_hash = std::move(prev_hash_hex);

  std::string commitment = crypto::to_hex(crypto::sha256(record_private_json(record).dump()));
  std::string preimage =
      hash_preimage(canonical_public_bytes(record), commitment, a.prev_record_hash);
  crypto::Digest hash = crypto::sha256(preimage);
  a.record_hash = crypto::to_hex(hash);
  a.hmac_tag = crypto::to_hex(crypto::hmac_sha256(hmac_key, preimage));
  a.signature = crypto::to_hex(crypto::rsa_sign(signing_key, hash.data(), hash.size()));
  return a;
}

inline ProvenanceArtifact redact(const ProvenanceArtifact& artifact) {
  if (artifact.redacted) throw std::invalid_argument("artifact already redacted");
  ProvenanceArtifact a = artifact;
  a.private_commitment =
      crypto::to_hex(crypto::sha256(record_private_json(artifact.record).dump()));
  a.redacted = true;
  a.has_private = false;
  a.record.master_seed = 0;
  for (auto& c : a.record.circuits) c.seed = 0;
  a.record.counts_digest.clear();
  return a;
}

inline VerificationReport verify(const ProvenanceArtifact& a, EVP_PKEY* public_key,
                                 const std::vector<std::uint8_t>* hmac_key = nullptr) {
  using Check = VerificationReport::Check;
  VerificationReport r;

  std::string commitment = a.redacted
      ? a.private_commitment
      : crypto::to_hex(crypto::sha256(record_private_json(a.record).dump()));
  std::string preimage =
      hash_preimage(canonical_public_bytes(a.record), commitment, a.prev_record_hash);
  crypto::Digest hash = crypto::sha256(preimage);
  std::string hash_hex = crypto::to_hex(hash);

  r.hash_ok = hash_hex == a.record_hash ? Check::ok : Check::fail;
  if (r.hash_ok == Check::fail) r.details.push_back("record_hash mismatch");

  if (hmac_key) {
    crypto::Digest tag = crypto::hmac_sha256(*hmac_key, preimage);
    bool ok = false;
    try {
      auto stored = crypto::from_hex(a.hmac_tag);
      ok = stored.size() == tag.size() &&
           crypto::digest_equal(tag, *reinterpret_cast<const crypto::Digest*>(stored.data()));
    } catch (const std::exception&) {
    }
    r.hmac_ok = ok ? Check::ok : Check::fail;
    if (!ok) r.details.push_back("hmac_tag mismatch");
  }

  bool sig_ok = false;
  try {
    sig_ok = crypto::rsa_verify(public_key, hash.data(), hash.size(),
                                crypto::from_hex(a.signature));
  } catch (const std::exception&) {
  }
  r.signature_ok = sig_ok ? Check::ok : Check::fail;
  if (!sig_ok) r.details.push_back("signature invalid over recomputed record_hash");

  const ChshEvidence& e = a.record.chsh;
  double s_re = e.E_ab + e.E_ab_p + e.E_ap_b - e.E_ap_bp;
  bool chsh_ok = std::abs(s_re - e.S) <= 1e-9 && e.pass == (s_re >= e.threshold);
  r.chsh_recheck_ok = chsh_ok ? Check::ok : Check::fail;
  if (!chsh_ok) r.details.push_back("stored CHSH S or pass flag inconsistent with E values");

  bool link_ok = true;
  if (a.prev_record_hash) {
    link_ok = a.prev_record_hash->size() == 64;
    if (link_ok) {
      try { crypto::from_hex(*a.prev_record_hash); } catch (const std::exception&) { link_ok = false; }
    }
  }
  r.chain_link_ok = link_ok ? Check::ok : Check::fail;
  if (!link_ok) r.details.push_back("malformed prev_record_hash");
  return r;
}

// -------- artifact file format (.qdna.json, compact) --------

inline json artifact_to_json(const ProvenanceArtifact& a) {
  json j;
  j["record"] = json{{"public", record_public_json(a.record)}};
  if (a.has_private) j["record"]["private"] = record_private_json(a.record);
  j["prev_record_hash"] = a.prev_record_hash ? json(*a.prev_record_hash) : json(nullptr);
  j["record_hash"] = a.record_hash;
  j["hmac_tag"] = a.hmac_tag;
  j["signature"] = a.signature;
  j["redacted"] = a.redacted;
  if (a.redacted) j["private_commitment"] = a.private_commitment;
  return j;
}

inline std::string artifact_to_bytes(const ProvenanceArtifact& a) {
  return artifact_to_json(a).dump() + "\n";
}

inline ProvenanceArtifact artifact_from_json(const json& j) {
  ProvenanceArtifact a;
  const json& pub = j.at("record").at("public");
  SessionRecord& r = a.record;
  r.schema_version = pub.at("schema_version");
  r.device_id = pub.at("device_id");
  r.session_id = pub.at("session_id");
  r.timestamp_utc = pub.at("timestamp_utc");
  r.shots = pub.at("shots");
  for (const auto& c : pub.at("circuits")) {
    r.circuits.push_back({c.at("circuit_id"), 0, c.at("gate_count")});
  }
  for (auto it = pub.at("features").begin(); it != pub.at("features").end(); ++it) {
    r.features[it.key()] = detail::feature_from_json(it.value());
  }
  r.chsh = detail::chsh_from_json(pub.at("chsh"));
  r.calibration_meta = pub.at("calibration_meta").get<std::map<std::string, std::string>>();
  r.signer_key_id = pub.at("signer_key_id");

  a.redacted = j.at("redacted");
  if (a.redacted) {
    a.has_private = false;
    a.private_commitment = j.at("private_commitment");
  } else {
    const json& priv = j.at("record").at("private");
    r.master_seed = priv.at("master_seed");
    for (auto& c : r.circuits) {
      c.seed = priv.at("circuit_seeds").at(c.circuit_id).get<std::uint64_t>();
    }
    r.counts_digest = priv.at("counts_digest").get<std::map<std::string, std::string>>();
  }
  if (!j.at("prev_record_hash").is_null()) {
    a.prev_record_hash = j.at("prev_record_hash").get<std::string>();
  }
  a.record_hash = j.at("record_hash");
  a.hmac_tag = j.at("hmac_tag");
  a.signature = j.at("signature");
  return a;
}

inline ProvenanceArtifact artifact_from_bytes(const std::string& bytes) {
  json j = json::parse(bytes);
  // reject parse-equivalent re-encodings (whitespace, key order, exponent
  // case): an artifact is only valid in its one canonical byte form
  if (j.dump() + "\n" != bytes) throw std::invalid_argument("artifact bytes are not canonical");
  return artifact_from_json(j);
}

// Canonical counts digest used in the private block.
inline std::string counts_digest_hex(const CountsTable& t) {
  json j;
  j["shots"] = t.shots;
  j["counts"] = t.counts;
  return crypto::to_hex(crypto::sha256(j.dump()));
}

}  // namespace qdna
