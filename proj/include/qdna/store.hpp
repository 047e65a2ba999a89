#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdna/provenance.hpp"

namespace qdna {

namespace fs = std::filesystem;

struct IndexEntry {
  std::string session_id;
  std::string record_hash;
  std::string rel_path;
};

struct AuditReport {
  bool clean = true;
  std::size_t length = 0;
  std::optional<std::size_t> first_break;  // index of first broken entry
  std::vector<std::string> findings;
};

// Append-only filesystem store: root/device_id/session_id.qdna.json plus a
// per-device index of (session_id, record_hash, path), one record per line.
class ArtifactStore {
 public:
  explicit ArtifactStore(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_);
  }

  const fs::path& root() const { return root_; }

  std::vector<IndexEntry> index(const std::string& device_id) const {
    std::vector<IndexEntry> entries;
    std::ifstream in(index_path(device_id));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ss(line);
      IndexEntry e;
      if (!std::getline(ss, e.session_id, '\t') || !std::getline(ss, e.record_hash, '\t') ||
          !std::getline(ss, e.rel_path, '\t')) {
        throw std::runtime_error("corrupt index line: " + line);
      }
      entries.push_back(std::move(e));
    }
    return entries;
  }

  std::optional<std::string> head_hash(const std::string& device_id) const {
    auto entries = index(device_id);
    if (entries.empty()) return std::nullopt;
    return entries.back().record_hash;
  }

  // Admits only artifacts that verify and extend the device chain.
  std::size_t append(const ProvenanceArtifact& artifact, EVP_PKEY* public_key,
                     const std::vector<std::uint8_t>* hmac_key = nullptr) {
    const std::string& device = artifact.record.device_id;
    const std::string& session = artifact.record.session_id;
    if (device.empty() || session.empty()) {
      throw std::invalid_argument("artifact missing device_id or session_id");
    }

    VerificationReport report = verify(artifact, public_key, hmac_key);
    if (!report.pass()) {
      std::string why;
      for (const auto& d : report.details) why += d + "; ";
      throw std::runtime_error("artifact rejected, verification failed: " + why);
    }

    auto entries = index(device);
    auto head = entries.empty() ? std::nullopt : std::optional<std::string>(entries.back().record_hash);
    if (artifact.prev_record_hash != head) {
      throw std::runtime_error("chain-link mismatch: prev_record_hash does not equal device head");
    }
    for (const auto& e : entries) {
      if (e.session_id == session) {
        throw std::runtime_error("duplicate session_id: " + session);
      }
    }

    fs::create_directories(root_ / device);
    std::string rel = device + "/" + session + ".qdna.json";
    fs::path file = root_ / rel;
    if (fs::exists(file)) throw std::runtime_error("artifact file already exists: " + rel);
    {
      std::ofstream out(file, std::ios::binary);
      out << artifact_to_bytes(artifact);
    }
    {
      std::ofstream out(index_path(device), std::ios::app);
      out << session << "\t" << artifact.record_hash << "\t" << rel << "\n";
    }
    return entries.size();
  }

  std::string get_bytes(const std::string& device_id, const std::string& session_id) const {
    for (const auto& e : index(device_id)) {
      if (e.session_id == session_id) {
        std::ifstream in(root_ / e.rel_path, std::ios::binary);
        if (!in) throw std::runtime_error("artifact file missing: " + e.rel_path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
      }
    }
    throw std::runtime_error("not found: " + device_id + "/" + session_id);
  }

  ProvenanceArtifact get(const std::string& device_id, const std::string& session_id) const {
    return artifact_from_bytes(get_bytes(device_id, session_id));
  }

  std::vector<std::string> devices() const {
    std::vector<std::string> out;
    for (const auto& entry : fs::directory_iterator(root_)) {
      if (entry.is_directory()) out.push_back(entry.path().filename().string());
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  // Walks the chain from genesis, recomputing every record hash from file
  // bytes and checking linkage; reports the first broken index.
  AuditReport audit_chain(const std::string& device_id) const {
    AuditReport report;
    auto entries = index(device_id);
    report.length = entries.size();
    std::optional<std::string> prev;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      ProvenanceArtifact a;
      try {
        std::ifstream in(root_ / e.rel_path, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        a = artifact_from_bytes(ss.str());
      } catch (const std::exception& ex) {
        report.clean = false;
        report.first_break = report.first_break ? report.first_break : std::optional<std::size_t>(i);
        report.findings.push_back("index " + std::to_string(i) + ": unreadable artifact (" + ex.what() + ")");
        break;
      }
      std::string commitment = a.redacted
          ? a.private_commitment
          : crypto::to_hex(crypto::sha256(record_private_json(a.record).dump()));
      std::string recomputed = crypto::to_hex(crypto::sha256(
          hash_preimage(canonical_public_bytes(a.record), commitment, a.prev_record_hash)));
      bool broken = false;
      if (recomputed != a.record_hash || a.record_hash != e.record_hash) {
        report.findings.push_back("index " + std::to_string(i) + ": record_hash mismatch");
        broken = true;
      }
      if (a.prev_record_hash != prev) {
        report.findings.push_back("index " + std::to_string(i) + ": chain linkage broken");
        broken = true;
      }
      if (broken) {
        report.clean = false;
        if (!report.first_break) report.first_break = i;
        break;
      }
      prev = a.record_hash;
    }
    return report;
  }

 private:
  fs::path index_path(const std::string& device_id) const {
    return root_ / device_id / "index.txt";
  }

  fs::path root_;
};

}  // namespace qdna
