#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/pem.h>
#include <openssl/rand.h>
#include <openssl/rsa.h>
#include <openssl/sha.h>

namespace qdna::crypto {

using Digest = std::array<std::uint8_t, 32>;

inline std::string to_hex(const std::uint8_t* data, std::size_t len) {
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (std::size_t i = 0; i < len; ++i) {
    out.push_back(hex[data[i] >> 4]);
    out.push_back(hex[data[i] & 0xf]);
  }
  return out;
}

inline std::string to_hex(const Digest& d) { return to_hex(d.data(), d.size()); }

inline std::string to_hex(const std::vector<std::uint8_t>& v) { return to_hex(v.data(), v.size()); }

inline std::vector<std::uint8_t> from_hex(const std::string& s) {
  if (s.size() % 2) throw std::invalid_argument("odd-length hex string");
  auto nib = [](char c) -> int {
    // lowercase only: every byte sequence has exactly one accepted encoding,
    // so a case-flipped digest cannot slip through byte-equality checks
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw std::invalid_argument("bad hex character");
  };
  std::vector<std::uint8_t> out(s.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>((nib(s[2 * i]) << 4) | nib(s[2 * i + 1]));
  }
  return out;
}

inline Digest sha256(const std::uint8_t* data, std::size_t len) {
  Digest d;
  SHA256(data, len, d.data());
  return d;
}

inline Digest sha256(const std::string& s) {
  return sha256(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
}

inline Digest hmac_sha256(const std::vector<std::uint8_t>& key, const std::string& msg) {
  Digest d;
  unsigned int len = 0;
  HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()),
       reinterpret_cast<const std::uint8_t*>(msg.data()), msg.size(), d.data(), &len);
  if (len != d.size()) throw std::runtime_error("HMAC length mismatch");
  return d;
}

inline bool digest_equal(const Digest& a, const Digest& b) {
  // constant-time compare
  std::uint8_t diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff |= a[i] ^ b[i];
  return diff == 0;
}

struct EvpKeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
using KeyPtr = std::unique_ptr<EVP_PKEY, EvpKeyDeleter>;

inline KeyPtr generate_rsa_key(int bits = 2048) {
  if (bits < 2048) throw std::invalid_argument("RSA key must be >= 2048 bits");
  EVP_PKEY* raw = EVP_RSA_gen(static_cast<unsigned int>(bits));
  if (!raw) throw std::runtime_error("RSA key generation failed");
  return KeyPtr(raw);
}

inline void write_private_pem(EVP_PKEY* key, const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "wx");
  if (!f) throw std::runtime_error("refusing to overwrite or cannot create: " + path);
  int ok = PEM_write_PrivateKey(f, key, nullptr, nullptr, 0, nullptr, nullptr);
  std::fclose(f);
  if (!ok) throw std::runtime_error("failed to write private key PEM");
}

inline void write_public_pem(EVP_PKEY* key, const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "wx");
  if (!f) throw std::runtime_error("refusing to overwrite or cannot create: " + path);
  int ok = PEM_write_PUBKEY(f, key);
  std::fclose(f);
  if (!ok) throw std::runtime_error("failed to write public key PEM");
}

inline KeyPtr load_private_pem(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "r");
  if (!f) throw std::runtime_error("cannot open key file: " + path);
  EVP_PKEY* raw = PEM_read_PrivateKey(f, nullptr, nullptr, nullptr);
  std::fclose(f);
  if (!raw) throw std::runtime_error("malformed private key PEM: " + path);
  if (EVP_PKEY_bits(raw) < 2048) {
    EVP_PKEY_free(raw);
    throw std::runtime_error("RSA key smaller than 2048 bits rejected");
  }
  return KeyPtr(raw);
}

inline KeyPtr load_public_pem(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "r");
  if (!f) throw std::runtime_error("cannot open key file: " + path);
  EVP_PKEY* raw = PEM_read_PUBKEY(f, nullptr, nullptr, nullptr);
  std::fclose(f);
  if (!raw) throw std::runtime_error("malformed public key PEM: " + path);
  return KeyPtr(raw);
}

// RSA-SHA256 with PKCS#1 v1.5 padding over the given message bytes.
inline std::vector<std::uint8_t> rsa_sign(EVP_PKEY* key, const std::uint8_t* msg,
                                          std::size_t len) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, EVP_sha256(), nullptr, key) != 1) {
    throw std::runtime_error("sign init failed");
  }
  std::size_t sig_len = 0;
  if (EVP_DigestSign(ctx.get(), nullptr, &sig_len, msg, len) != 1) {
    throw std::runtime_error("sign sizing failed");
  }
  std::vector<std::uint8_t> sig(sig_len);
  if (EVP_DigestSign(ctx.get(), sig.data(), &sig_len, msg, len) != 1) {
    throw std::runtime_error("signing failed");
  }
  sig.resize(sig_len);
  return sig;
}

inline bool rsa_verify(EVP_PKEY* key, const std::uint8_t* msg, std::size_t len,
                       const std::vector<std::uint8_t>& sig) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, EVP_sha256(), nullptr, key) != 1) {
    throw std::runtime_error("verify init failed");
  }
  return EVP_DigestVerify(ctx.get(), sig.data(), sig.size(), msg, len) == 1;
}

inline std::vector<std::uint8_t> random_key(std::size_t bytes = 32) {
  std::vector<std::uint8_t> key(bytes);
  if (RAND_bytes(key.data(), static_cast<int>(bytes)) != 1) {
    throw std::runtime_error("RAND_bytes failed");
  }
  return key;
}

inline void write_hmac_key(const std::vector<std::uint8_t>& key, const std::string& path) {
  std::ofstream probe(path, std::ios::in);
  if (probe) throw std::runtime_error("refusing to overwrite: " + path);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot create: " + path);
  out << to_hex(key) << "\n";
}

inline std::vector<std::uint8_t> load_hmac_key(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open HMAC key: " + path);
  std::string hex;
  in >> hex;
  auto key = from_hex(hex);
  if (key.size() != 32) throw std::runtime_error("HMAC key must be 32 bytes");
  return key;
}

}  // namespace qdna::crypto
