#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace qdna {

// splitmix64 finalizer; also the mixing step of the counter stream below.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d4a33a8c6c5d1dull;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_str(std::string_view s) {
  // FNV-1a 64-bit.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Counter-based stream: output i is a pure function of (key, i), so substreams
// derived from distinct keys are independent and order-insensitive.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key) : key_(key) {}

  static RandomStream derive(std::uint64_t master, std::string_view label,
                             std::uint64_t index = 0) {
    std::uint64_t k = mix64(master ^ mix64(hash_str(label)));
    return RandomStream(mix64(k ^ mix64(index + 0x51ed2701a9b5e3f7ull)));
  }

  std::uint64_t next_u64() { return mix64(key_ + counter_++ * 0x2545f4914f6cdd1dull); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // One standard-normal draw via Box-Muller (second value discarded).
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace qdna
