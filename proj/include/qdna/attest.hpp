#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "qdna/sim.hpp"

namespace qdna {

struct ChshEvidence {
  double E_ab = 0.0;
  double E_ab_p = 0.0;
  double E_ap_b = 0.0;
  double E_ap_bp = 0.0;
  double S = 0.0;
  std::uint64_t shots_per_setting = 0;
  double threshold = 2.0;
  bool pass = false;
};

// E = (N00 + N11 - N01 - N10) / shots over 2-bit outcomes.
inline double correlation_E(const CountsTable& counts) {
  if (counts.shots < 1) throw std::invalid_argument("empty counts");
  std::int64_t signed_sum = 0;
  for (const auto& [bits, n] : counts.counts) {
    if (bits.size() != 2) throw std::invalid_argument("correlation_E needs 2-bit outcomes");
    int parity = (bits[0] - '0') ^ (bits[1] - '0');
    signed_sum += parity ? -static_cast<std::int64_t>(n) : static_cast<std::int64_t>(n);
  }
  return static_cast<double>(signed_sum) / static_cast<double>(counts.shots);
}

inline double chsh_S(double e_ab, double e_ab_p, double e_ap_b, double e_ap_bp) {
  for (double e : {e_ab, e_ab_p, e_ap_b, e_ap_bp}) {
    if (e < -1.0 || e > 1.0) throw std::invalid_argument("correlation out of [-1,1]");
  }
  return e_ab + e_ab_p + e_ap_b - e_ap_bp;
}

// Binomial error propagation: sigma_E = sqrt((1-E^2)/shots), sigma_S in quadrature.
inline double chsh_sigma(const ChshEvidence& ev) {
  auto var_e = [&](double e) {
    return (1.0 - e * e) / static_cast<double>(ev.shots_per_setting);
  };
  return std::sqrt(var_e(ev.E_ab) + var_e(ev.E_ab_p) + var_e(ev.E_ap_b) + var_e(ev.E_ap_bp));
}

// Settings in fixed order: ab, ab', a'b, a'b'.
inline ChshEvidence attest_session(const std::array<CountsTable, 4>& chsh_counts,
                                   double threshold = 2.0) {
  for (const auto& t : chsh_counts) {
    if (t.shots != chsh_counts[0].shots) {
      throw std::invalid_argument("mismatched shot counts across CHSH settings");
    }
  }
  ChshEvidence ev;
  ev.E_ab = correlation_E(chsh_counts[0]);
  ev.E_ab_p = correlation_E(chsh_counts[1]);
  ev.E_ap_b = correlation_E(chsh_counts[2]);
  ev.E_ap_bp = correlation_E(chsh_counts[3]);
  ev.S = chsh_S(ev.E_ab, ev.E_ab_p, ev.E_ap_b, ev.E_ap_bp);
  ev.shots_per_setting = chsh_counts[0].shots;
  ev.threshold = threshold;
  ev.pass = ev.S >= threshold;
  return ev;
}

}  // namespace qdna
