#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdna/sim.hpp"

namespace qdna {

// Empirical outcome distribution; K is the full outcome space 2^n, not the
// observed support, so absent outcomes enter the uniform-reference divergences.
struct ProbDist {
  std::map<std::string, double> p;
  std::uint64_t K = 0;
};

struct FeatureVector {
  double p0 = 0.0;           // mass on the all-zeros string
  double p1 = 0.0;           // 1 - p0
  double entropy = 0.0;      // nats
  double entropy_norm = 0.0;
  double perplexity = 1.0;
  double gini = 0.0;
  double parity_bias = 0.0;  // P_even - P_odd, parity = XOR of bits
  double bernoulli_var = 0.0;
  double tv_uniform = 0.0;
  double kl_uniform = 0.0;   // nats
  double js_uniform = 0.0;   // nats
  double support = 0.0;      // nonzero-probability outcome count

  double field(const std::string& name) const {
    if (name == "p0") return p0;
    if (name == "p1") return p1;
    if (name == "entropy") return entropy;
    if (name == "entropy_norm") return entropy_norm;
    if (name == "perplexity") return perplexity;
    if (name == "gini") return gini;
    if (name == "parity_bias") return parity_bias;
    if (name == "bernoulli_var") return bernoulli_var;
    if (name == "tv_uniform") return tv_uniform;
    if (name == "kl_uniform") return kl_uniform;
    if (name == "js_uniform") return js_uniform;
    if (name == "support") return support;
    throw std::invalid_argument("unknown feature metric: " + name);
  }

  static const std::vector<std::string>& field_names() {
    static const std::vector<std::string> names = {
        "p0", "p1", "entropy", "entropy_norm", "perplexity", "gini",
        "parity_bias", "bernoulli_var", "tv_uniform", "kl_uniform",
        "js_uniform", "support"};
    return names;
  }
};

inline ProbDist distribution_from_counts(const CountsTable& counts) {
  if (counts.shots < 1) throw std::invalid_argument("shots must be >= 1");
  ProbDist d;
  std::size_t bits = 0;
  bool first = true;
  for (const auto& [key, n] : counts.counts) {
    if (first) { bits = key.size(); first = false; }
    if (key.size() != bits) throw std::invalid_argument("inconsistent outcome key lengths");
    d.p[key] = static_cast<double>(n) / static_cast<double>(counts.shots);
  }
  d.K = std::uint64_t{1} << bits;
  return d;
}

namespace detail {

inline double plogp(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

inline int bit_parity(const std::string& key) {
  int par = 0;
  for (char c : key) par ^= (c - '0');
  return par;
}

}  // namespace detail

// Shannon entropy, normalized entropy, perplexity, Gini impurity, parity
// bias, and Bernoulli variance of the all-zeros mass. Natural log throughout.
inline FeatureVector fingerprint(const ProbDist& dist) {
  FeatureVector f;
  const double lnK = std::log(static_cast<double>(dist.K));
  std::size_t bits = 0;
  while ((std::uint64_t{1} << bits) < dist.K) ++bits;
  const std::string zeros(bits, '0');

  double h = 0.0, sum_sq = 0.0, p_even = 0.0;
  for (const auto& [key, p] : dist.p) {
    h -= detail::plogp(p);
    sum_sq += p * p;
    if (detail::bit_parity(key) == 0) p_even += p;
    if (p > 0.0) f.support += 1.0;
  }
  auto it = dist.p.find(zeros);
  f.p0 = it == dist.p.end() ? 0.0 : it->second;
  f.p1 = 1.0 - f.p0;
  f.entropy = h;
  f.entropy_norm = lnK > 0.0 ? h / lnK : 0.0;
  f.perplexity = std::exp(h);
  f.gini = 1.0 - sum_sq;
  f.parity_bias = 2.0 * p_even - 1.0;
  f.bernoulli_var = f.p0 * (1.0 - f.p0);
  return f;
}

struct Divergences {
  double tv = 0.0;
  double kl = 0.0;
  double js = 0.0;
};

// TV, KL, and JS against the uniform reference u_i = 1/K over the full space.
inline Divergences divergences(const ProbDist& dist) {
  const double u = 1.0 / static_cast<double>(dist.K);
  double tv = 0.0, kl = 0.0, js = 0.0;
  std::uint64_t present = 0;
  for (const auto& [key, p] : dist.p) {
    tv += std::abs(p - u);
    if (p > 0.0) kl += p * std::log(p / u);
    double m = (p + u) / 2.0;
    js += 0.5 * (p > 0.0 ? p * std::log(p / m) : 0.0);
    js += 0.5 * u * std::log(u / m);
    ++present;
  }
  // absent outcomes: p_i = 0, u_i = 1/K
  const double absent = static_cast<double>(dist.K - present);
  tv += absent * u;
  js += absent * 0.5 * u * std::log(u / (u / 2.0));
  return {0.5 * tv, kl, js};
}

inline FeatureVector full_features(const ProbDist& dist) {
  FeatureVector f = fingerprint(dist);
  Divergences d = divergences(dist);
  f.tv_uniform = d.tv;
  f.kl_uniform = d.kl;
  f.js_uniform = d.js;
  return f;
}

using SessionFeatures = std::map<std::string, FeatureVector>;  // circuit_id -> features

struct DriftReport {
  std::map<std::string, double> per_circuit_delta;
  double total = 0.0;
  std::string metric;
};

// Drift(t) = sum_c |m_c^t - m_c^(t-1)| over circuits shared by both sessions.
inline DriftReport drift_index(const SessionFeatures& curr, const SessionFeatures& prev,
                               const std::string& metric = "entropy") {
  DriftReport r;
  r.metric = metric;
  for (const auto& [cid, fv] : curr) {
    auto it = prev.find(cid);
    if (it == prev.end()) continue;
    double delta = std::abs(fv.field(metric) - it->second.field(metric));
    r.per_circuit_delta[cid] = delta;
    r.total += delta;
  }
  if (r.per_circuit_delta.empty()) throw std::invalid_argument("sessions share no circuits");
  return r;
}

struct DistanceMatrix {
  std::vector<std::string> sessions;
  std::vector<std::vector<double>> D;
  std::string metric;
};

inline DistanceMatrix session_distance_matrix(
    const std::vector<std::pair<std::string, SessionFeatures>>& sessions,
    const std::string& metric = "entropy") {
  if (sessions.size() < 2) throw std::invalid_argument("need >= 2 sessions");
  DistanceMatrix m;
  m.metric = metric;
  const std::size_t n = sessions.size();
  m.D.assign(n, std::vector<double>(n, 0.0));
  for (const auto& [sid, feats] : sessions) m.sessions.push_back(sid);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d = 0.0;
      for (const auto& [cid, fv] : sessions[i].second) {
        auto it = sessions[j].second.find(cid);
        if (it != sessions[j].second.end()) {
          d += std::abs(fv.field(metric) - it->second.field(metric));
        }
      }
      m.D[i][j] = m.D[j][i] = d;
    }
  }
  return m;
}

// Pearson correlation per metric pair; constant columns correlate 0 by convention.
inline std::vector<std::vector<double>> correlation_matrix(
    const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 3) throw std::invalid_argument("need >= 3 rows");
  const std::size_t n = rows.size(), d = rows[0].size();
  if (d < 2) throw std::invalid_argument("need >= 2 metrics");
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
  }
  for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < d; ++j) sd[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
  }
  for (std::size_t j = 0; j < d; ++j) sd[j] = std::sqrt(sd[j]);
  std::vector<std::vector<double>> corr(d, std::vector<double>(d, 0.0));
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      if (sd[a] == 0.0 || sd[b] == 0.0) { corr[a][b] = corr[b][a] = 0.0; continue; }
      double cov = 0.0;
      for (const auto& r : rows) cov += (r[a] - mean[a]) * (r[b] - mean[b]);
      corr[a][b] = corr[b][a] = cov / (sd[a] * sd[b]);
    }
  }
  return corr;
}

}  // namespace qdna
