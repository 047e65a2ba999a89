#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qdna/features.hpp"
#include "qdna/rng.hpp"

using namespace qdna;

namespace {

// independent random distribution generator for property checks
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

ProbDist uniform_dist(std::uint64_t K) {
  std::size_t bits = 0;
  while ((std::uint64_t{1} << bits) < K) ++bits;
  ProbDist d;
  d.K = K;
  for (std::uint64_t i = 0; i < K; ++i) {
    std::string key(bits, '0');
    for (std::size_t b = 0; b < bits; ++b) {
      if ((i >> b) & 1) key[bits - 1 - b] = '1';
    }
    d.p[key] = 1.0 / static_cast<double>(K);
  }
  return d;
}

}  // namespace

TEST_CASE("distribution_from_counts normalizes and sizes the outcome space") {
  CountsTable t;
  t.counts = {{"0", 512}, {"1", 512}};
  t.shots = 1024;
  auto d = distribution_from_counts(t);
  CHECK(d.K == 2);
  CHECK(d.p.at("0") == 0.5);

  t.counts = {{"00", 256}, {"11", 768}};
  auto d2 = distribution_from_counts(t);
  CHECK(d2.K == 4);
  CHECK(d2.p.at("00") == 0.25);
  CHECK(d2.p.at("11") == 0.75);

  t.counts = {{"0", 1}, {"00", 1}};
  t.shots = 2;
  CHECK_THROWS(distribution_from_counts(t));
}

TEST_CASE("uniform distribution hits the maximum-entropy corner exactly") {
  auto f = full_features(uniform_dist(4));
  CHECK(std::abs(f.entropy - std::log(4.0)) < 1e-12);
  CHECK(std::abs(f.entropy_norm - 1.0) < 1e-12);
  CHECK(std::abs(f.perplexity - 4.0) < 1e-9);
  CHECK(std::abs(f.gini - 0.75) < 1e-12);
  CHECK(f.support == 4.0);
  CHECK(std::abs(f.tv_uniform) < 1e-12);
  CHECK(std::abs(f.kl_uniform) < 1e-12);
  CHECK(std::abs(f.js_uniform) < 1e-12);
}

TEST_CASE("point mass hits the degenerate corner exactly") {
  ProbDist d;
  d.K = 4;
  d.p = {{"00", 1.0}};
  auto f = full_features(d);
  CHECK(f.entropy == 0.0);
  CHECK(f.perplexity == 1.0);
  CHECK(f.gini == 0.0);
  CHECK(f.p0 == 1.0);
  CHECK(f.bernoulli_var == 0.0);
  CHECK(f.parity_bias == 1.0);
  CHECK(std::abs(f.tv_uniform - 0.75) < 1e-12);
  CHECK(std::abs(f.kl_uniform - std::log(4.0)) < 1e-12);
}

TEST_CASE("hand-evaluated Bell-like distribution") {
  ProbDist d;
  d.K = 4;
  d.p = {{"00", 0.5}, {"11", 0.5}};
  auto f = full_features(d);
  CHECK(std::abs(f.entropy - std::log(2.0)) < 1e-12);
  CHECK(f.parity_bias == 1.0);  // both outcomes have even parity
  CHECK(std::abs(f.gini - 0.5) < 1e-12);
}

TEST_CASE("feature identities over random distributions") {
  RandomStream rs(2024);
  for (int i = 0; i < 200; ++i) {
    std::uint64_t K = std::uint64_t{1} << (1 + rs.below(5));
    auto d = random_dist(rs, K);
    auto f = full_features(d);
    double lnK = std::log(static_cast<double>(K));
    CHECK(std::abs(f.perplexity - std::exp(f.entropy)) < 1e-9);
    CHECK(std::abs(f.kl_uniform - (lnK - f.entropy)) < 1e-9);
    CHECK((f.entropy >= -1e-12 && f.entropy <= lnK + 1e-12));
    CHECK((f.js_uniform >= -1e-12 && f.js_uniform <= std::log(2.0) + 1e-12));
    CHECK((f.tv_uniform >= -1e-12 && f.tv_uniform <= 1.0 - 1.0 / static_cast<double>(K) + 1e-12));
    CHECK((f.gini >= -1e-12 && f.gini <= 1.0 - 1.0 / static_cast<double>(K) + 1e-12));
    CHECK((f.bernoulli_var >= 0.0 && f.bernoulli_var <= 0.25));
    CHECK((f.parity_bias >= -1.0 && f.parity_bias <= 1.0));
  }
}

TEST_CASE("label-permutation leaves label-free features unchanged") {
  RandomStream rs(77);
  auto d = random_dist(rs, 8);
  // relabel by flipping every bit
  ProbDist relabeled;
  relabeled.K = d.K;
  for (const auto& [k, v] : d.p) {
    std::string flipped = k;
    for (auto& c : flipped) c = c == '0' ? '1' : '0';
    relabeled.p[flipped] = v;
  }
  auto a = full_features(d);
  auto b = full_features(relabeled);
  CHECK(std::abs(a.entropy - b.entropy) < 1e-12);
  CHECK(std::abs(a.gini - b.gini) < 1e-12);
  CHECK(std::abs(a.perplexity - b.perplexity) < 1e-12);
  CHECK(std::abs(a.tv_uniform - b.tv_uniform) < 1e-12);
  CHECK(std::abs(a.js_uniform - b.js_uniform) < 1e-12);
}

TEST_CASE("drift index over shared circuits") {
  FeatureVector a, b;
  a.entropy = 0.9;
  b.entropy = 0.7;
  SessionFeatures s1{{"ramsey", a}};
  SessionFeatures s2{{"ramsey", b}};
  auto r = drift_index(s1, s2, "entropy");
  CHECK(std::abs(r.total - 0.2) < 1e-12);

  auto zero = drift_index(s1, s1, "entropy");
  CHECK(zero.total == 0.0);
  CHECK(zero.per_circuit_delta.at("ramsey") == 0.0);

  SessionFeatures disjoint{{"pm", b}};
  CHECK_THROWS(drift_index(s1, disjoint, "entropy"));
  CHECK_THROWS(drift_index(s1, s2, "no_such_metric"));
}

TEST_CASE("session distance matrix is a symmetric zero-diagonal L1 distance") {
  FeatureVector f1, f2, f3;
  f1.entropy = 0.1;
  f2.entropy = 0.4;
  f3.entropy = 0.9;
  std::vector<std::pair<std::string, SessionFeatures>> sessions = {
      {"s1", {{"c", f1}}}, {"s2", {{"c", f2}}}, {"s3", {{"c", f3}}}};
  auto m = session_distance_matrix(sessions, "entropy");
  CHECK(std::abs(m.D[0][2] - 0.8) < 1e-12);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(m.D[i][i] == 0.0);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(m.D[i][j] == m.D[j][i]);
      // triangle inequality over the single shared circuit
      for (std::size_t k = 0; k < 3; ++k) {
        CHECK(m.D[i][j] <= m.D[i][k] + m.D[k][j] + 1e-12);
      }
    }
  }
  std::vector<std::pair<std::string, SessionFeatures>> dup = {sessions[0], sessions[0]};
  auto z = session_distance_matrix(dup, "entropy");
  CHECK(z.D[0][1] == 0.0);
}

TEST_CASE("correlation matrix behavior") {
  std::vector<std::vector<double>> rows = {{1, -1, 5}, {2, -2, 5}, {3, -3, 5}, {4, -4, 5}};
  auto c = correlation_matrix(rows);
  CHECK(std::abs(c[0][0] - 1.0) < 1e-12);
  CHECK(std::abs(c[0][1] + 1.0) < 1e-12);
  CHECK(c[2][2] == 0.0);  // constant column, flagged as 0 by convention
  CHECK_THROWS(correlation_matrix({{1.0, 2.0}, {3.0, 4.0}}));
}

TEST_CASE("perplexity and entropy columns correlate strongly on random dists") {
  RandomStream rs(5);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 100; ++i) {
    auto f = full_features(random_dist(rs, 16));
    rows.push_back({f.entropy, f.perplexity});
  }
  auto c = correlation_matrix(rows);
  CHECK(c[0][1] > 0.9);
}
