#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdna/features.hpp"
#include "qdna/rng.hpp"

namespace qdna {

// Rows = sessions, columns = (circuit_id, metric) pairs over the shared
// circuit set; missing entries are NaN until imputation.
struct FeatureMatrix {
  std::vector<std::vector<double>> X;
  std::vector<int> y;  // 0 = device A, 1 = device B
  std::vector<std::pair<std::string, std::string>> column_ids;
  std::vector<std::string> labels;  // class index -> device name
};

inline const std::vector<std::string>& default_metrics() {
  static const std::vector<std::string> m = {"p0", "entropy", "js_uniform", "gini",
                                             "parity_bias"};
  return m;
}

inline FeatureMatrix assemble_matrix(const std::vector<SessionFeatures>& files_a,
                                     const std::vector<SessionFeatures>& files_b,
                                     const std::string& label_a, const std::string& label_b,
                                     const std::vector<std::string>& metrics = default_metrics(),
                                     double min_presence = 0.9) {
  if (files_a.empty() || files_b.empty()) throw std::invalid_argument("empty feature file set");

  auto present_enough = [&](const std::vector<SessionFeatures>& files, const std::string& cid) {
    std::size_t n = 0;
    for (const auto& f : files) n += f.count(cid);
    return static_cast<double>(n) >= min_presence * static_cast<double>(files.size());
  };

  std::set<std::string> candidates;
  for (const auto& f : files_a) for (const auto& [cid, _] : f) candidates.insert(cid);
  std::vector<std::string> circuits;
  for (const auto& cid : candidates) {
    if (present_enough(files_a, cid) && present_enough(files_b, cid)) circuits.push_back(cid);
  }
  if (circuits.empty()) throw std::invalid_argument("no shared circuits after presence filter");

  FeatureMatrix m;
  m.labels = {label_a, label_b};
  for (const auto& cid : circuits) {
    for (const auto& metric : metrics) m.column_ids.emplace_back(cid, metric);
  }
  auto add_rows = [&](const std::vector<SessionFeatures>& files, int label) {
    for (const auto& sess : files) {
      std::vector<double> row;
      row.reserve(m.column_ids.size());
      for (const auto& [cid, metric] : m.column_ids) {
        auto it = sess.find(cid);
        row.push_back(it == sess.end() ? std::numeric_limits<double>::quiet_NaN()
                                       : it->second.field(metric));
      }
      m.X.push_back(std::move(row));
      m.y.push_back(label);
    }
  };
  add_rows(files_a, 0);
  add_rows(files_b, 1);
  return m;
}

// -------- preprocessing: median imputer + robust/standard scaler --------

enum class Scaler { none, robust, standard };

class Preprocessor {
 public:
  // Fit on training rows only.
  void fit(const std::vector<std::vector<double>>& X, const std::vector<std::size_t>& rows,
           Scaler scaler) {
    scaler_ = scaler;
    const std::size_t d = X.empty() ? 0 : X[0].size();
    impute_.assign(d, 0.0);
    center_.assign(d, 0.0);
    scale_.assign(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
      std::vector<double> col;
      for (std::size_t i : rows) {
        if (!std::isnan(X[i][j])) col.push_back(X[i][j]);
      }
      if (col.empty()) { impute_[j] = 0.0; continue; }  // all-missing column -> zeros
      impute_[j] = quantile(col, 0.5);
      if (scaler_ == Scaler::robust) {
        center_[j] = impute_[j];
        scale_[j] = std::max(quantile(col, 0.75) - quantile(col, 0.25), kEps);
      } else if (scaler_ == Scaler::standard) {
        double mean = 0.0;
        for (double v : col) mean += v;
        mean /= static_cast<double>(col.size());
        double var = 0.0;
        for (double v : col) var += (v - mean) * (v - mean);
        var /= static_cast<double>(col.size());
        center_[j] = mean;
        scale_[j] = std::max(std::sqrt(var), kEps);
      }
    }
  }

  std::vector<double> transform(const std::vector<double>& row) const {
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
      double v = std::isnan(row[j]) ? impute_[j] : row[j];
      out[j] = scaler_ == Scaler::none ? v : (v - center_[j]) / scale_[j];
    }
    return out;
  }

 private:
  static constexpr double kEps = 1e-9;

  static double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    double pos = q * static_cast<double>(v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
  }

  Scaler scaler_ = Scaler::none;
  std::vector<double> impute_, center_, scale_;
};

// -------- nearest centroid (L1) --------

// Per-class centroid = per-column median, the L1-consistent center.
class NearestCentroid {
 public:
  void fit(const std::vector<std::vector<double>>& X, const std::vector<int>& y) {
    std::set<int> classes(y.begin(), y.end());
    if (classes.size() < 2) throw std::invalid_argument("single-class training set");
    const std::size_t d = X[0].size();
    centroids_.assign(2, std::vector<double>(d, 0.0));
    for (int c : {0, 1}) {
      for (std::size_t j = 0; j < d; ++j) {
        std::vector<double> col;
        for (std::size_t i = 0; i < X.size(); ++i) {
          if (y[i] == c) col.push_back(X[i][j]);
        }
        std::sort(col.begin(), col.end());
        centroids_[c][j] = col.size() % 2 ? col[col.size() / 2]
                                          : 0.5 * (col[col.size() / 2 - 1] + col[col.size() / 2]);
      }
    }
  }

  // Class-1 score in [0,1]: d0 / (d0 + d1). Ties go to the smaller label.
  double score(const std::vector<double>& x) const {
    double d0 = l1(x, centroids_[0]);
    double d1 = l1(x, centroids_[1]);
    if (d0 + d1 == 0.0) return 0.5;
    return d0 / (d0 + d1);
  }

  int predict(const std::vector<double>& x) const { return score(x) > 0.5 ? 1 : 0; }

 private:
  static double l1(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += std::abs(a[j] - b[j]);
    return s;
  }

  std::vector<std::vector<double>> centroids_;
};

// -------- logistic regression (L2, full-batch gradient descent) --------

class LogisticRegression {
 public:
  double l2_lambda = 1.0;
  bool class_weighted = false;
  int max_iters = 5000;
  double grad_tol = 1e-6;
  bool converged = false;

  void fit(const std::vector<std::vector<double>>& X, const std::vector<int>& y) {
    const std::size_t n = X.size(), d = X[0].size();
    w_.assign(d, 0.0);
    b_ = 0.0;

    std::vector<double> cw(n, 1.0);
    if (class_weighted) {
      double n1 = 0.0;
      for (int v : y) n1 += v;
      double w0 = static_cast<double>(n) / (2.0 * (static_cast<double>(n) - n1));
      double w1 = static_cast<double>(n) / (2.0 * n1);
      for (std::size_t i = 0; i < n; ++i) cw[i] = y[i] ? w1 : w0;
    }

    double step = 1.0;
    double obj = objective(X, y, cw);
    converged = false;
    for (int it = 0; it < max_iters; ++it) {
      std::vector<double> gw(d, 0.0);
      double gb = 0.0;
      gradient(X, y, cw, gw, gb);
      double ginf = std::abs(gb);
      for (double g : gw) ginf = std::max(ginf, std::abs(g));
      if (ginf < grad_tol) { converged = true; break; }

      // backtracking on the full-batch objective keeps the descent deterministic
      std::vector<double> w_old = w_;
      double b_old = b_;
      for (int bt = 0; bt < 40; ++bt) {
        for (std::size_t j = 0; j < d; ++j) w_[j] = w_old[j] - step * gw[j];
        b_ = b_old - step * gb;
        double new_obj = objective(X, y, cw);
        if (new_obj <= obj) { obj = new_obj; step *= 1.2; break; }
        step *= 0.5;
        w_ = w_old;
        b_ = b_old;
      }
    }
  }

  double score(const std::vector<double>& x) const {
    double z = b_;
    for (std::size_t j = 0; j < x.size(); ++j) z += w_[j] * x[j];
    return 1.0 / (1.0 + std::exp(-z));
  }

  int predict(const std::vector<double>& x) const { return score(x) >= 0.5 ? 1 : 0; }

  // Mean weighted NLL plus (lambda/2)||w||^2; bias unregularized.
  double objective(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                   const std::vector<double>& cw) const {
    double nll = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
      double z = b_;
      for (std::size_t j = 0; j < X[i].size(); ++j) z += w_[j] * X[i][j];
      // log(1 + e^z) computed stably
      double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      nll += cw[i] * (softplus - (y[i] ? z : 0.0));
    }
    nll /= static_cast<double>(X.size());
    double reg = 0.0;
    for (double v : w_) reg += v * v;
    return nll + 0.5 * l2_lambda * reg;
  }

  void gradient(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                const std::vector<double>& cw, std::vector<double>& gw, double& gb) const {
    const std::size_t n = X.size(), d = X[0].size();
    gw.assign(d, 0.0);
    gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = b_;
      for (std::size_t j = 0; j < d; ++j) z += w_[j] * X[i][j];
      double err = cw[i] * (1.0 / (1.0 + std::exp(-z)) - static_cast<double>(y[i]));
      for (std::size_t j = 0; j < d; ++j) gw[j] += err * X[i][j];
      gb += err;
    }
    for (std::size_t j = 0; j < d; ++j) gw[j] = gw[j] / static_cast<double>(n) + l2_lambda * w_[j];
    gb /= static_cast<double>(n);
  }

  const std::vector<double>& weights() const { return w_; }
  double bias() const { return b_; }
  void set_params(std::vector<double> w, double b) { w_ = std::move(w); b_ = b; }

 private:
  std::vector<double> w_;
  double b_ = 0.0;
};

// -------- random forest --------

struct TreeNode {
  int feature = -1;  // -1: leaf
  double threshold = 0.0;
  double leaf_p1 = 0.0;  // class-1 frequency at the leaf
  int left = -1, right = -1;
};

class DecisionTree {
 public:
  int max_depth = 6;
  int min_leaf = 2;

  void fit(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
           const std::vector<std::size_t>& rows, RandomStream& rs) {
    nodes_.clear();
    n_features_ = X[0].size();
    build(X, y, rows, 0, rs);
  }

  double score(const std::vector<double>& x) const {
    int node = 0;
    while (nodes_[node].feature >= 0) {
      node = x[nodes_[node].feature] <= nodes_[node].threshold ? nodes_[node].left
                                                               : nodes_[node].right;
    }
    return nodes_[node].leaf_p1;
  }

 private:
  int build(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
            const std::vector<std::size_t>& rows, int depth, RandomStream& rs) {
    int idx = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    double n1 = 0.0;
    for (std::size_t i : rows) n1 += y[i];
    double p1 = n1 / static_cast<double>(rows.size());

    bool pure = p1 == 0.0 || p1 == 1.0;
    if (pure || depth >= max_depth || static_cast<int>(rows.size()) < 2 * min_leaf) {
      nodes_[idx].leaf_p1 = p1;
      return idx;
    }

    // candidate features: ceil(sqrt(d)) distinct columns from the tree's stream
    int k = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_features_))));
    std::vector<std::size_t> cand;
    for (std::size_t j = 0; j < n_features_; ++j) cand.push_back(j);
    for (std::size_t i = 0; i < static_cast<std::size_t>(k) && i + 1 < cand.size(); ++i) {
      std::size_t pick = i + rs.below(cand.size() - i);
      std::swap(cand[i], cand[pick]);
    }
    cand.resize(std::min<std::size_t>(k, cand.size()));

    double best_gain = -1.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    double parent_gini = 2.0 * p1 * (1.0 - p1);

    for (std::size_t j : cand) {
      std::vector<std::pair<double, int>> vals;
      for (std::size_t i : rows) vals.emplace_back(X[i][j], y[i]);
      std::sort(vals.begin(), vals.end());
      double left1 = 0.0;
      double total1 = n1;
      const double n = static_cast<double>(rows.size());
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        left1 += vals[i].second;
        if (vals[i].first == vals[i + 1].first) continue;
        double nl = static_cast<double>(i + 1), nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        double pl = left1 / nl, pr = (total1 - left1) / nr;
        double child = (nl / n) * 2.0 * pl * (1.0 - pl) + (nr / n) * 2.0 * pr * (1.0 - pr);
        double gain = parent_gini - child;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(j);
          best_threshold = 0.5 * (vals[i].first + vals[i + 1].first);
        }
      }
    }

    if (best_feature < 0 || best_gain <= 0.0) {
      nodes_[idx].leaf_p1 = p1;
      return idx;
    }

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t i : rows) {
      (X[i][best_feature] <= best_threshold ? left_rows : right_rows).push_back(i);
    }
    nodes_[idx].feature = best_feature;
    nodes_[idx].threshold = best_threshold;
    int l = build(X, y, left_rows, depth + 1, rs);
    int r = build(X, y, right_rows, depth + 1, rs);
    nodes_[idx].left = l;
    nodes_[idx].right = r;
    return idx;
  }

  std::vector<TreeNode> nodes_;
  std::size_t n_features_ = 0;
};

class RandomForest {
 public:
  int n_trees = 200;
  int max_depth = 6;
  int min_leaf = 2;
  std::uint64_t seed = 0;

  void fit(const std::vector<std::vector<double>>& X, const std::vector<int>& y) {
    if (static_cast<int>(X.size()) < 2 * min_leaf) {
      throw std::invalid_argument("too few samples for random forest");
    }
    trees_.assign(n_trees, {});
    for (int t = 0; t < n_trees; ++t) {
      RandomStream rs = RandomStream::derive(seed, "rf_tree", static_cast<std::uint64_t>(t));
      std::vector<std::size_t> rows(X.size());
      for (auto& r : rows) r = rs.below(X.size());  // bootstrap resample
      trees_[t].max_depth = max_depth;
      trees_[t].min_leaf = min_leaf;
      trees_[t].fit(X, y, rows, rs);
    }
  }

  double score(const std::vector<double>& x) const {
    double s = 0.0;
    for (const auto& t : trees_) s += t.score(x);
    return s / static_cast<double>(trees_.size());
  }

  int predict(const std::vector<double>& x) const { return score(x) >= 0.5 ? 1 : 0; }

 private:
  std::vector<DecisionTree> trees_;
};

// -------- cross-validation --------

enum class ModelKind { nearest_centroid, logistic_regression, random_forest };

inline const char* model_name(ModelKind k) {
  switch (k) {
    case ModelKind::nearest_centroid: return "nearest_centroid_l1";
    case ModelKind::logistic_regression: return "logistic_regression_l2";
    case ModelKind::random_forest: return "random_forest";
  }
  return "?";
}

struct FoldMetrics {
  double accuracy = 0.0;
  double auc = 0.0;
  double precision_macro = 0.0;
  double recall_macro = 0.0;
  double f1_macro = 0.0;
  double threshold = 0.5;
  // confusion[actual][predicted]
  std::array<std::array<std::size_t, 2>, 2> confusion = {{{0, 0}, {0, 0}}};
};

struct CVReport {
  std::string model;
  int folds = 0;
  bool threshold_optimized = false;  // optimistic: threshold chosen on test scores
  std::vector<FoldMetrics> per_fold;
  double accuracy_mean = 0.0, accuracy_std = 0.0;
  double auc_mean = 0.0, auc_std = 0.0;
  double precision_macro = 0.0, recall_macro = 0.0, f1_macro = 0.0;
};

// Per-class round-robin assignment after a seeded shuffle.
inline std::vector<int> stratified_fold_assignment(const std::vector<int>& y, int folds,
                                                   std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("folds must be >= 2");
  std::vector<int> assignment(y.size(), -1);
  for (int c : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == c) idx.push_back(i);
    }
    if (static_cast<int>(idx.size()) < folds) {
      throw std::invalid_argument("class has fewer samples than folds");
    }
    RandomStream rs = RandomStream::derive(seed, "cv_shuffle", static_cast<std::uint64_t>(c));
    for (std::size_t i = idx.size(); i > 1; --i) {
      std::swap(idx[i - 1], idx[rs.below(i)]);
    }
    for (std::size_t i = 0; i < idx.size(); ++i) {
      assignment[idx[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
    }
  }
  return assignment;
}

// Midrank AUC, equivalent to trapezoidal integration of the ROC curve.
inline double roc_auc(const std::vector<int>& y, const std::vector<double>& scores) {
  std::vector<std::size_t> order(y.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double n1 = 0.0, n0 = 0.0, rank_sum = 0.0;
  std::size_t i = 0;
  double rank = 1.0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    double midrank = (rank + rank + static_cast<double>(j - i)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (y[order[k]]) { rank_sum += midrank; n1 += 1.0; }
      else { n0 += 1.0; }
    }
    rank += static_cast<double>(j - i + 1);
    i = j + 1;
  }
  if (n0 == 0.0 || n1 == 0.0) return 0.5;
  return (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n0 * n1);
}

namespace detail {

inline FoldMetrics fold_metrics(const std::vector<int>& y_test,
                                const std::vector<double>& scores, bool opt_threshold) {
  FoldMetrics m;
  m.auc = roc_auc(y_test, scores);
  m.threshold = 0.5;
  if (opt_threshold) {
    // threshold maximizing accuracy on the test scores themselves (optimistic)
    std::vector<double> cands = scores;
    cands.push_back(0.5);
    double best_acc = -1.0;
    for (double t : cands) {
      std::size_t correct = 0;
      for (std::size_t i = 0; i < y_test.size(); ++i) {
        correct += (scores[i] >= t ? 1 : 0) == y_test[i];
      }
      double acc = static_cast<double>(correct) / static_cast<double>(y_test.size());
      if (acc > best_acc) { best_acc = acc; m.threshold = t; }
    }
  }
  for (std::size_t i = 0; i < y_test.size(); ++i) {
    int pred = scores[i] >= m.threshold ? 1 : 0;
    ++m.confusion[static_cast<std::size_t>(y_test[i])][static_cast<std::size_t>(pred)];
  }
  std::size_t correct = m.confusion[0][0] + m.confusion[1][1];
  m.accuracy = static_cast<double>(correct) / static_cast<double>(y_test.size());
  double prec_sum = 0.0, rec_sum = 0.0, f1_sum = 0.0;
  for (int c : {0, 1}) {
    double tp = static_cast<double>(m.confusion[c][c]);
    double fp = static_cast<double>(m.confusion[1 - c][c]);
    double fn = static_cast<double>(m.confusion[c][1 - c]);
    double prec = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
    double rec = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
    double f1 = prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    prec_sum += prec;
    rec_sum += rec;
    f1_sum += f1;
  }
  m.precision_macro = prec_sum / 2.0;
  m.recall_macro = rec_sum / 2.0;
  m.f1_macro = f1_sum / 2.0;
  return m;
}

}  // namespace detail

struct CVParams {
  int folds = 6;
  bool opt_threshold = false;
  std::uint64_t seed = 0;
  double l2_lambda = 1.0;
  bool class_weighted = false;
  int rf_trees = 200;
  int rf_depth = 6;
  int rf_min_leaf = 2;
};

// Preprocessing is refit on each fold's training rows only.
inline CVReport cross_validate(ModelKind kind, const FeatureMatrix& m, const CVParams& params) {
  CVReport report;
  report.model = model_name(kind);
  report.folds = params.folds;
  report.threshold_optimized = params.opt_threshold;

  std::vector<int> assignment = stratified_fold_assignment(m.y, params.folds, params.seed);
  Scaler scaler = kind == ModelKind::nearest_centroid ? Scaler::robust
                  : kind == ModelKind::logistic_regression ? Scaler::standard
                                                           : Scaler::none;

  for (int fold = 0; fold < params.folds; ++fold) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < m.X.size(); ++i) {
      (assignment[i] == fold ? test_rows : train_rows).push_back(i);
    }
    Preprocessor prep;
    prep.fit(m.X, train_rows, scaler);

    std::vector<std::vector<double>> X_train;
    std::vector<int> y_train, y_test;
    for (std::size_t i : train_rows) {
      X_train.push_back(prep.transform(m.X[i]));
      y_train.push_back(m.y[i]);
    }
    std::vector<double> scores;
    auto score_all = [&](auto& model) {
      for (std::size_t i : test_rows) {
        scores.push_back(model.score(prep.transform(m.X[i])));
        y_test.push_back(m.y[i]);
      }
    };

    if (kind == ModelKind::nearest_centroid) {
      NearestCentroid model;
      model.fit(X_train, y_train);
      score_all(model);
    } else if (kind == ModelKind::logistic_regression) {
      LogisticRegression model;
      model.l2_lambda = params.l2_lambda;
      model.class_weighted = params.class_weighted;
      model.fit(X_train, y_train);
      score_all(model);
    } else {
      RandomForest model;
      model.n_trees = params.rf_trees;
      model.max_depth = params.rf_depth;
      model.min_leaf = params.rf_min_leaf;
      model.seed = mix64(params.seed ^ static_cast<std::uint64_t>(fold));
      model.fit(X_train, y_train);
      score_all(model);
    }
    report.per_fold.push_back(detail::fold_metrics(y_test, scores, params.opt_threshold));
  }

  auto mean_std = [&](auto getter, double& mean, double& stdev) {
    mean = 0.0;
    for (const auto& f : report.per_fold) mean += getter(f);
    mean /= static_cast<double>(report.per_fold.size());
    stdev = 0.0;
    for (const auto& f : report.per_fold) {
      stdev += (getter(f) - mean) * (getter(f) - mean);
    }
    stdev = std::sqrt(stdev / static_cast<double>(report.per_fold.size()));
  };
  mean_std([](const FoldMetrics& f) { return f.accuracy; }, report.accuracy_mean, report.accuracy_std);
  mean_std([](const FoldMetrics& f) { return f.auc; }, report.auc_mean, report.auc_std);
  double dummy;
  mean_std([](const FoldMetrics& f) { return f.precision_macro; }, report.precision_macro, dummy);
  mean_std([](const FoldMetrics& f) { return f.recall_macro; }, report.recall_macro, dummy);
  mean_std([](const FoldMetrics& f) { return f.f1_macro; }, report.f1_macro, dummy);
  return report;
}

inline double mean_cv_accuracy_nc(const FeatureMatrix& m, const std::vector<int>& y,
                                  const CVParams& params) {
  FeatureMatrix shuffled = m;
  shuffled.y = y;
  return cross_validate(ModelKind::nearest_centroid, shuffled, params).accuracy_mean;
}

// p = (1 + #perms with shuffled-y accuracy >= true accuracy) / (1 + n_perm).
inline double permutation_test(const FeatureMatrix& m, int n_perm, std::uint64_t seed,
                               const CVParams& params, double* true_acc_out = nullptr) {
  if (n_perm < 1) throw std::invalid_argument("n_perm must be >= 1");
  double true_acc = mean_cv_accuracy_nc(m, m.y, params);
  if (true_acc_out) *true_acc_out = true_acc;
  int exceed = 0;
  for (int p = 0; p < n_perm; ++p) {
    RandomStream rs = RandomStream::derive(seed, "perm", static_cast<std::uint64_t>(p));
    std::vector<int> y = m.y;
    for (std::size_t i = y.size(); i > 1; --i) {
      std::swap(y[i - 1], y[rs.below(i)]);
    }
    if (mean_cv_accuracy_nc(m, y, params) >= true_acc) ++exceed;
  }
  return static_cast<double>(1 + exceed) / static_cast<double>(1 + n_perm);
}

}  // namespace qdna
