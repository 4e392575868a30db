// Native classifier implementations and model selection.

#include "humanal/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "humanal/errors.hpp"
#include "humanal/numfmt.hpp"
#include "humanal/rng.hpp"

namespace humanal {

namespace {

constexpr int kModelFormatVersion = 1;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

// --- ModelSpec ---------------------------------------------------------------

std::string ModelSpec::kind_name() const {
  struct Visitor {
    std::string operator()(const KnnParams&) const { return "knn"; }
    std::string operator()(const GaussianNbParams&) const { return "gaussian_nb"; }
    std::string operator()(const LogisticSgdParams&) const { return "logistic_sgd"; }
    std::string operator()(const DecisionTreeParams&) const { return "decision_tree"; }
    std::string operator()(const RandomForestParams&) const { return "random_forest"; }
    std::string operator()(const AdaBoostStumpsParams&) const { return "adaboost_stumps"; }
    std::string operator()(const ConstantParams&) const { return "constant"; }
  };
  return std::visit(Visitor{}, kind);
}

std::string ModelSpec::name() const {
  struct Visitor {
    std::string operator()(const KnnParams& p) const { return "knn(k=" + std::to_string(p.k) + ")"; }
    std::string operator()(const GaussianNbParams&) const { return "gaussian_nb"; }
    std::string operator()(const LogisticSgdParams& p) const {
      return "logistic_sgd(lr=" + format_double(p.learning_rate) +
             ",epochs=" + std::to_string(p.epochs) + ",l2=" + format_double(p.l2) + ")";
    }
    std::string operator()(const DecisionTreeParams& p) const {
      return "decision_tree(max_depth=" + std::to_string(p.max_depth) +
             ",min_leaf=" + std::to_string(p.min_leaf) + ")";
    }
    std::string operator()(const RandomForestParams& p) const {
      return "random_forest(n_trees=" + std::to_string(p.n_trees) +
             ",max_depth=" + std::to_string(p.max_depth) +
             ",feature_subsample=" + format_double(p.feature_subsample) + ")";
    }
    std::string operator()(const AdaBoostStumpsParams& p) const {
      return "adaboost_stumps(n_rounds=" + std::to_string(p.n_rounds) + ")";
    }
    std::string operator()(const ConstantParams& p) const {
      return "constant(label=" + std::to_string(p.label) + ")";
    }
  };
  return std::visit(Visitor{}, kind);
}

void ModelSpec::validate() const {
  struct Visitor {
    void operator()(const KnnParams& p) const {
      if (p.k < 1) throw ConfigError("knn: k must be >= 1");
    }
    void operator()(const GaussianNbParams&) const {}
    void operator()(const LogisticSgdParams& p) const {
      if (!(p.learning_rate > 0.0)) throw ConfigError("logistic_sgd: learning_rate must be > 0");
      if (p.epochs < 1) throw ConfigError("logistic_sgd: epochs must be >= 1");
      if (p.l2 < 0.0) throw ConfigError("logistic_sgd: l2 must be >= 0");
    }
    void operator()(const DecisionTreeParams& p) const {
      if (p.max_depth < 1) throw ConfigError("decision_tree: max_depth must be >= 1");
      if (p.min_leaf < 1) throw ConfigError("decision_tree: min_leaf must be >= 1");
    }
    void operator()(const RandomForestParams& p) const {
      if (p.n_trees < 1) throw ConfigError("random_forest: n_trees must be >= 1");
      if (p.max_depth < 1) throw ConfigError("random_forest: max_depth must be >= 1");
      if (!(p.feature_subsample > 0.0 && p.feature_subsample <= 1.0))
        throw ConfigError("random_forest: feature_subsample must be in (0,1]");
    }
    void operator()(const AdaBoostStumpsParams& p) const {
      if (p.n_rounds < 1) throw ConfigError("adaboost_stumps: n_rounds must be >= 1");
    }
    void operator()(const ConstantParams& p) const {
      if (p.label != 0 && p.label != 1) throw ConfigError("constant: label must be 0 or 1");
    }
  };
  std::visit(Visitor{}, kind);
}

std::vector<ModelSpec> default_model_pool() {
  return {
      {KnnParams{}, 0},         {GaussianNbParams{}, 0},    {LogisticSgdParams{}, 0},
      {DecisionTreeParams{}, 0}, {RandomForestParams{}, 0}, {AdaBoostStumpsParams{}, 0},
  };
}

// --- decision tree construction ---------------------------------------------
//
// Row indices are pre-sorted once per feature; each split partitions the
// sorted lists while preserving order, so building a tree is O(F * n *
// depth) after the initial sort. With feature_subsample == 1 every split
// scans all features and no randomness is consumed, which makes a
// single-tree forest identical to a plain decision tree.

namespace {

struct TreeBuildInput {
  const std::vector<std::vector<double>>& x;  // imputed dense rows
  const std::vector<int>& y;
  int max_depth;
  int min_leaf;
  int features_per_split;  // == n_features means "all, in order, no RNG"
  Rng* rng;                // used only when features_per_split < n_features
};

class TreeBuilder {
public:
  explicit TreeBuilder(const TreeBuildInput& in) : in_(in) {
    n_features_ = static_cast<int>(in.x.empty() ? 0 : in.x[0].size());
  }

  FittedTree build() {
    const size_t n = in_.x.size();
    std::vector<std::vector<int>> sorted(n_features_);
    for (int f = 0; f < n_features_; ++f) {
      auto& order = sorted[f];
      order.resize(n);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [this, f](int a, int b) {
        if (in_.x[a][f] != in_.x[b][f]) return in_.x[a][f] < in_.x[b][f];
        return a < b;
      });
    }
    FittedTree tree;
    build_node(tree.nodes, sorted, 0);
    return tree;
  }

private:
  int build_node(std::vector<TreeNode>& nodes, std::vector<std::vector<int>>& sorted, int depth) {
    const std::vector<int>& rows = sorted.empty() ? kNoRows : sorted[0];
    const int m = static_cast<int>(rows.size());
    int ones = 0;
    for (int r : rows) ones += in_.y[r];

    const int node_index = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{});
    nodes[node_index].leaf_value = m > 0 ? static_cast<double>(ones) / m : 0.0;

    if (m < 2 * in_.min_leaf || depth >= in_.max_depth || ones == 0 || ones == m)
      return node_index;

    // Candidate features for this split.
    std::vector<int> candidates;
    if (in_.features_per_split >= n_features_) {
      candidates.resize(n_features_);
      std::iota(candidates.begin(), candidates.end(), 0);
    } else {
      std::vector<int> all(n_features_);
      std::iota(all.begin(), all.end(), 0);
      for (int i = 0; i < in_.features_per_split; ++i) {
        const int j = i + in_.rng->uniform_int(0, n_features_ - 1 - i);
        std::swap(all[i], all[j]);
      }
      candidates.assign(all.begin(), all.begin() + in_.features_per_split);
      std::sort(candidates.begin(), candidates.end());
    }

    // Weighted Gini impurity of the children, unnormalized by m.
    const double parent_score = 2.0 * ones * (m - ones) / static_cast<double>(m);
    double best_score = parent_score;
    int best_feature = -1;
    double best_threshold = 0.0;

    for (int f : candidates) {
      const std::vector<int>& order = sorted[f];
      int left_ones = 0;
      for (int i = 0; i < m - 1; ++i) {
        left_ones += in_.y[order[i]];
        const double v = in_.x[order[i]][f];
        const double v_next = in_.x[order[i + 1]][f];
        if (!(v < v_next)) continue;
        const int nl = i + 1;
        const int nr = m - nl;
        if (nl < in_.min_leaf || nr < in_.min_leaf) continue;
        const int right_ones = ones - left_ones;
        const double score = 2.0 * left_ones * (nl - left_ones) / static_cast<double>(nl) +
                             2.0 * right_ones * (nr - right_ones) / static_cast<double>(nr);
        if (score < best_score) {
          best_score = score;
          best_feature = f;
          best_threshold = v + (v_next - v) / 2.0;
        }
      }
    }

    if (best_feature < 0) return node_index;

    // Partition every feature's sorted list, preserving order.
    std::vector<std::vector<int>> left(sorted.size()), right(sorted.size());
    for (size_t f = 0; f < sorted.size(); ++f) {
      left[f].reserve(m);
      right[f].reserve(m);
      for (int r : sorted[f]) {
        if (in_.x[r][best_feature] <= best_threshold) left[f].push_back(r);
        else right[f].push_back(r);
      }
    }
    sorted.clear();
    sorted.shrink_to_fit();

    nodes[node_index].feature = best_feature;
    nodes[node_index].threshold = best_threshold;
    nodes[node_index].left = build_node(nodes, left, depth + 1);
    left.clear();
    left.shrink_to_fit();
    nodes[node_index].right = build_node(nodes, right, depth + 1);
    return node_index;
  }

  static const std::vector<int> kNoRows;
  TreeBuildInput in_;
  int n_features_ = 0;
};

const std::vector<int> TreeBuilder::kNoRows;

double tree_proba(const FittedTree& tree, const std::vector<double>& row) {
  int node = 0;
  while (!tree.nodes[node].is_leaf()) {
    const TreeNode& n = tree.nodes[node];
    node = row[n.feature] <= n.threshold ? n.left : n.right;
  }
  return tree.nodes[node].leaf_value;
}

// --- per-kind trainers --------------------------------------------------------

FittedKnn fit_knn(const KnnParams& p, const std::vector<std::vector<double>>& x,
                  const std::vector<int>& y) {
  FittedKnn fitted;
  fitted.k = p.k;
  fitted.points = x;
  fitted.labels = y;
  return fitted;
}

double knn_proba(const FittedKnn& knn, const std::vector<double>& row) {
  const size_t n = knn.points.size();
  std::vector<double> dists(n);
  for (size_t i = 0; i < n; ++i) {
    double d = 0.0;
    const std::vector<double>& p = knn.points[i];
    for (size_t c = 0; c < row.size(); ++c) {
      const double diff = p[c] - row[c];
      d += diff * diff;
    }
    dists[i] = d;
  }
  const size_t kk = std::min<size_t>(static_cast<size_t>(knn.k), n);
  std::vector<double> buf = dists;
  std::nth_element(buf.begin(), buf.begin() + (kk - 1), buf.end());
  const double kth = buf[kk - 1];
  // Vote over every point within the k-th distance; including all ties
  // keeps the prediction independent of the training-row order.
  size_t votes = 0, positives = 0;
  for (size_t i = 0; i < n; ++i) {
    if (dists[i] <= kth) {
      ++votes;
      positives += static_cast<size_t>(knn.labels[i]);
    }
  }
  return static_cast<double>(positives) / static_cast<double>(votes);
}

FittedNb fit_nb(const std::vector<std::vector<double>>& x, const std::vector<int>& y) {
  const size_t n = x.size();
  const size_t f = x[0].size();
  size_t counts[2] = {0, 0};
  for (int label : y) ++counts[label];

  FittedNb nb;
  for (int c = 0; c < 2; ++c) {
    nb.log_prior[c] = std::log(static_cast<double>(counts[c]) / static_cast<double>(n));
    nb.mean[c].assign(f, 0.0);
    nb.var[c].assign(f, 0.0);
  }
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < f; ++j) nb.mean[y[i]][j] += x[i][j];
  for (int c = 0; c < 2; ++c)
    for (size_t j = 0; j < f; ++j) nb.mean[c][j] /= static_cast<double>(counts[c]);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < f; ++j) {
      const double d = x[i][j] - nb.mean[y[i]][j];
      nb.var[y[i]][j] += d * d;
    }

  // Variance floor proportional to the largest overall feature variance,
  // so zero-variance features stay usable.
  double max_var = 0.0;
  for (size_t j = 0; j < f; ++j) {
    double mean = 0.0;
    for (size_t i = 0; i < n; ++i) mean += x[i][j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (size_t i = 0; i < n; ++i) var += (x[i][j] - mean) * (x[i][j] - mean);
    max_var = std::max(max_var, var / static_cast<double>(n));
  }
  const double floor = std::max(1e-9 * max_var, 1e-12);
  for (int c = 0; c < 2; ++c)
    for (size_t j = 0; j < f; ++j)
      nb.var[c][j] = std::max(nb.var[c][j] / static_cast<double>(counts[c]), floor);
  return nb;
}

double nb_proba(const FittedNb& nb, const std::vector<double>& row) {
  double log_lik[2];
  for (int c = 0; c < 2; ++c) {
    double ll = nb.log_prior[c];
    for (size_t j = 0; j < row.size(); ++j) {
      const double var = nb.var[c][j];
      const double d = row[j] - nb.mean[c][j];
      ll += -0.5 * std::log(6.283185307179586476925286766559 * var) - d * d / (2.0 * var);
    }
    log_lik[c] = ll;
  }
  return sigmoid(log_lik[1] - log_lik[0]);
}

FittedSgd fit_sgd(const LogisticSgdParams& p, uint64_t seed,
                  const std::vector<std::vector<double>>& x, const std::vector<int>& y) {
  const size_t n = x.size();
  const size_t f = x[0].size();

  FittedSgd sgd;
  sgd.scale_mean.assign(f, 0.0);
  sgd.scale_sd.assign(f, 1.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < f; ++j) sgd.scale_mean[j] += x[i][j];
  for (size_t j = 0; j < f; ++j) sgd.scale_mean[j] /= static_cast<double>(n);
  std::vector<double> var(f, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < f; ++j) {
      const double d = x[i][j] - sgd.scale_mean[j];
      var[j] += d * d;
    }
  for (size_t j = 0; j < f; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(n));
    sgd.scale_sd[j] = sd > 0.0 ? sd : 1.0;
  }

  // Pre-standardized copy so the epoch loop stays tight.
  std::vector<std::vector<double>> xs(n, std::vector<double>(f));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < f; ++j) xs[i][j] = (x[i][j] - sgd.scale_mean[j]) / sgd.scale_sd[j];

  sgd.weights.assign(f, 0.0);
  sgd.bias = 0.0;
  Rng rng(seed);
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < p.epochs; ++epoch) {
    rng.shuffle(order);
    for (size_t i : order) {
      double z = sgd.bias;
      for (size_t j = 0; j < f; ++j) z += sgd.weights[j] * xs[i][j];
      const double g = sigmoid(z) - static_cast<double>(y[i]);
      for (size_t j = 0; j < f; ++j)
        sgd.weights[j] -= p.learning_rate * (g * xs[i][j] + p.l2 * sgd.weights[j]);
      sgd.bias -= p.learning_rate * g;
    }
  }
  return sgd;
}

double sgd_proba(const FittedSgd& sgd, const std::vector<double>& row) {
  double z = sgd.bias;
  for (size_t j = 0; j < row.size(); ++j)
    z += sgd.weights[j] * (row[j] - sgd.scale_mean[j]) / sgd.scale_sd[j];
  return sigmoid(z);
}

FittedTree fit_tree(const DecisionTreeParams& p, const std::vector<std::vector<double>>& x,
                    const std::vector<int>& y) {
  const int n_features = static_cast<int>(x[0].size());
  TreeBuildInput in{x, y, p.max_depth, p.min_leaf, n_features, nullptr};
  return TreeBuilder(in).build();
}

FittedForest fit_forest(const RandomForestParams& p, uint64_t seed,
                        const std::vector<std::vector<double>>& x, const std::vector<int>& y) {
  const int n_features = static_cast<int>(x[0].size());
  int per_split = static_cast<int>(std::lround(p.feature_subsample * n_features));
  per_split = std::clamp(per_split, 1, n_features);
  if (p.feature_subsample >= 1.0) per_split = n_features;

  FittedForest forest;
  forest.trees.reserve(p.n_trees);
  for (int t = 0; t < p.n_trees; ++t) {
    Rng rng(derive_seed(seed, static_cast<uint64_t>(t)));
    TreeBuildInput in{x, y, p.max_depth, /*min_leaf=*/2, per_split, &rng};
    forest.trees.push_back(TreeBuilder(in).build());
  }
  return forest;
}

double forest_proba(const FittedForest& forest, const std::vector<double>& row) {
  double sum = 0.0;
  for (const FittedTree& tree : forest.trees) sum += tree_proba(tree, row);
  return sum / static_cast<double>(forest.trees.size());
}

FittedBoost fit_boost(const AdaBoostStumpsParams& p, const std::vector<std::vector<double>>& x,
                      const std::vector<int>& y) {
  const int n = static_cast<int>(x.size());
  const int f = static_cast<int>(x[0].size());

  std::vector<std::vector<int>> sorted(f);
  for (int j = 0; j < f; ++j) {
    auto& order = sorted[j];
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&x, j](int a, int b) {
      if (x[a][j] != x[b][j]) return x[a][j] < x[b][j];
      return a < b;
    });
  }

  std::vector<double> w(n, 1.0 / n);
  FittedBoost boost;
  for (int round = 0; round < p.n_rounds; ++round) {
    double total_pos = 0.0, total_neg = 0.0;
    for (int i = 0; i < n; ++i) (y[i] == 1 ? total_pos : total_neg) += w[i];

    // Constant stumps (threshold below every value) are the baseline
    // candidates; polarity +1 predicts class 1 above the threshold.
    FittedBoost::Stump best;
    best.feature = 0;
    best.threshold = x[sorted[0][0]][0] - 1.0;
    best.polarity = 1;
    double best_err = total_neg;
    if (total_pos < best_err) {
      best.polarity = -1;
      best_err = total_pos;
    }

    for (int j = 0; j < f; ++j) {
      double cum_pos = 0.0, cum_neg = 0.0;
      for (int i = 0; i < n - 1; ++i) {
        const int row = sorted[j][i];
        (y[row] == 1 ? cum_pos : cum_neg) += w[row];
        const double v = x[row][j];
        const double v_next = x[sorted[j][i + 1]][j];
        if (!(v < v_next)) continue;
        const double threshold = v + (v_next - v) / 2.0;
        const double err_up = cum_pos + (total_neg - cum_neg);  // predict 1 above
        if (err_up < best_err) {
          best_err = err_up;
          best = {j, threshold, 1, 0.0};
        }
        const double err_down = cum_neg + (total_pos - cum_pos);  // predict 1 below
        if (err_down < best_err) {
          best_err = err_down;
          best = {j, threshold, -1, 0.0};
        }
      }
    }

    if (best_err >= 0.5) break;  // no stump has an edge left
    const double err = std::clamp(best_err, 1e-10, 1.0 - 1e-10);
    best.alpha = 0.5 * std::log((1.0 - err) / err);
    boost.stumps.push_back(best);
    boost.alpha_sum += best.alpha;
    if (best_err <= 1e-12) break;  // perfectly separated; weights would degenerate

    double w_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double value = x[i][best.feature];
      const int h = (value > best.threshold ? 1 : -1) * best.polarity;
      const int target = y[i] == 1 ? 1 : -1;
      w[i] *= std::exp(-best.alpha * target * h);
      w_sum += w[i];
    }
    for (int i = 0; i < n; ++i) w[i] /= w_sum;
  }
  return boost;
}

double boost_proba(const FittedBoost& boost, const std::vector<double>& row) {
  if (boost.stumps.empty() || boost.alpha_sum <= 0.0) return 0.5;
  double margin = 0.0;
  for (const auto& stump : boost.stumps) {
    const int h = (row[stump.feature] > stump.threshold ? 1 : -1) * stump.polarity;
    margin += stump.alpha * h;
  }
  return 0.5 + margin / (2.0 * boost.alpha_sum);
}

}  // namespace

// --- TrainedModel --------------------------------------------------------------

TrainedModel::TrainedModel(ModelSpec spec, FeatureMask mask, std::vector<Slot> columns,
                           std::vector<double> imputation_means, FittedParams params)
    : spec_(std::move(spec)),
      mask_(mask),
      columns_(std::move(columns)),
      imputation_means_(std::move(imputation_means)),
      params_(std::move(params)) {}

std::vector<double> TrainedModel::imputed(const std::vector<double>& row) const {
  if (row.size() != columns_.size())
    throw MaskMismatchError("expected " + std::to_string(columns_.size()) +
                            " feature columns, got " + std::to_string(row.size()));
  std::vector<double> dense = row;
  for (size_t i = 0; i < dense.size(); ++i)
    if (is_absent(dense[i])) dense[i] = imputation_means_[i];
  return dense;
}

double TrainedModel::predict_proba_row(const std::vector<double>& row) const {
  const std::vector<double> dense = imputed(row);
  struct Visitor {
    const std::vector<double>& r;
    double operator()(const FittedKnn& m) const { return knn_proba(m, r); }
    double operator()(const FittedNb& m) const { return nb_proba(m, r); }
    double operator()(const FittedSgd& m) const { return sgd_proba(m, r); }
    double operator()(const FittedTree& m) const { return tree_proba(m, r); }
    double operator()(const FittedForest& m) const { return forest_proba(m, r); }
    double operator()(const FittedBoost& m) const { return boost_proba(m, r); }
    double operator()(const FittedConstant& m) const { return static_cast<double>(m.label); }
  };
  return std::visit(Visitor{dense}, params_);
}

double TrainedModel::predict_proba(const FeatureVector& x, const FeatureMask& mask) const {
  if (mask != mask_)
    throw MaskMismatchError("feature mask {" + mask.to_string() +
                            "} differs from training mask {" + mask_.to_string() + "}");
  std::vector<double> row;
  row.reserve(columns_.size());
  for (Slot slot : columns_) row.push_back(x[slot]);
  return predict_proba_row(row);
}

int TrainedModel::predict(const FeatureVector& x, const FeatureMask& mask,
                          double threshold) const {
  return predict_proba(x, mask) >= threshold ? 1 : 0;
}

std::vector<double> TrainedModel::predict_proba_matrix(const FeatureMatrix& matrix) const {
  if (matrix.columns != columns_)
    throw MaskMismatchError("feature matrix columns differ from training columns");
  std::vector<double> probas;
  probas.reserve(matrix.rows.size());
  for (const auto& row : matrix.rows) probas.push_back(predict_proba_row(row));
  return probas;
}

std::vector<int> TrainedModel::predict_matrix(const FeatureMatrix& matrix,
                                              double threshold) const {
  std::vector<int> labels;
  labels.reserve(matrix.rows.size());
  for (double p : predict_proba_matrix(matrix)) labels.push_back(p >= threshold ? 1 : 0);
  return labels;
}

// --- fit -----------------------------------------------------------------------

TrainedModel fit(const ModelSpec& spec, const FeatureMatrix& features,
                 const std::vector<int>& labels, const FeatureMask& mask) {
  spec.validate();
  if (features.columns != mask.slots())
    throw MaskMismatchError("feature matrix columns do not match the mask's enabled slots");
  const size_t n = features.rows.size();
  if (labels.size() != n)
    throw ConfigError("labels length " + std::to_string(labels.size()) +
                      " does not match feature rows " + std::to_string(n));
  for (int label : labels)
    if (label != 0 && label != 1) throw ConfigError("labels must be 0 or 1");

  const bool is_constant = std::holds_alternative<ConstantParams>(spec.kind);
  const bool is_knn = std::holds_alternative<KnnParams>(spec.kind);
  if (n < 1 || (!is_constant && n < 2))
    throw DegenerateTrainingSetError("need at least 2 training examples");
  if (is_knn && n < static_cast<size_t>(std::get<KnnParams>(spec.kind).k))
    throw DegenerateTrainingSetError("knn needs at least k training examples");
  size_t ones = 0;
  for (int label : labels) ones += static_cast<size_t>(label);
  if (!is_constant && !is_knn && (ones == 0 || ones == n))
    throw DegenerateTrainingSetError("training labels contain a single class");

  // Freeze imputation means from the training matrix (0 when a column is
  // entirely absent) and densify.
  const size_t f = features.columns.size();
  std::vector<double> means(f, 0.0);
  for (size_t j = 0; j < f; ++j) {
    double sum = 0.0;
    size_t count = 0;
    for (const auto& row : features.rows) {
      if (!is_absent(row[j])) {
        sum += row[j];
        ++count;
      }
    }
    means[j] = count > 0 ? sum / static_cast<double>(count) : 0.0;
  }
  std::vector<std::vector<double>> x(n, std::vector<double>(f));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < f; ++j) {
      const double v = features.rows[i][j];
      x[i][j] = is_absent(v) ? means[j] : v;
    }

  struct Visitor {
    const ModelSpec& spec;
    const std::vector<std::vector<double>>& x;
    const std::vector<int>& y;
    FittedParams operator()(const KnnParams& p) const { return fit_knn(p, x, y); }
    FittedParams operator()(const GaussianNbParams&) const { return fit_nb(x, y); }
    FittedParams operator()(const LogisticSgdParams& p) const {
      return fit_sgd(p, spec.seed, x, y);
    }
    FittedParams operator()(const DecisionTreeParams& p) const { return fit_tree(p, x, y); }
    FittedParams operator()(const RandomForestParams& p) const {
      return fit_forest(p, spec.seed, x, y);
    }
    FittedParams operator()(const AdaBoostStumpsParams& p) const { return fit_boost(p, x, y); }
    FittedParams operator()(const ConstantParams& p) const { return FittedConstant{p.label}; }
  };
  FittedParams params = std::visit(Visitor{spec, x, labels}, spec.kind);
  return TrainedModel(spec, mask, features.columns, std::move(means), std::move(params));
}

// --- model selection -------------------------------------------------------------

namespace {

FeatureMatrix sub_matrix(const FeatureMatrix& features, const std::vector<size_t>& rows) {
  FeatureMatrix sub;
  sub.columns = features.columns;
  sub.rows.reserve(rows.size());
  for (size_t r : rows) sub.rows.push_back(features.rows[r]);
  return sub;
}

std::vector<int> sub_labels(const std::vector<int>& labels, const std::vector<size_t>& rows) {
  std::vector<int> sub;
  sub.reserve(rows.size());
  for (size_t r : rows) sub.push_back(labels[r]);
  return sub;
}

double train_accuracy(const TrainedModel& model, const FeatureMatrix& features,
                      const std::vector<int>& labels) {
  const std::vector<int> predicted = model.predict_matrix(features);
  size_t correct = 0;
  for (size_t i = 0; i < labels.size(); ++i)
    if (predicted[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace

SelectionResult select_model(const std::vector<ModelSpec>& specs, const FeatureMatrix& features,
                             const std::vector<int>& labels, const FeatureMask& mask, int folds,
                             uint64_t seed, SelectionMode mode) {
  if (specs.empty()) throw ConfigError("model pool is empty");
  const size_t n = features.rows.size();
  if (labels.size() != n) throw ConfigError("labels length does not match feature rows");
  size_t class_count[2] = {0, 0};
  for (int label : labels) {
    if (label != 0 && label != 1) throw ConfigError("labels must be 0 or 1");
    ++class_count[label];
  }
  if (n < 2 || class_count[0] == 0 || class_count[1] == 0) {
    // No split can be evaluated; the caller is expected to fall back to a
    // constant predictor.
    throw DegenerateTrainingSetError("training labels contain a single class");
  }

  SelectionReport report;
  report.fold_seed = seed;
  for (const ModelSpec& spec : specs) report.spec_names.push_back(spec.name());
  report.mean_accuracy.assign(specs.size(), -1.0);

  const size_t min_class = std::min(class_count[0], class_count[1]);
  int folds_used = folds;
  if (mode == SelectionMode::TrainAccuracy) {
    folds_used = 0;
    report.method = "train";
  } else if (min_class >= static_cast<size_t>(folds)) {
    report.method = "cv";
  } else if (min_class >= 2) {
    folds_used = 2;
    report.method = "cv_reduced";
  } else {
    folds_used = 0;
    report.method = "train";
  }
  report.folds_used = folds_used;

  if (folds_used > 0) {
    // Stratified fold assignment: shuffle each class's rows, then deal
    // them round-robin across folds.
    std::vector<int> fold_of(n, 0);
    for (int c = 0; c < 2; ++c) {
      std::vector<size_t> rows;
      for (size_t i = 0; i < n; ++i)
        if (labels[i] == c) rows.push_back(i);
      Rng rng(derive_seed(seed, static_cast<uint64_t>(c)));
      rng.shuffle(rows);
      for (size_t i = 0; i < rows.size(); ++i)
        fold_of[rows[i]] = static_cast<int>(i % static_cast<size_t>(folds_used));
    }

    std::vector<FeatureMatrix> fold_train(folds_used), fold_val(folds_used);
    std::vector<std::vector<int>> fold_train_y(folds_used), fold_val_y(folds_used);
    for (int fo = 0; fo < folds_used; ++fo) {
      std::vector<size_t> train_rows, val_rows;
      for (size_t i = 0; i < n; ++i)
        (fold_of[i] == fo ? val_rows : train_rows).push_back(i);
      fold_train[fo] = sub_matrix(features, train_rows);
      fold_val[fo] = sub_matrix(features, val_rows);
      fold_train_y[fo] = sub_labels(labels, train_rows);
      fold_val_y[fo] = sub_labels(labels, val_rows);
    }

    for (size_t s = 0; s < specs.size(); ++s) {
      double sum = 0.0;
      bool ok = true;
      for (int fo = 0; fo < folds_used && ok; ++fo) {
        try {
          const TrainedModel model = fit(specs[s], fold_train[fo], fold_train_y[fo], mask);
          sum += train_accuracy(model, fold_val[fo], fold_val_y[fo]);
        } catch (const DegenerateTrainingSetError&) {
          ok = false;
        }
      }
      if (ok) report.mean_accuracy[s] = sum / folds_used;
    }
  } else {
    for (size_t s = 0; s < specs.size(); ++s) {
      try {
        const TrainedModel model = fit(specs[s], features, labels, mask);
        report.mean_accuracy[s] = train_accuracy(model, features, labels);
      } catch (const DegenerateTrainingSetError&) {
        // stays ineligible
      }
    }
  }

  // Highest mean accuracy wins; ties go to the lowest index.
  size_t best = specs.size();
  for (size_t s = 0; s < specs.size(); ++s) {
    if (report.mean_accuracy[s] < 0.0) continue;
    if (best == specs.size() || report.mean_accuracy[s] > report.mean_accuracy[best]) best = s;
  }
  if (best == specs.size())
    throw DegenerateTrainingSetError("no model in the pool could be trained");
  report.chosen_index = best;

  TrainedModel model = fit(specs[best], features, labels, mask);
  return SelectionResult{std::move(model), std::move(report)};
}

// --- serialization ----------------------------------------------------------------

namespace {

nlohmann::ordered_json hyperparameters_to_json(const ModelSpec& spec) {
  nlohmann::ordered_json h = nlohmann::ordered_json::object();
  struct Visitor {
    nlohmann::ordered_json& h;
    void operator()(const KnnParams& p) const { h["k"] = p.k; }
    void operator()(const GaussianNbParams&) const {}
    void operator()(const LogisticSgdParams& p) const {
      h["learning_rate"] = p.learning_rate;
      h["epochs"] = p.epochs;
      h["l2"] = p.l2;
    }
    void operator()(const DecisionTreeParams& p) const {
      h["max_depth"] = p.max_depth;
      h["min_leaf"] = p.min_leaf;
    }
    void operator()(const RandomForestParams& p) const {
      h["n_trees"] = p.n_trees;
      h["max_depth"] = p.max_depth;
      h["feature_subsample"] = p.feature_subsample;
    }
    void operator()(const AdaBoostStumpsParams& p) const { h["n_rounds"] = p.n_rounds; }
    void operator()(const ConstantParams& p) const { h["label"] = p.label; }
  };
  std::visit(Visitor{h}, spec.kind);
  return h;
}

ModelKind kind_from_json(const std::string& kind, const nlohmann::json& h) {
  if (kind == "knn") return KnnParams{h.at("k").get<int>()};
  if (kind == "gaussian_nb") return GaussianNbParams{};
  if (kind == "logistic_sgd")
    return LogisticSgdParams{h.at("learning_rate").get<double>(), h.at("epochs").get<int>(),
                             h.at("l2").get<double>()};
  if (kind == "decision_tree")
    return DecisionTreeParams{h.at("max_depth").get<int>(), h.at("min_leaf").get<int>()};
  if (kind == "random_forest")
    return RandomForestParams{h.at("n_trees").get<int>(), h.at("max_depth").get<int>(),
                              h.at("feature_subsample").get<double>()};
  if (kind == "adaboost_stumps") return AdaBoostStumpsParams{h.at("n_rounds").get<int>()};
  if (kind == "constant") return ConstantParams{h.at("label").get<int>()};
  throw ParseError("unknown model kind '" + kind + "'");
}

nlohmann::ordered_json tree_to_json(const FittedTree& tree) {
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (const TreeNode& n : tree.nodes) {
    nlohmann::ordered_json node;
    node["feature"] = n.feature;
    node["threshold"] = n.threshold;
    node["left"] = n.left;
    node["right"] = n.right;
    node["leaf_value"] = n.leaf_value;
    nodes.push_back(std::move(node));
  }
  return nlohmann::ordered_json{{"nodes", std::move(nodes)}};
}

FittedTree tree_from_json(const nlohmann::json& doc) {
  FittedTree tree;
  for (const auto& node : doc.at("nodes")) {
    TreeNode n;
    n.feature = node.at("feature").get<int>();
    n.threshold = node.at("threshold").get<double>();
    n.left = node.at("left").get<int>();
    n.right = node.at("right").get<int>();
    n.leaf_value = node.at("leaf_value").get<double>();
    tree.nodes.push_back(n);
  }
  return tree;
}

nlohmann::ordered_json params_to_json(const FittedParams& params) {
  struct Visitor {
    nlohmann::ordered_json operator()(const FittedKnn& m) const {
      return {{"k", m.k}, {"points", m.points}, {"labels", m.labels}};
    }
    nlohmann::ordered_json operator()(const FittedNb& m) const {
      return {{"log_prior", {m.log_prior[0], m.log_prior[1]}},
              {"mean", {m.mean[0], m.mean[1]}},
              {"var", {m.var[0], m.var[1]}}};
    }
    nlohmann::ordered_json operator()(const FittedSgd& m) const {
      return {{"weights", m.weights},
              {"bias", m.bias},
              {"scale_mean", m.scale_mean},
              {"scale_sd", m.scale_sd}};
    }
    nlohmann::ordered_json operator()(const FittedTree& m) const { return tree_to_json(m); }
    nlohmann::ordered_json operator()(const FittedForest& m) const {
      nlohmann::ordered_json trees = nlohmann::ordered_json::array();
      for (const FittedTree& tree : m.trees) trees.push_back(tree_to_json(tree));
      return {{"trees", std::move(trees)}};
    }
    nlohmann::ordered_json operator()(const FittedBoost& m) const {
      nlohmann::ordered_json stumps = nlohmann::ordered_json::array();
      for (const auto& s : m.stumps) {
        nlohmann::ordered_json stump;
        stump["feature"] = s.feature;
        stump["threshold"] = s.threshold;
        stump["polarity"] = s.polarity;
        stump["alpha"] = s.alpha;
        stumps.push_back(std::move(stump));
      }
      return {{"stumps", std::move(stumps)}, {"alpha_sum", m.alpha_sum}};
    }
    nlohmann::ordered_json operator()(const FittedConstant& m) const {
      return {{"label", m.label}};
    }
  };
  return std::visit(Visitor{}, params);
}

FittedParams params_from_json(const std::string& kind, const nlohmann::json& doc) {
  if (kind == "knn") {
    FittedKnn m;
    m.k = doc.at("k").get<int>();
    m.points = doc.at("points").get<std::vector<std::vector<double>>>();
    m.labels = doc.at("labels").get<std::vector<int>>();
    return m;
  }
  if (kind == "gaussian_nb") {
    FittedNb m;
    m.log_prior[0] = doc.at("log_prior").at(0).get<double>();
    m.log_prior[1] = doc.at("log_prior").at(1).get<double>();
    for (int c = 0; c < 2; ++c) {
      m.mean[c] = doc.at("mean").at(c).get<std::vector<double>>();
      m.var[c] = doc.at("var").at(c).get<std::vector<double>>();
    }
    return m;
  }
  if (kind == "logistic_sgd") {
    FittedSgd m;
    m.weights = doc.at("weights").get<std::vector<double>>();
    m.bias = doc.at("bias").get<double>();
    m.scale_mean = doc.at("scale_mean").get<std::vector<double>>();
    m.scale_sd = doc.at("scale_sd").get<std::vector<double>>();
    return m;
  }
  if (kind == "decision_tree") return tree_from_json(doc);
  if (kind == "random_forest") {
    FittedForest m;
    for (const auto& tree : doc.at("trees")) m.trees.push_back(tree_from_json(tree));
    return m;
  }
  if (kind == "adaboost_stumps") {
    FittedBoost m;
    for (const auto& s : doc.at("stumps")) {
      FittedBoost::Stump stump;
      stump.feature = s.at("feature").get<int>();
      stump.threshold = s.at("threshold").get<double>();
      stump.polarity = s.at("polarity").get<int>();
      stump.alpha = s.at("alpha").get<double>();
      m.stumps.push_back(stump);
    }
    m.alpha_sum = doc.at("alpha_sum").get<double>();
    return m;
  }
  if (kind == "constant") return FittedConstant{doc.at("label").get<int>()};
  throw ParseError("unknown model kind '" + kind + "'");
}

}  // namespace

nlohmann::ordered_json model_to_json(const TrainedModel& model) {
  nlohmann::ordered_json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["kind"] = model.spec().kind_name();
  doc["hyperparameters"] = hyperparameters_to_json(model.spec());
  doc["seed"] = model.spec().seed;
  doc["mask"] = model.mask().to_string();
  nlohmann::ordered_json columns = nlohmann::ordered_json::array();
  for (Slot slot : model.columns()) columns.push_back(slot_name(slot));
  doc["columns"] = std::move(columns);
  doc["imputation_means"] = model.imputation_means();
  doc["parameters"] = params_to_json(model.params());
  return doc;
}

TrainedModel model_from_json(const nlohmann::json& doc) {
  if (doc.at("format_version").get<int>() != kModelFormatVersion)
    throw ParseError("unsupported model format_version");
  const std::string kind = doc.at("kind").get<std::string>();
  ModelSpec spec{kind_from_json(kind, doc.at("hyperparameters")),
                 doc.at("seed").get<uint64_t>()};
  const FeatureMask mask = FeatureMask::parse(doc.at("mask").get<std::string>());

  std::vector<Slot> columns;
  for (const auto& name : doc.at("columns")) {
    const std::string text = name.get<std::string>();
    bool found = false;
    for (int i = 0; i < kSlotCount; ++i) {
      if (text == slot_name(static_cast<Slot>(i))) {
        columns.push_back(static_cast<Slot>(i));
        found = true;
        break;
      }
    }
    if (!found) throw ParseError("unknown feature column '" + text + "'");
  }
  if (columns != mask.slots())
    throw ParseError("model columns do not match the recorded feature mask");

  std::vector<double> means = doc.at("imputation_means").get<std::vector<double>>();
  if (means.size() != columns.size())
    throw ParseError("imputation_means length does not match columns");

  FittedParams params = params_from_json(kind, doc.at("parameters"));
  return TrainedModel(std::move(spec), mask, std::move(columns), std::move(means),
                      std::move(params));
}

}  // namespace humanal
