#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "buypred/model.hpp"
#include "buypred/preprocess.hpp"

namespace buypred {

// Flat row-major numeric dataset with labels and positive row weights.
class LabeledDataset {
 public:
  LabeledDataset() = default;
  explicit LabeledDataset(int feature_count) : feature_count_(feature_count) {}

  void add(std::span<const double> features, Label label, double weight = 1.0);

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * static_cast<std::size_t>(feature_count_),
            static_cast<std::size_t>(feature_count_)};
  }
  Label label(std::size_t i) const { return labels_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  void set_weight(std::size_t i, double w) { weights_[i] = w; }

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  int feature_count() const { return feature_count_; }

  std::size_t count_label(Label l) const;

 private:
  int feature_count_ = 0;
  std::vector<double> data_;
  std::vector<Label> labels_;
  std::vector<double> weights_;
};

struct ClassDistribution {
  double non_buy = 0;
  double buy = 0;
};

struct Prediction {
  Label label = Label::NonBuy;
  double score = 0;  // Buy-side score in [0, 1]
};

// ---------------------------------------------------------------------------
// CART-style tree
// ---------------------------------------------------------------------------

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double p_buy = 0;  // leaf Buy probability
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int feature_count = 0;
};

struct TreeParams {
  int max_depth = 0;            // 0 = unlimited
  int min_leaf = 1;             // minimum rows per leaf
  int feature_subset_size = 0;  // candidate features per node; 0 = all
  std::uint64_t seed = 0;       // used only when subsetting features
};

// Greedy binary splits by weighted Gini decrease; thresholds are midpoints of
// consecutive distinct values, ties go to the first candidate, and zero-gain
// splits are taken while the node is impure (so consistent data is always
// shattered). Routing: x[feature] <= threshold goes left.
Tree train_tree(const LabeledDataset& d, const TreeParams& params);

// Tree training on an explicit row multiset (bootstrap support).
Tree train_tree_on(const LabeledDataset& d,
                   std::span<const std::uint32_t> row_indices,
                   const TreeParams& params);

ClassDistribution predict_tree(const Tree& t, std::span<const double> x);

// ---------------------------------------------------------------------------
// Random forest
// ---------------------------------------------------------------------------

struct ForestParams {
  int n_trees = 100;
  int max_depth = 0;
  int min_leaf = 1;
  // -1 = floor(sqrt(F)), 0 = all features, otherwise explicit.
  int feature_subset_size = -1;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct Forest {
  std::vector<Tree> trees;
  int feature_count = 0;
};

// Each tree trains on a bootstrap sample of |d| rows with per-node random
// feature subsets. Per-tree seeds derive from the master seed, so the result
// is identical for any thread count.
Forest train_forest(const LabeledDataset& d, const ForestParams& params);

// score = mean Buy probability over trees; label Buy iff score >= cutoff.
Prediction predict_forest(const Forest& f, std::span<const double> x,
                          double cutoff = 0.5);

// ---------------------------------------------------------------------------
// Class rebalancing
// ---------------------------------------------------------------------------

// With-replacement draws within each class: floor(output_size * fraction)
// Buy rows, the remainder NonBuy, uniform output weights. Output is the
// positive block followed by the negative block (consumers are order-free).
LabeledDataset resample(const LabeledDataset& d,
                        double target_positive_fraction,
                        std::size_t output_size, std::uint64_t seed);

// ---------------------------------------------------------------------------
// AdaBoost.M1
// ---------------------------------------------------------------------------

struct BoostRound {
  Tree learner;
  double alpha = 0;
  double epsilon = 0;
};

struct BoostedEnsemble {
  std::vector<BoostRound> rounds;
  int feature_count = 0;
};

struct AdaBoostParams {
  int rounds = 10;
  TreeParams base{.max_depth = 1};  // weighted decision stump
  std::uint64_t seed = 0;
};

struct AdaBoostDiagnostics {
  std::vector<double> epsilons;
  std::vector<double> weight_sums;  // after each round's renormalisation
};

// Standard AdaBoost.M1: weighted weak learners, alpha = ln((1-eps)/eps),
// misclassified rows upweighted by exp(alpha), weights renormalised. Rounds
// with eps >= 0.5 stop training unkept; eps == 0 keeps the round with eps
// clamped to 1e-10 and stops.
BoostedEnsemble train_adaboost_m1(const LabeledDataset& d,
                                  const AdaBoostParams& params,
                                  AdaBoostDiagnostics* diagnostics = nullptr);

// score = sum of alphas voting Buy / sum of alphas.
Prediction predict_adaboost(const BoostedEnsemble& e, std::span<const double> x,
                            double cutoff = 0.5);

// ---------------------------------------------------------------------------
// Gaussian naive Bayes baseline
// ---------------------------------------------------------------------------

struct NaiveBayesModel {
  int feature_count = 0;
  double prior_buy = 0;
  std::vector<double> mean_buy, var_buy;
  std::vector<double> mean_non_buy, var_non_buy;
};

NaiveBayesModel train_naive_bayes(const LabeledDataset& d);
Prediction predict_naive_bayes(const NaiveBayesModel& m,
                               std::span<const double> x, double cutoff = 0.5);

// ---------------------------------------------------------------------------
// Click-buy-ratio threshold heuristic
// ---------------------------------------------------------------------------

struct HeuristicResult {
  Label label = Label::NonBuy;
  double mean_ratio = 0;
  // Top ceil(k/2) distinct items by ratio (ties by ascending id); empty for
  // NonBuy sessions.
  std::vector<std::int64_t> ranked_items;
};

HeuristicResult heuristic_classify(const Session& s,
                                   const ItemStatsTable& stats,
                                   double ratio_threshold = 5.5);

}  // namespace buypred
