#include "buypred/learn.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <thread>
#include <unordered_set>

#include "buypred/errors.hpp"
#include "buypred/rng.hpp"

namespace buypred {

void LabeledDataset::add(std::span<const double> features, Label label,
                         double weight) {
  if (feature_count_ == 0) feature_count_ = static_cast<int>(features.size());
  if (static_cast<int>(features.size()) != feature_count_)
    throw ArityMismatchError("row has " + std::to_string(features.size()) +
                             " features, dataset expects " +
                             std::to_string(feature_count_));
  if (!(weight > 0))
    throw std::invalid_argument("row weights must be positive");
  data_.insert(data_.end(), features.begin(), features.end());
  labels_.push_back(label);
  weights_.push_back(weight);
}

std::size_t LabeledDataset::count_label(Label l) const {
  return static_cast<std::size_t>(
      std::count(labels_.begin(), labels_.end(), l));
}

// ---------------------------------------------------------------------------
// Tree
// ---------------------------------------------------------------------------

namespace {

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0;
  double gain = -1;
};

struct TreeBuilder {
  const LabeledDataset& d;
  const TreeParams& params;
  Rng rng;
  std::vector<TreeNode> nodes;

  TreeBuilder(const LabeledDataset& data, const TreeParams& p)
      : d(data), params(p), rng(p.seed) {}

  std::vector<int> candidate_features() {
    const int total = d.feature_count();
    if (params.feature_subset_size <= 0 ||
        params.feature_subset_size >= total) {
      std::vector<int> all(static_cast<std::size_t>(total));
      std::iota(all.begin(), all.end(), 0);
      return all;
    }
    // Partial Fisher-Yates over [0, F).
    std::vector<int> pool(static_cast<std::size_t>(total));
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<int> chosen;
    chosen.reserve(static_cast<std::size_t>(params.feature_subset_size));
    for (int k = 0; k < params.feature_subset_size; ++k) {
      std::size_t j = static_cast<std::size_t>(k) +
                      static_cast<std::size_t>(rng.below(
                          static_cast<std::uint64_t>(total - k)));
      std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
      chosen.push_back(pool[static_cast<std::size_t>(k)]);
    }
    return chosen;
  }

  // Weighted Gini impurity times total weight: W * (1 - pB^2 - pN^2).
  static double weighted_gini(double w_buy, double w_total) {
    if (w_total <= 0) return 0;
    const double p = w_buy / w_total;
    return w_total * 2.0 * p * (1.0 - p);
  }

  SplitChoice best_split(const std::vector<std::uint32_t>& rows) {
    SplitChoice best;
    double w_total = 0, w_buy = 0;
    for (std::uint32_t r : rows) {
      w_total += d.weight(r);
      if (d.label(r) == Label::Buy) w_buy += d.weight(r);
    }
    const double parent = weighted_gini(w_buy, w_total);

    std::vector<std::pair<double, std::uint32_t>> order;
    order.reserve(rows.size());
    for (int feature : candidate_features()) {
      order.clear();
      for (std::uint32_t r : rows)
        order.emplace_back(d.row(r)[static_cast<std::size_t>(feature)], r);
      std::sort(order.begin(), order.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });

      double left_w = 0, left_buy = 0;
      std::size_t left_n = 0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const auto& [value, r] = order[i];
        left_w += d.weight(r);
        if (d.label(r) == Label::Buy) left_buy += d.weight(r);
        ++left_n;
        const double next_value = order[i + 1].first;
        if (value == next_value) continue;  // not a distinct-value boundary
        if (left_n < static_cast<std::size_t>(params.min_leaf)) continue;
        if (order.size() - left_n < static_cast<std::size_t>(params.min_leaf))
          continue;
        const double gain = parent - weighted_gini(left_buy, left_w) -
                            weighted_gini(w_buy - left_buy, w_total - left_w);
        if (!best.found || gain > best.gain) {
          best.found = true;
          best.feature = feature;
          best.threshold = value + (next_value - value) / 2.0;
          best.gain = gain;
        }
      }
    }
    return best;
  }

  std::int32_t build(std::vector<std::uint32_t> rows, int depth) {
    double w_total = 0, w_buy = 0;
    std::size_t n_buy = 0;
    for (std::uint32_t r : rows) {
      w_total += d.weight(r);
      if (d.label(r) == Label::Buy) {
        w_buy += d.weight(r);
        ++n_buy;
      }
    }

    const bool pure = n_buy == 0 || n_buy == rows.size();
    const bool depth_capped = params.max_depth > 0 && depth >= params.max_depth;

    SplitChoice split;
    if (!pure && !depth_capped &&
        rows.size() >= 2 * static_cast<std::size_t>(params.min_leaf))
      split = best_split(rows);

    const std::int32_t index = static_cast<std::int32_t>(nodes.size());
    nodes.emplace_back();
    if (!split.found) {
      nodes[static_cast<std::size_t>(index)].p_buy =
          w_total > 0 ? w_buy / w_total : 0;
      return index;
    }

    std::vector<std::uint32_t> left, right;
    for (std::uint32_t r : rows) {
      if (d.row(r)[static_cast<std::size_t>(split.feature)] <= split.threshold)
        left.push_back(r);
      else
        right.push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    nodes[static_cast<std::size_t>(index)].feature = split.feature;
    nodes[static_cast<std::size_t>(index)].threshold = split.threshold;
    const std::int32_t left_index = build(std::move(left), depth + 1);
    nodes[static_cast<std::size_t>(index)].left = left_index;
    const std::int32_t right_index = build(std::move(right), depth + 1);
    nodes[static_cast<std::size_t>(index)].right = right_index;
    return index;
  }
};

}  // namespace

Tree train_tree_on(const LabeledDataset& d,
                   std::span<const std::uint32_t> row_indices,
                   const TreeParams& params) {
  if (d.empty() || row_indices.empty()) throw EmptyDatasetError();
  TreeBuilder builder(d, params);
  builder.build(std::vector<std::uint32_t>(row_indices.begin(),
                                           row_indices.end()),
                0);
  Tree tree;
  tree.nodes = std::move(builder.nodes);
  tree.feature_count = d.feature_count();
  return tree;
}

Tree train_tree(const LabeledDataset& d, const TreeParams& params) {
  if (d.empty()) throw EmptyDatasetError();
  std::vector<std::uint32_t> all(d.size());
  std::iota(all.begin(), all.end(), 0);
  return train_tree_on(d, all, params);
}

ClassDistribution predict_tree(const Tree& t, std::span<const double> x) {
  if (static_cast<int>(x.size()) < t.feature_count)
    throw ArityMismatchError("input has " + std::to_string(x.size()) +
                             " features, tree expects " +
                             std::to_string(t.feature_count));
  std::size_t index = 0;
  while (t.nodes[index].feature >= 0) {
    const TreeNode& node = t.nodes[index];
    index = static_cast<std::size_t>(
        x[static_cast<std::size_t>(node.feature)] <= node.threshold
            ? node.left
            : node.right);
  }
  const double p = t.nodes[index].p_buy;
  return {1.0 - p, p};
}

// ---------------------------------------------------------------------------
// Random forest
// ---------------------------------------------------------------------------

Forest train_forest(const LabeledDataset& d, const ForestParams& params) {
  if (d.empty()) throw EmptyDatasetError();
  const int n_trees = std::max(1, params.n_trees);

  int subset = params.feature_subset_size;
  if (subset < 0)
    subset = static_cast<int>(
        std::floor(std::sqrt(static_cast<double>(d.feature_count()))));

  Forest forest;
  forest.feature_count = d.feature_count();
  forest.trees.resize(static_cast<std::size_t>(n_trees));

  Rng master(params.seed);
  auto train_one = [&](int t) {
    Rng tree_rng = master.fork(static_cast<std::uint64_t>(t) + 1);
    std::vector<std::uint32_t> sample(d.size());
    for (auto& index : sample)
      index = static_cast<std::uint32_t>(tree_rng.below(d.size()));
    TreeParams tree_params;
    tree_params.max_depth = params.max_depth;
    tree_params.min_leaf = params.min_leaf;
    tree_params.feature_subset_size = subset;
    tree_params.seed = tree_rng.next_u64();
    forest.trees[static_cast<std::size_t>(t)] =
        train_tree_on(d, sample, tree_params);
  };

  const int threads = std::max(1, params.threads);
  if (threads == 1) {
    for (int t = 0; t < n_trees; ++t) train_one(t);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (int t = next.fetch_add(1); t < n_trees; t = next.fetch_add(1))
          train_one(t);
      });
    }
    for (auto& worker : pool) worker.join();
  }
  return forest;
}

Prediction predict_forest(const Forest& f, std::span<const double> x,
                          double cutoff) {
  if (f.trees.empty()) throw EmptyEnsembleError();
  double sum = 0;
  for (const Tree& t : f.trees) sum += predict_tree(t, x).buy;
  const double score = sum / static_cast<double>(f.trees.size());
  return {score >= cutoff ? Label::Buy : Label::NonBuy, score};
}

// ---------------------------------------------------------------------------
// Resampling
// ---------------------------------------------------------------------------

LabeledDataset resample(const LabeledDataset& d,
                        double target_positive_fraction,
                        std::size_t output_size, std::uint64_t seed) {
  if (d.empty()) throw EmptyDatasetError();
  if (target_positive_fraction < 0 || target_positive_fraction > 1)
    throw std::invalid_argument("target positive fraction must be in [0,1]");

  std::vector<std::uint32_t> positives, negatives;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.label(i) == Label::Buy)
      positives.push_back(static_cast<std::uint32_t>(i));
    else
      negatives.push_back(static_cast<std::uint32_t>(i));
  }

  const std::size_t n_pos = static_cast<std::size_t>(
      std::floor(static_cast<double>(output_size) * target_positive_fraction));
  const std::size_t n_neg = output_size - n_pos;
  if (n_pos > 0 && positives.empty())
    throw MissingClassError("no Buy rows to resample from");
  if (n_neg > 0 && negatives.empty())
    throw MissingClassError("no NonBuy rows to resample from");

  Rng rng(seed);
  LabeledDataset out(d.feature_count());
  for (std::size_t k = 0; k < n_pos; ++k) {
    const std::uint32_t r = positives[rng.below(positives.size())];
    out.add(d.row(r), Label::Buy, 1.0);
  }
  for (std::size_t k = 0; k < n_neg; ++k) {
    const std::uint32_t r = negatives[rng.below(negatives.size())];
    out.add(d.row(r), Label::NonBuy, 1.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// AdaBoost.M1
// ---------------------------------------------------------------------------

namespace {

Label tree_vote(const Tree& t, std::span<const double> x) {
  return predict_tree(t, x).buy >= 0.5 ? Label::Buy : Label::NonBuy;
}

constexpr double kEpsilonFloor = 1e-10;

}  // namespace

BoostedEnsemble train_adaboost_m1(const LabeledDataset& d,
                                  const AdaBoostParams& params,
                                  AdaBoostDiagnostics* diagnostics) {
  if (d.size() < 2) throw EmptyDatasetError();
  const std::size_t n_buy = d.count_label(Label::Buy);
  if (n_buy == 0 || n_buy == d.size())
    throw MissingClassError("AdaBoost.M1 needs both classes present");

  // Working copy whose weights evolve round by round.
  LabeledDataset work(d.feature_count());
  const double init = 1.0 / static_cast<double>(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    work.add(d.row(i), d.label(i), init);

  BoostedEnsemble ensemble;
  ensemble.feature_count = d.feature_count();

  Rng seeds(params.seed);
  for (int round = 0; round < params.rounds; ++round) {
    TreeParams base = params.base;
    base.seed = seeds.next_u64();
    Tree learner = train_tree(work, base);

    double epsilon = 0;
    std::vector<bool> miss(work.size());
    for (std::size_t i = 0; i < work.size(); ++i) {
      const bool wrong = tree_vote(learner, work.row(i)) != work.label(i);
      miss[i] = wrong;
      if (wrong) epsilon += work.weight(i);
    }

    if (epsilon >= 0.5) break;  // no usable edge left; round discarded

    const bool perfect = epsilon == 0.0;
    const double clamped = perfect ? kEpsilonFloor : epsilon;
    const double alpha = std::log((1.0 - clamped) / clamped);
    ensemble.rounds.push_back({std::move(learner), alpha, epsilon});

    if (diagnostics) diagnostics->epsilons.push_back(epsilon);
    if (perfect) {
      if (diagnostics) diagnostics->weight_sums.push_back(1.0);
      break;
    }

    const double up = std::exp(alpha);
    double sum = 0;
    for (std::size_t i = 0; i < work.size(); ++i) {
      const double w = work.weight(i) * (miss[i] ? up : 1.0);
      work.set_weight(i, w);
      sum += w;
    }
    if (!(sum > 0) || !std::isfinite(sum))
      throw DegenerateWeightsError("weight normalisation underflowed at round " +
                                   std::to_string(round + 1));
    double check = 0;
    for (std::size_t i = 0; i < work.size(); ++i) {
      work.set_weight(i, work.weight(i) / sum);
      check += work.weight(i);
    }
    if (diagnostics) diagnostics->weight_sums.push_back(check);
  }

  return ensemble;
}

Prediction predict_adaboost(const BoostedEnsemble& e, std::span<const double> x,
                            double cutoff) {
  if (e.rounds.empty()) throw EmptyEnsembleError();
  double alpha_sum = 0, buy_sum = 0;
  for (const BoostRound& round : e.rounds) {
    alpha_sum += round.alpha;
    if (tree_vote(round.learner, x) == Label::Buy) buy_sum += round.alpha;
  }
  const double score = buy_sum / alpha_sum;
  return {score >= cutoff ? Label::Buy : Label::NonBuy, score};
}

// ---------------------------------------------------------------------------
// Gaussian naive Bayes
// ---------------------------------------------------------------------------

namespace {
constexpr double kVarianceFloor = 1e-9;
}

NaiveBayesModel train_naive_bayes(const LabeledDataset& d) {
  if (d.empty()) throw EmptyDatasetError();
  const int f_count = d.feature_count();
  NaiveBayesModel m;
  m.feature_count = f_count;
  m.mean_buy.assign(static_cast<std::size_t>(f_count), 0);
  m.var_buy.assign(static_cast<std::size_t>(f_count), 0);
  m.mean_non_buy.assign(static_cast<std::size_t>(f_count), 0);
  m.var_non_buy.assign(static_cast<std::size_t>(f_count), 0);

  double w_buy = 0, w_total = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double w = d.weight(i);
    w_total += w;
    auto& mean = d.label(i) == Label::Buy ? m.mean_buy : m.mean_non_buy;
    if (d.label(i) == Label::Buy) w_buy += w;
    auto row = d.row(i);
    for (int f = 0; f < f_count; ++f)
      mean[static_cast<std::size_t>(f)] += w * row[static_cast<std::size_t>(f)];
  }
  const double w_non = w_total - w_buy;
  for (int f = 0; f < f_count; ++f) {
    if (w_buy > 0) m.mean_buy[static_cast<std::size_t>(f)] /= w_buy;
    if (w_non > 0) m.mean_non_buy[static_cast<std::size_t>(f)] /= w_non;
  }
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double w = d.weight(i);
    const bool buy = d.label(i) == Label::Buy;
    auto& mean = buy ? m.mean_buy : m.mean_non_buy;
    auto& var = buy ? m.var_buy : m.var_non_buy;
    auto row = d.row(i);
    for (int f = 0; f < f_count; ++f) {
      const double delta =
          row[static_cast<std::size_t>(f)] - mean[static_cast<std::size_t>(f)];
      var[static_cast<std::size_t>(f)] += w * delta * delta;
    }
  }
  for (int f = 0; f < f_count; ++f) {
    auto fi = static_cast<std::size_t>(f);
    m.var_buy[fi] = std::max(w_buy > 0 ? m.var_buy[fi] / w_buy : 0.0,
                             kVarianceFloor);
    m.var_non_buy[fi] = std::max(w_non > 0 ? m.var_non_buy[fi] / w_non : 0.0,
                                 kVarianceFloor);
  }
  m.prior_buy = w_total > 0 ? w_buy / w_total : 0;
  return m;
}

Prediction predict_naive_bayes(const NaiveBayesModel& m,
                               std::span<const double> x, double cutoff) {
  if (static_cast<int>(x.size()) != m.feature_count)
    throw ArityMismatchError("input has " + std::to_string(x.size()) +
                             " features, model expects " +
                             std::to_string(m.feature_count));
  auto log_likelihood = [&](const std::vector<double>& mean,
                            const std::vector<double>& var, double prior) {
    if (prior <= 0) return -std::numeric_limits<double>::infinity();
    double ll = std::log(prior);
    for (int f = 0; f < m.feature_count; ++f) {
      auto fi = static_cast<std::size_t>(f);
      const double delta = x[fi] - mean[fi];
      ll += -0.5 * std::log(2.0 * std::numbers::pi * var[fi]) -
            delta * delta / (2.0 * var[fi]);
    }
    return ll;
  };
  const double lb = log_likelihood(m.mean_buy, m.var_buy, m.prior_buy);
  const double ln =
      log_likelihood(m.mean_non_buy, m.var_non_buy, 1.0 - m.prior_buy);
  double score;
  if (std::isinf(lb) && lb < 0)
    score = 0;
  else if (std::isinf(ln) && ln < 0)
    score = 1;
  else
    score = 1.0 / (1.0 + std::exp(ln - lb));
  return {score >= cutoff ? Label::Buy : Label::NonBuy, score};
}

// ---------------------------------------------------------------------------
// Threshold heuristic
// ---------------------------------------------------------------------------

HeuristicResult heuristic_classify(const Session& s,
                                   const ItemStatsTable& stats,
                                   double ratio_threshold) {
  HeuristicResult result;
  std::vector<std::pair<double, std::int64_t>> items;  // (ratio, item)
  std::unordered_set<std::int64_t> seen;
  for (const ClickEvent& e : s.clicks)
    if (seen.insert(e.item_id).second)
      items.emplace_back(stats.at(e.item_id).click_buy_ratio, e.item_id);
  if (items.empty()) return result;

  double sum = 0;
  for (const auto& [ratio, item] : items) sum += ratio;
  result.mean_ratio = sum / static_cast<double>(items.size());
  if (result.mean_ratio <= ratio_threshold) return result;

  result.label = Label::Buy;
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  const std::size_t keep = (items.size() + 1) / 2;  // ceil(k/2)
  result.ranked_items.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i)
    result.ranked_items.push_back(items[i].second);
  return result;
}

}  // namespace buypred
