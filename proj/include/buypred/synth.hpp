#pragma once

#include <cstdint>
#include <filesystem>
#include <unordered_map>
#include <vector>

#include "buypred/model.hpp"

namespace buypred {

// Logistic purchase-propensity weights over normalized session signals:
// popularity of the browsed items, dwell time, and repeat clicks. The bias is
// calibrated internally so the mean buy probability hits buy_fraction.
struct PropensityWeights {
  double popularity = 6.0;
  double dwell = 2.5;
  double repeat = 2.0;
};

struct SynthParams {
  std::uint64_t n_sessions = 1000;
  double buy_fraction = 0.05;
  std::uint64_t n_items = 400;
  int n_categories = 8;  // <= 12
  double zipf_exponent = 1.1;
  double mean_clicks_per_session = 4.0;
  // Fraction of the simulated window before which categories emit as 0.
  double missing_category_cutoff = 0.4;
  PropensityWeights propensity;
  std::uint64_t seed = 1;
};

// Fully materialized corpus plus the category ground truth for assertions.
struct SynthCorpus {
  std::vector<Session> sessions;  // ascending session_id, clicks sorted
  std::unordered_map<std::int64_t, int> true_categories;
  std::uint64_t buy_sessions = 0;
  std::uint64_t click_rows = 0;
};

SynthCorpus generate_corpus(const SynthParams& params);

struct SynthOutput {
  std::filesystem::path clicks;
  std::filesystem::path buys;
  std::filesystem::path truth;  // itemId,trueCategory sidecar
  std::uint64_t sessions = 0;
  std::uint64_t buy_sessions = 0;
  std::uint64_t click_rows = 0;
  std::uint64_t buy_rows = 0;
};

// Writes clicks.dat / buys.dat in the ingest formats (click rows ordered by
// timestamp, i.e. log order, not session order) plus the truth sidecar.
// Byte-identical for identical params.
SynthOutput generate(const SynthParams& params,
                     const std::filesystem::path& out_dir);

}  // namespace buypred
