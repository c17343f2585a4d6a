#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "buypred/features.hpp"
#include "buypred/learn.hpp"
#include "buypred/model.hpp"
#include "buypred/preprocess.hpp"
#include "buypred/solution.hpp"

namespace buypred {

enum class SessionStage : std::uint8_t { AdaBoost, NaiveBayes, Heuristic };
enum class ItemStage : std::uint8_t { RandomForest, NaiveBayes };

std::string to_string(SessionStage stage);
std::string to_string(ItemStage stage);
SessionStage session_stage_from_string(const std::string& name);
ItemStage item_stage_from_string(const std::string& name);

struct ResampleParams {
  bool enabled = true;
  double target_positive_fraction = 0.5;
  std::size_t max_output_size = 2'000'000;
};

struct CascadeConfig {
  SessionStage session_stage = SessionStage::AdaBoost;
  ItemStage item_stage = ItemStage::RandomForest;
  std::string session_mask = "selected";
  double session_cutoff = 0.5;
  double item_cutoff = 0.5;
  AdaBoostParams boost;
  ForestParams forest;
  ResampleParams resample;
  FeatureThresholds thresholds;
  bool recompute_thresholds = false;
  double heuristic_ratio_threshold = 5.5;
  ItemStatsConfig stats;
  std::uint64_t seed = 1;
  int threads = 1;
};

// Everything prediction needs: both stage models, the item statistics and
// category map they were built against, and the mask/threshold snapshot.
struct CascadeModel {
  CascadeConfig config;
  ItemStatsTable stats;
  CategoryMap categories;
  FeatureMask mask;
  FeatureThresholds thresholds;  // the values actually used
  std::optional<BoostedEnsemble> session_boost;
  std::optional<NaiveBayesModel> session_nb;
  std::optional<Forest> item_forest;
  std::optional<NaiveBayesModel> item_nb;
};

struct TrainReport {
  double stats_seconds = 0;
  double session_seconds = 0;
  double item_seconds = 0;
  std::uint64_t session_rows = 0;       // after resampling
  std::uint64_t item_rows = 0;
  std::uint64_t item_rows_bought = 0;   // positives
  std::uint64_t buy_sessions = 0;
};

// Stage training per the two-classifier decomposition: the item classifier
// sees only buy-session item vectors (bought = positive), the session
// classifier sees masked session vectors, resampled when enabled. Throws
// InsufficientDataError when the stream has no buy session.
CascadeModel train_cascade(const std::vector<Session>& train,
                           const CascadeConfig& config,
                           TrainReport* report = nullptr);

// Session stage gates; item stage picks clicked items scoring past the
// cutoff, falling back to the single best-scoring item so a predicted buy
// session is never empty. Click-less sessions are skipped.
std::vector<SolutionEntry> predict(const CascadeModel& model,
                                   const std::vector<Session>& test);

// Versioned JSON artifact; reloading reproduces predictions bit-exactly.
void save_model(const CascadeModel& model, const std::filesystem::path& path);
CascadeModel load_model(const std::filesystem::path& path);

}  // namespace buypred
