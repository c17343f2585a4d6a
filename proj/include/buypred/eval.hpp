#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "buypred/model.hpp"
#include "buypred/solution.hpp"

namespace buypred {

// Reference answer for a test universe: how many sessions the test set has,
// and the bought item set of every buy session in it.
struct GroundTruth {
  std::uint64_t test_session_count = 0;
  std::map<std::int64_t, std::vector<std::int64_t>> buy_sessions;  // sorted items

  double buy_ratio() const {
    if (test_session_count == 0) return 0;
    return static_cast<double>(buy_sessions.size()) /
           static_cast<double>(test_session_count);
  }
};

// |A n B| / |A u B| for sorted id vectors. Throws BothEmptyError.
double jaccard(const std::vector<std::int64_t>& a,
               const std::vector<std::int64_t>& b);

// The challenge objective: each submitted session earns
// |S_b|/|S_t| + Jaccard(A_s, B_s) when it is a true buy session and
// -|S_b|/|S_t| otherwise. Double precision, documented 1e-9 tolerance.
double challenge_score(const std::vector<SolutionEntry>& solution,
                       const GroundTruth& gt);

// |S_b| * (|S_b|/|S_t| + 1): every buy session found with perfect item sets.
double max_possible_score(const GroundTruth& gt);

struct SessionMetrics {
  double recall = 0;
  double precision = 0;
  double f1 = 0;
};

// Recall/precision/F1 over the Buy class; zero denominators yield 0.
SessionMetrics session_metrics(const std::vector<std::int64_t>& predicted_ids,
                               const std::vector<std::int64_t>& truth_buy_ids);

// Mean Jaccard over predicted sessions that are true buy sessions (the only
// ones the Table-5 style measurement can see). Throws NoOverlapError when no
// predicted session is in S_b.
double average_jaccard(const std::vector<SolutionEntry>& solution,
                       const GroundTruth& gt);

struct MetricsReport {
  double score = 0;
  double recall = 0;
  double precision = 0;
  double f1 = 0;
  double avg_jaccard = 0;  // 0 when no predicted session is in S_b
  std::uint64_t predicted_sessions = 0;
  double max_possible = 0;

  std::string to_table() const;
  std::string to_kv() const;
};

MetricsReport evaluate(const std::vector<SolutionEntry>& solution,
                       const GroundTruth& gt);

// Local testbed: half of the buy sessions and a quarter of the non-buy
// sessions (floor) go to test, the rest to train; ground truth comes from the
// test-side buys. Deterministic for a fixed (input order, seed).
struct TestbedSplit {
  std::vector<Session> train;
  std::vector<Session> test;
  GroundTruth truth;
};

TestbedSplit split_testbed(const std::vector<Session>& sessions,
                           std::uint64_t seed);

DatasetStats dataset_stats(const std::vector<Session>& sessions);

// Ground-truth files reuse the solution format; the universe size travels in
// a key=value sidecar (`test_sessions=N`).
void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path);
GroundTruth load_ground_truth(const std::filesystem::path& path,
                              std::uint64_t test_session_count);
GroundTruth load_ground_truth_with_meta(const std::filesystem::path& path);

}  // namespace buypred
