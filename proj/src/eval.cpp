#include "buypred/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "buypred/errors.hpp"
#include "buypred/rng.hpp"

namespace buypred {

double jaccard(const std::vector<std::int64_t>& a,
               const std::vector<std::int64_t>& b) {
  if (a.empty() && b.empty()) throw BothEmptyError();
  std::size_t intersection = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j])
      ++i;
    else if (b[j] < a[i])
      ++j;
    else {
      ++intersection;
      ++i;
      ++j;
    }
  }
  const std::size_t unions = a.size() + b.size() - intersection;
  return static_cast<double>(intersection) / static_cast<double>(unions);
}

double challenge_score(const std::vector<SolutionEntry>& solution,
                       const GroundTruth& gt) {
  const double ratio = gt.buy_ratio();
  // Kahan summation: challenge-scale solutions add hundreds of thousands of
  // near-equal terms and plain accumulation drifts past the 1e-9 contract.
  double score = 0;
  double carry = 0;
  auto add = [&](double term) {
    const double y = term - carry;
    const double t = score + y;
    carry = (t - score) - y;
    score = t;
  };
  for (const SolutionEntry& entry : solution) {
    if (entry.items.empty()) throw EmptyItemSetError(entry.session_id);
    auto it = gt.buy_sessions.find(entry.session_id);
    if (it == gt.buy_sessions.end()) {
      add(-ratio);
    } else {
      add(ratio + jaccard(entry.items, it->second));
    }
  }
  return score;
}

double max_possible_score(const GroundTruth& gt) {
  return static_cast<double>(gt.buy_sessions.size()) * (gt.buy_ratio() + 1.0);
}

SessionMetrics session_metrics(const std::vector<std::int64_t>& predicted_ids,
                               const std::vector<std::int64_t>& truth_buy_ids) {
  std::unordered_set<std::int64_t> truth(truth_buy_ids.begin(),
                                         truth_buy_ids.end());
  std::uint64_t tp = 0;
  for (std::int64_t id : predicted_ids)
    if (truth.count(id)) ++tp;
  const std::uint64_t fp = predicted_ids.size() - tp;
  const std::uint64_t fn = truth.size() - tp;

  SessionMetrics m;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn)
                         : 0;
  m.precision =
      tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0;
  m.f1 = m.precision + m.recall > 0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0;
  return m;
}

double average_jaccard(const std::vector<SolutionEntry>& solution,
                       const GroundTruth& gt) {
  double sum = 0;
  std::uint64_t hits = 0;
  for (const SolutionEntry& entry : solution) {
    auto it = gt.buy_sessions.find(entry.session_id);
    if (it == gt.buy_sessions.end()) continue;
    sum += jaccard(entry.items, it->second);
    ++hits;
  }
  if (hits == 0) throw NoOverlapError();
  return sum / static_cast<double>(hits);
}

MetricsReport evaluate(const std::vector<SolutionEntry>& solution,
                       const GroundTruth& gt) {
  MetricsReport report;
  report.score = challenge_score(solution, gt);
  report.max_possible = max_possible_score(gt);
  report.predicted_sessions = solution.size();

  std::vector<std::int64_t> predicted_ids;
  predicted_ids.reserve(solution.size());
  for (const SolutionEntry& e : solution) predicted_ids.push_back(e.session_id);
  std::vector<std::int64_t> truth_ids;
  truth_ids.reserve(gt.buy_sessions.size());
  for (const auto& [id, items] : gt.buy_sessions) truth_ids.push_back(id);

  const SessionMetrics m = session_metrics(predicted_ids, truth_ids);
  report.recall = m.recall;
  report.precision = m.precision;
  report.f1 = m.f1;
  try {
    report.avg_jaccard = average_jaccard(solution, gt);
  } catch (const NoOverlapError&) {
    report.avg_jaccard = 0;
  }
  return report;
}

std::string MetricsReport::to_table() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "metric              value\n"
                "------------------  ------------\n"
                "score               %.4f\n"
                "max possible        %.4f\n"
                "recall              %.4f\n"
                "precision           %.4f\n"
                "f1                  %.4f\n"
                "avg jaccard         %.4f\n"
                "predicted sessions  %llu\n",
                score, max_possible, recall, precision, f1, avg_jaccard,
                static_cast<unsigned long long>(predicted_sessions));
  return buf;
}

std::string MetricsReport::to_kv() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "score=%.9f\nmax_possible_score=%.9f\nrecall=%.9f\n"
                "precision=%.9f\nf1=%.9f\navg_jaccard=%.9f\n"
                "predicted_sessions=%llu\n",
                score, max_possible, recall, precision, f1, avg_jaccard,
                static_cast<unsigned long long>(predicted_sessions));
  return buf;
}

TestbedSplit split_testbed(const std::vector<Session>& sessions,
                           std::uint64_t seed) {
  std::vector<std::size_t> buy_indices, non_buy_indices;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    if (sessions[i].is_buy())
      buy_indices.push_back(i);
    else
      non_buy_indices.push_back(i);
  }

  Rng rng(seed);
  shuffle(buy_indices, rng);
  shuffle(non_buy_indices, rng);

  const std::size_t buy_test = buy_indices.size() / 2;
  const std::size_t non_buy_test = non_buy_indices.size() / 4;

  std::vector<bool> to_test(sessions.size(), false);
  for (std::size_t k = 0; k < buy_test; ++k) to_test[buy_indices[k]] = true;
  for (std::size_t k = 0; k < non_buy_test; ++k)
    to_test[non_buy_indices[k]] = true;

  TestbedSplit split;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    if (to_test[i])
      split.test.push_back(sessions[i]);
    else
      split.train.push_back(sessions[i]);
  }
  split.truth.test_session_count = split.test.size();
  for (const Session& s : split.test)
    if (s.is_buy()) split.truth.buy_sessions[s.session_id] = s.bought_items;
  return split;
}

DatasetStats dataset_stats(const std::vector<Session>& sessions) {
  DatasetStats stats;
  std::unordered_set<std::int64_t> items;
  std::unordered_set<std::int64_t> session_items;
  for (const Session& s : sessions) {
    session_items.clear();
    for (const ClickEvent& e : s.clicks) {
      items.insert(e.item_id);
      session_items.insert(e.item_id);
    }
    for (std::int64_t item : s.bought_items) items.insert(item);
    if (s.is_buy()) {
      ++stats.buy_sessions;
      stats.item_buy_session_pairs += s.bought_items.size();
    } else {
      ++stats.non_buy_sessions;
      stats.item_click_session_pairs += session_items.size();
    }
  }
  stats.distinct_items = items.size();
  return stats;
}

void save_ground_truth(const GroundTruth& gt,
                       const std::filesystem::path& path) {
  std::vector<SolutionEntry> entries;
  entries.reserve(gt.buy_sessions.size());
  for (const auto& [id, bought] : gt.buy_sessions)
    entries.push_back({id, bought, 0.0});
  emit_solution(std::move(entries), path,
                std::numeric_limits<std::size_t>::max());

  std::filesystem::path meta = path;
  meta += ".meta";
  std::ofstream out(meta, std::ios::trunc);
  if (!out) throw IoError("cannot create " + meta.string());
  out << "test_sessions=" << gt.test_session_count << '\n';
  if (!out) throw IoError("write failure on " + meta.string());
}

GroundTruth load_ground_truth(const std::filesystem::path& path,
                              std::uint64_t test_session_count) {
  GroundTruth gt;
  gt.test_session_count = test_session_count;
  for (SolutionEntry& entry : parse_solution(path))
    gt.buy_sessions[entry.session_id] = std::move(entry.items);
  return gt;
}

GroundTruth load_ground_truth_with_meta(const std::filesystem::path& path) {
  std::filesystem::path meta = path;
  meta += ".meta";
  std::ifstream in(meta);
  if (!in)
    throw IoError("cannot open " + meta.string() +
                  " (pass the test-session count explicitly)");
  std::string line;
  std::uint64_t count = 0;
  bool found = false;
  while (std::getline(in, line)) {
    const std::string key = "test_sessions=";
    if (line.rfind(key, 0) == 0) {
      auto [ptr, ec] = std::from_chars(line.data() + key.size(),
                                       line.data() + line.size(), count);
      found = ec == std::errc() && ptr == line.data() + line.size();
    }
  }
  if (!found)
    throw ConfigError("no test_sessions entry in " + meta.string());
  return load_ground_truth(path, count);
}

}  // namespace buypred
