#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "buypred/errors.hpp"
#include "buypred/eval.hpp"
#include "buypred/rng.hpp"
#include "test_util.hpp"

using namespace buypred;

namespace {

// Independent scoring oracle: literal per-session formula over std::set,
// structurally unrelated to the library's map + two-pointer implementation.
double oracle_score(const std::vector<SolutionEntry>& solution,
                    const GroundTruth& gt) {
  const double ratio =
      gt.test_session_count == 0
          ? 0.0
          : double(gt.buy_sessions.size()) / double(gt.test_session_count);
  double total = 0;
  for (const SolutionEntry& entry : solution) {
    bool in_truth = false;
    for (const auto& [sid, items] : gt.buy_sessions) {
      if (sid != entry.session_id) continue;
      in_truth = true;
      std::set<std::int64_t> a(entry.items.begin(), entry.items.end());
      std::set<std::int64_t> b(items.begin(), items.end());
      std::size_t inter = 0;
      for (std::int64_t x : a) inter += b.count(x);
      const std::size_t uni = a.size() + b.size() - inter;
      total += ratio + double(inter) / double(uni);
      break;
    }
    if (!in_truth) total -= ratio;
  }
  return total;
}

GroundTruth tiny_truth() {
  GroundTruth gt;
  gt.test_session_count = 20;
  gt.buy_sessions[1] = {10, 20};
  return gt;
}

Session labeled_session(std::int64_t sid, bool buy) {
  Session s;
  s.session_id = sid;
  s.clicks = {{sid, 0, 1, CategoryCode::unknown()}};
  if (buy) s.bought_items = {1};
  return s;
}

}  // namespace

TEST_CASE("jaccard basics") {
  CHECK(jaccard({1, 2}, {2, 3}) == doctest::Approx(1.0 / 3.0));
  CHECK(jaccard({1, 2, 3}, {1, 2, 3}) == 1.0);
  CHECK(jaccard({1}, {2}) == 0.0);
  CHECK_THROWS_AS(jaccard({}, {}), BothEmptyError);
}

TEST_CASE("challenge score single-session anchors") {
  GroundTruth gt = tiny_truth();
  CHECK(challenge_score({}, gt) == 0.0);
  // Correct session, perfect items: 1/20 + 1 = 1.05.
  CHECK(challenge_score({{1, {10, 20}, 0}}, gt) == doctest::Approx(1.05));
  // Wrong session: -1/20.
  CHECK(challenge_score({{2, {10}, 0}}, gt) == doctest::Approx(-0.05));
  CHECK_THROWS_AS(challenge_score({{1, {}, 0}}, gt), EmptyItemSetError);
}

TEST_CASE("challenge score matches the brute-force oracle") {
  Rng rng(2718);
  for (int instance = 0; instance < 250; ++instance) {
    GroundTruth gt;
    gt.test_session_count = 1 + rng.below(100);
    const std::uint64_t buys = rng.below(gt.test_session_count + 1);
    for (std::uint64_t b = 0; b < buys; ++b) {
      const std::int64_t sid = static_cast<std::int64_t>(
          rng.below(gt.test_session_count));
      auto& items = gt.buy_sessions[sid];
      items.clear();
      const int n = 1 + static_cast<int>(rng.below(10));
      std::set<std::int64_t> set;
      for (int i = 0; i < n; ++i)
        set.insert(static_cast<std::int64_t>(rng.below(10)));
      items.assign(set.begin(), set.end());
    }
    std::vector<SolutionEntry> solution;
    std::set<std::int64_t> used;
    const std::uint64_t entries = rng.below(gt.test_session_count + 1);
    for (std::uint64_t k = 0; k < entries; ++k) {
      const std::int64_t sid =
          static_cast<std::int64_t>(rng.below(gt.test_session_count + 20));
      if (!used.insert(sid).second) continue;
      std::set<std::int64_t> set;
      const int n = 1 + static_cast<int>(rng.below(10));
      for (int i = 0; i < n; ++i)
        set.insert(static_cast<std::int64_t>(rng.below(10)));
      SolutionEntry e;
      e.session_id = sid;
      e.items.assign(set.begin(), set.end());
      solution.push_back(std::move(e));
    }
    const double got = challenge_score(solution, gt);
    const double want = oracle_score(solution, gt);
    CHECK(std::abs(got - want) < 1e-9);
  }
}

TEST_CASE("score monotonicity") {
  GroundTruth gt;
  gt.test_session_count = 40;
  for (int sid = 0; sid < 8; ++sid) gt.buy_sessions[sid] = {1, 2, 3};
  const double ratio = 8.0 / 40.0;

  std::vector<SolutionEntry> base = {{0, {1, 2, 3}, 0}, {99, {5}, 0}};
  const double before = challenge_score(base, gt);

  // Adding a correct session with nonzero Jaccard never decreases the score.
  std::vector<SolutionEntry> plus_correct = base;
  plus_correct.push_back({1, {1, 9}, 0});  // jaccard 1/4
  CHECK(challenge_score(plus_correct, gt) >= before);

  // Adding an incorrect session costs exactly |S_b|/|S_t|.
  std::vector<SolutionEntry> plus_wrong = base;
  plus_wrong.push_back({77, {5}, 0});
  CHECK(challenge_score(plus_wrong, gt) ==
        doctest::Approx(before - ratio).epsilon(1e-12));
}

TEST_CASE("max_possible_score bounds any solution") {
  GroundTruth gt;
  gt.test_session_count = 20;
  gt.buy_sessions[3] = {7};
  CHECK(max_possible_score(gt) == doctest::Approx(1.05));

  Rng rng(31337);
  GroundTruth big;
  big.test_session_count = 50;
  for (int sid = 0; sid < 10; ++sid)
    big.buy_sessions[sid] = {static_cast<std::int64_t>(rng.below(4)),
                             static_cast<std::int64_t>(4 + rng.below(4))};
  const double cap = max_possible_score(big);
  for (int round = 0; round < 50; ++round) {
    std::vector<SolutionEntry> solution;
    for (int sid = 0; sid < 20; ++sid) {
      if (!rng.bernoulli(0.5)) continue;
      SolutionEntry e;
      e.session_id = sid;
      std::set<std::int64_t> items;
      const int n = 1 + static_cast<int>(rng.below(4));
      for (int i = 0; i < n; ++i)
        items.insert(static_cast<std::int64_t>(rng.below(8)));
      e.items.assign(items.begin(), items.end());
      solution.push_back(std::move(e));
    }
    CHECK(challenge_score(solution, big) <= cap + 1e-12);
  }
}

TEST_CASE("session metrics") {
  SessionMetrics perfect = session_metrics({1, 2, 3}, {1, 2, 3});
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.f1 == 1.0);

  // Predict everything on 5% positives.
  std::vector<std::int64_t> all, truth;
  for (int i = 0; i < 100; ++i) {
    all.push_back(i);
    if (i < 5) truth.push_back(i);
  }
  SessionMetrics spray = session_metrics(all, truth);
  CHECK(spray.recall == 1.0);
  CHECK(spray.precision == doctest::Approx(0.05));

  // TP=2, FP=2, FN=1.
  SessionMetrics mixed = session_metrics({1, 2, 8, 9}, {1, 2, 3});
  CHECK(mixed.recall == doctest::Approx(2.0 / 3.0));
  CHECK(mixed.precision == doctest::Approx(0.5));
  CHECK(mixed.f1 == doctest::Approx(4.0 / 7.0));

  SessionMetrics nothing = session_metrics({}, {});
  CHECK(nothing.recall == 0.0);
  CHECK(nothing.precision == 0.0);
  CHECK(nothing.f1 == 0.0);
}

TEST_CASE("average jaccard conditions on predicted true-buy sessions") {
  GroundTruth gt;
  gt.test_session_count = 10;
  gt.buy_sessions[1] = {1, 2};
  gt.buy_sessions[2] = {5};
  CHECK(average_jaccard({{1, {1, 2}, 0}, {2, {5}, 0}}, gt) == 1.0);
  // One session at 1/3, plus a miss that is excluded from the mean.
  CHECK(average_jaccard({{1, {2, 3}, 0}, {9, {5}, 0}}, gt) ==
        doctest::Approx(1.0 / 3.0));
  // Two sessions {1, 1/3} -> mean 2/3.
  CHECK(average_jaccard({{1, {1, 2}, 0}, {2, {5, 6, 7}, 0}}, gt) ==
        doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(average_jaccard({{9, {5}, 0}}, gt), NoOverlapError);
}

TEST_CASE("split_testbed takes floor(half) buys and floor(quarter) non-buys") {
  std::vector<Session> sessions;
  for (int i = 0; i < 10; ++i) sessions.push_back(labeled_session(i, true));
  for (int i = 10; i < 110; ++i) sessions.push_back(labeled_session(i, false));

  TestbedSplit split = split_testbed(sessions, 5);
  std::size_t test_buys = 0, test_non = 0;
  for (const Session& s : split.test) (s.is_buy() ? test_buys : test_non) += 1;
  CHECK(test_buys == 5);
  CHECK(test_non == 25);
  CHECK(split.train.size() + split.test.size() == sessions.size());
  CHECK(split.truth.test_session_count == split.test.size());
  CHECK(split.truth.buy_sessions.size() == 5);

  // Disjoint and union by session id.
  std::set<std::int64_t> seen;
  for (const Session& s : split.train) CHECK(seen.insert(s.session_id).second);
  for (const Session& s : split.test) CHECK(seen.insert(s.session_id).second);
  CHECK(seen.size() == sessions.size());
}

TEST_CASE("split_testbed is deterministic per seed") {
  std::vector<Session> sessions;
  for (int i = 0; i < 60; ++i) sessions.push_back(labeled_session(i, i % 7 == 0));
  TestbedSplit a = split_testbed(sessions, 42);
  TestbedSplit b = split_testbed(sessions, 42);
  REQUIRE(a.test.size() == b.test.size());
  for (std::size_t i = 0; i < a.test.size(); ++i)
    CHECK(a.test[i].session_id == b.test[i].session_id);
  TestbedSplit c = split_testbed(sessions, 43);
  bool identical = a.test.size() == c.test.size();
  if (identical)
    for (std::size_t i = 0; i < a.test.size(); ++i)
      identical = identical && a.test[i].session_id == c.test[i].session_id;
  CHECK_FALSE(identical);
}

TEST_CASE("dataset_stats counts the Table-3 quantities") {
  CHECK(dataset_stats({}).total_sessions() == 0);
  CHECK(dataset_stats({}).distinct_items == 0);

  // Three sessions, hand-counted.
  Session buy1;  // clicks on items 1,2; buys 2
  buy1.session_id = 1;
  buy1.clicks = {{1, 0, 1, {}}, {1, 1, 2, {}}};
  buy1.bought_items = {2};
  Session non2;  // clicks on items 2,3,3
  non2.session_id = 2;
  non2.clicks = {{2, 0, 2, {}}, {2, 1, 3, {}}, {2, 2, 3, {}}};
  Session buy3;  // clickless buy of items 4,5
  buy3.session_id = 3;
  buy3.bought_items = {4, 5};

  DatasetStats stats = dataset_stats({buy1, non2, buy3});
  CHECK(stats.buy_sessions == 2);
  CHECK(stats.non_buy_sessions == 1);
  CHECK(stats.item_buy_session_pairs == 3);    // {2} + {4,5}
  CHECK(stats.item_click_session_pairs == 2);  // non-buy session items {2,3}
  CHECK(stats.distinct_items == 5);            // 1,2,3,4,5
  CHECK(stats.total_sessions() == 3);
}

TEST_CASE("ground truth files round-trip with their sidecar") {
  testutil::TempDir tmp("gt");
  GroundTruth gt;
  gt.test_session_count = 1234;
  gt.buy_sessions[5] = {10, 11};
  gt.buy_sessions[9] = {3};
  save_ground_truth(gt, tmp.file("ground_truth.dat"));

  GroundTruth loaded = load_ground_truth_with_meta(tmp.file("ground_truth.dat"));
  CHECK(loaded.test_session_count == 1234);
  REQUIRE(loaded.buy_sessions.size() == 2);
  CHECK(loaded.buy_sessions.at(5) == std::vector<std::int64_t>{10, 11});
  CHECK(loaded.buy_sessions.at(9) == std::vector<std::int64_t>{3});

  GroundTruth explicit_count =
      load_ground_truth(tmp.file("ground_truth.dat"), 99);
  CHECK(explicit_count.test_session_count == 99);
}

TEST_CASE("metrics report renders both formats") {
  GroundTruth gt = tiny_truth();
  MetricsReport report = evaluate({{1, {10, 20}, 0}}, gt);
  CHECK(report.score == doctest::Approx(1.05));
  CHECK(report.recall == 1.0);
  CHECK(report.avg_jaccard == 1.0);
  CHECK(report.max_possible == doctest::Approx(1.05));
  CHECK(report.to_kv().find("score=1.05") != std::string::npos);
  CHECK(report.to_table().find("recall") != std::string::npos);

  MetricsReport empty = evaluate({}, gt);
  CHECK(empty.score == 0.0);
  CHECK(empty.avg_jaccard == 0.0);  // no overlap collapses to 0 in the report
}
