#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <unordered_map>
#include <vector>

#include "buypred/errors.hpp"
#include "buypred/ingest.hpp"
#include "buypred/model.hpp"

namespace buypred {

// item -> most frequent Regular category (1..12). Items never observed with a
// Regular category are absent. Ties break to the smallest category id.
class CategoryMap {
 public:
  std::optional<int> lookup(std::int64_t item_id) const {
    auto it = map_.find(item_id);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

  void set(std::int64_t item_id, int category) { map_[item_id] = category; }

  std::size_t size() const { return map_.size(); }
  const std::unordered_map<std::int64_t, int>& entries() const { return map_; }

  // CSV cache: `itemId,category` per line, ascending itemId.
  void dump_csv(const std::filesystem::path& path) const;
  static CategoryMap load_csv(const std::filesystem::path& path);

 private:
  std::unordered_map<std::int64_t, int> map_;
};

// Counts Regular-category observations per item over any click source
// (training and test clicks both allowed: categories are input metadata).
class CategoryResolver {
 public:
  void observe(const ClickEvent& e);
  void observe_session(const Session& s);
  CategoryMap finish() const;

 private:
  std::unordered_map<std::int64_t, std::array<std::uint32_t, 12>> counts_;
};

CategoryMap resolve_categories(EventStream<ClickEvent> clicks);

// Per-click dwell (seconds to the next click; 0 for the last click) and the
// per-item dwell sums for one session.
struct ClickDurations {
  std::vector<double> dwell_seconds;
  std::unordered_map<std::int64_t, double> item_duration_seconds;

  double item_duration(std::int64_t item_id) const {
    auto it = item_duration_seconds.find(item_id);
    return it == item_duration_seconds.end() ? 0.0 : it->second;
  }
};

// Throws NegativeDurationError when clicks are unsorted (caller bug).
ClickDurations compute_click_durations(const Session& s);

// Global per-item statistics over the training sessions (never test data).
// Smoothing: clickCount 0 -> 1, buyCount 0 -> 10, price never observed -> 1000.
struct ItemStats {
  double click_count = 1;
  double buy_count = 10;
  double click_buy_ratio = 0.1;
  double price = 1000;
  double global_item_duration = 0;  // seconds
  double observation_span = 0;      // seconds between first/last click
};

struct ItemStatsConfig {
  // Ratio is clicks-per-buy by default; set to true to flip the direction.
  bool invert_ratio = false;
};

class ItemStatsTable {
 public:
  explicit ItemStatsTable(ItemStatsConfig config = {}) : config_(config) {}

  // Total by construction: unknown items get the smoothed defaults, so the
  // ratio stays finite for any query. Throws MissingStatsError only when the
  // table is empty (features requested before stats were built).
  const ItemStats& at(std::int64_t item_id) const;

  const ItemStats* find(std::int64_t item_id) const {
    auto it = table_.find(item_id);
    return it == table_.end() ? nullptr : &it->second;
  }

  bool empty() const { return table_.empty(); }
  std::size_t size() const { return table_.size(); }
  const ItemStatsConfig& config() const { return config_; }
  const std::unordered_map<std::int64_t, ItemStats>& entries() const {
    return table_;
  }

  void insert(std::int64_t item_id, ItemStats stats) {
    table_[item_id] = stats;
  }

  // CSV cache with exact decimal (shortest round-trip) serialization:
  // itemId,clickCount,buyCount,ratio,price,globalDuration,span
  void dump_csv(const std::filesystem::path& path) const;
  static ItemStatsTable load_csv(const std::filesystem::path& path,
                                 ItemStatsConfig config = {});

  static ItemStats smoothed_default(const ItemStatsConfig& config);

 private:
  ItemStatsConfig config_;
  std::unordered_map<std::int64_t, ItemStats> table_;
};

// Streaming accumulator; one add_session() per training session. Partial
// builders can be merged, and the result is independent of merge order.
class ItemStatsBuilder {
 public:
  explicit ItemStatsBuilder(ItemStatsConfig config = {}) : config_(config) {}

  void add_session(const Session& s);
  void merge(const ItemStatsBuilder& other);
  ItemStatsTable finish() const;

 private:
  struct Accum {
    std::uint64_t click_sessions = 0;
    std::uint64_t buy_sessions = 0;
    double duration_sum = 0;
    Millis first_seen = 0;
    Millis last_seen = 0;
    bool seen_in_clicks = false;
    // Latest non-zero buy price; ties on timestamp keep the later arrival.
    std::int64_t price = 0;
    Millis price_timestamp = 0;
    bool has_price = false;
  };

  ItemStatsConfig config_;
  std::unordered_map<std::int64_t, Accum> accum_;
};

ItemStatsTable compute_item_stats(const std::vector<Session>& train_sessions,
                                  ItemStatsConfig config = {});

}  // namespace buypred
