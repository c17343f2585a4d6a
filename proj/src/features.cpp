#include "buypred/features.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "buypred/errors.hpp"
#include "buypred/timestamp.hpp"

namespace buypred {

namespace {

// Per-session working state shared by item and session feature extraction.
struct SessionView {
  std::vector<std::int64_t> distinct_items;  // first-click order
  std::unordered_map<std::int64_t, int> appearances;
  std::unordered_map<std::int64_t, int> first_click_position;  // 1-based
  ClickDurations durations;
  // Category group id per item: resolved category 1..12, or a unique negative
  // id for items without a resolved category (singleton groups).
  std::unordered_map<std::int64_t, int> group_of_item;

  int hour = 0;
  bool sunday = false;
  bool tuesday = false;
  double session_duration = 0;
};

SessionView build_view(const Session& s, const CategoryMap& categories) {
  if (s.clicks.empty())
    throw std::invalid_argument("session " + std::to_string(s.session_id) +
                                " has no clicks");
  SessionView view;
  view.durations = compute_click_durations(s);
  int position = 0;
  int next_singleton = -1;
  for (const ClickEvent& e : s.clicks) {
    ++position;
    auto [it, inserted] = view.first_click_position.emplace(e.item_id, position);
    if (inserted) {
      view.distinct_items.push_back(e.item_id);
      if (auto cat = categories.lookup(e.item_id))
        view.group_of_item[e.item_id] = *cat;
      else
        view.group_of_item[e.item_id] = next_singleton--;
    }
    view.appearances[e.item_id] += 1;
  }
  const Millis first = s.clicks.front().timestamp;
  const Millis last = s.clicks.back().timestamp;
  view.hour = utc_hour(first);
  const int weekday = utc_weekday(first);
  view.sunday = weekday == kSunday;
  view.tuesday = weekday == kTuesday;
  view.session_duration = static_cast<double>(last - first) / 1000.0;
  return view;
}

int items_appearing_over(const SessionView& view, int times) {
  int count = 0;
  for (const auto& [item, n] : view.appearances)
    if (n > times) ++count;
  return count;
}

}  // namespace

FeatureThresholds compute_thresholds(const ItemStatsTable& stats) {
  if (stats.empty())
    throw MissingStatsError("cannot compute thresholds from an empty table");
  std::vector<double> ratios;
  ratios.reserve(stats.size());
  double buy_count_sum = 0;
  for (const auto& [item, s] : stats.entries()) {
    ratios.push_back(s.click_buy_ratio);
    buy_count_sum += s.buy_count;
  }
  std::sort(ratios.begin(), ratios.end());
  const std::size_t n = ratios.size();
  double median = (n % 2 == 1) ? ratios[n / 2]
                               : 0.5 * (ratios[n / 2 - 1] + ratios[n / 2]);
  return {median, buy_count_sum / static_cast<double>(n)};
}

ItemFeatureVector extract_item_features(const Session& s, std::int64_t item_id,
                                        const ItemStatsTable& stats,
                                        const CategoryMap& categories) {
  SessionView view = build_view(s, categories);
  if (!view.appearances.count(item_id))
    throw std::invalid_argument("item " + std::to_string(item_id) +
                                " was not clicked in session " +
                                std::to_string(s.session_id));

  ItemFeatureVector out;
  out.session_id = s.session_id;
  out.item_id = item_id;
  out.label = std::binary_search(s.bought_items.begin(), s.bought_items.end(),
                                 item_id)
                  ? Label::Buy
                  : Label::NonBuy;
  auto& f = out.values;

  const ItemStats& item_stats = stats.at(item_id);
  const int group = view.group_of_item.at(item_id);

  f[0] = item_stats.click_buy_ratio;                            // 1
  f[1] = view.appearances.at(item_id);                          // 2
  f[2] = view.first_click_position.at(item_id);                 // 3
  f[3] = view.sunday ? 1 : 0;                                   // 4
  f[4] = view.tuesday ? 1 : 0;                                  // 5
  f[5] = view.hour;                                             // 6
  f[6] = static_cast<double>(view.distinct_items.size());       // 7
  f[7] = items_appearing_over(view, 3);                         // 8

  // First/last click within the item's category group.
  std::int64_t first_in_group = 0, last_in_group = 0;
  bool seen = false;
  for (const ClickEvent& e : s.clicks) {
    if (view.group_of_item.at(e.item_id) != group) continue;
    if (!seen) {
      first_in_group = e.item_id;
      seen = true;
    }
    last_in_group = e.item_id;
  }
  f[8] = first_in_group == item_id ? 1 : 0;  // 9
  f[9] = last_in_group == item_id ? 1 : 0;   // 10

  f[10] = item_stats.buy_count;                     // 11
  f[11] = view.durations.item_duration(item_id);    // 12
  f[12] = item_stats.price;                         // 13

  // Superlatives over the distinct items of the category group / session.
  double group_max_ratio = 0, group_max_buy = 0;
  double group_min_price = 0, group_max_price = 0;
  bool group_first = true;
  double session_max_ratio = 0, session_max_buy = 0, session_max_duration = 0;
  bool session_first = true;
  for (std::int64_t other : view.distinct_items) {
    const ItemStats& os = stats.at(other);
    const double duration = view.durations.item_duration(other);
    if (session_first) {
      session_max_ratio = os.click_buy_ratio;
      session_max_buy = os.buy_count;
      session_max_duration = duration;
      session_first = false;
    } else {
      session_max_ratio = std::max(session_max_ratio, os.click_buy_ratio);
      session_max_buy = std::max(session_max_buy, os.buy_count);
      session_max_duration = std::max(session_max_duration, duration);
    }
    if (view.group_of_item.at(other) != group) continue;
    if (group_first) {
      group_max_ratio = os.click_buy_ratio;
      group_max_buy = os.buy_count;
      group_min_price = os.price;
      group_max_price = os.price;
      group_first = false;
    } else {
      group_max_ratio = std::max(group_max_ratio, os.click_buy_ratio);
      group_max_buy = std::max(group_max_buy, os.buy_count);
      group_min_price = std::min(group_min_price, os.price);
      group_max_price = std::max(group_max_price, os.price);
    }
  }

  f[13] = item_stats.click_buy_ratio >= group_max_ratio ? 1 : 0;     // 14
  f[14] = item_stats.buy_count >= group_max_buy ? 1 : 0;             // 15
  f[15] = item_stats.click_buy_ratio >= session_max_ratio ? 1 : 0;   // 16
  f[16] = item_stats.buy_count >= session_max_buy ? 1 : 0;           // 17
  f[17] = view.durations.item_duration(item_id) >= session_max_duration
              ? 1
              : 0;                                                   // 18
  f[18] = item_stats.observation_span;                               // 19
  f[19] = item_stats.click_count;                                    // 20
  f[20] = item_stats.price <= group_min_price ? 1 : 0;               // 21
  f[21] = item_stats.price >= group_max_price ? 1 : 0;               // 22
  return out;
}

std::vector<ItemFeatureVector> extract_item_features_all(
    const Session& s, const ItemStatsTable& stats,
    const CategoryMap& categories) {
  // Builds the per-session view once and reuses the single-item path's exact
  // arithmetic by delegating; sessions are small, clarity wins.
  SessionView view = build_view(s, categories);
  std::vector<ItemFeatureVector> out;
  out.reserve(view.distinct_items.size());
  for (std::int64_t item : view.distinct_items)
    out.push_back(extract_item_features(s, item, stats, categories));
  return out;
}

SessionFeatureVector extract_session_features(
    const Session& s, const ItemStatsTable& stats,
    const FeatureThresholds& thresholds) {
  CategoryMap no_categories;  // session features never need category groups
  SessionView view = build_view(s, no_categories);

  SessionFeatureVector out;
  out.session_id = s.session_id;
  out.label = session_label(s);
  auto& f = out.values;

  const double item_count = static_cast<double>(view.distinct_items.size());
  double ratio_sum = 0, buy_count_sum = 0, duration_sum = 0, click_count_sum = 0,
         price_sum = 0;
  int over_ratio = 0, over_buy_count = 0;
  for (std::int64_t item : view.distinct_items) {
    const ItemStats& is = stats.at(item);
    ratio_sum += is.click_buy_ratio;
    buy_count_sum += is.buy_count;
    duration_sum += is.global_item_duration;
    click_count_sum += is.click_count;
    price_sum += is.price;
    if (is.click_buy_ratio > thresholds.ratio_threshold) ++over_ratio;
    if (is.buy_count > thresholds.buy_count_threshold) ++over_buy_count;
  }

  f[0] = static_cast<double>(s.clicks.size());  // 1
  f[1] = item_count;                            // 2
  f[2] = over_ratio;                            // 3
  f[3] = over_buy_count;                        // 4
  f[4] = ratio_sum / item_count;                // 5
  f[5] = buy_count_sum / item_count;            // 6
  f[6] = items_appearing_over(view, 2);         // 7
  f[7] = items_appearing_over(view, 3);         // 8
  f[8] = view.session_duration;                 // 9
  f[9] = view.hour;                             // 10
  f[10] = view.sunday ? 1 : 0;                  // 11
  f[11] = view.tuesday ? 1 : 0;                 // 12
  f[12] = duration_sum / item_count;            // 13
  f[13] = click_count_sum / item_count;         // 14
  f[14] = price_sum / item_count;               // 15
  return out;
}

// ---------------------------------------------------------------------------
// Feature masks
// ---------------------------------------------------------------------------

std::vector<double> apply_mask(std::span<const double> values,
                               const FeatureMask& mask) {
  std::vector<double> out;
  out.reserve(mask.indices.size());
  for (int index : mask.indices) {
    if (index < 1 || static_cast<std::size_t>(index) > values.size())
      throw IndexOutOfRangeError("mask '" + mask.name + "' index " +
                                 std::to_string(index) + " out of range for " +
                                 std::to_string(values.size()) + " features");
    out.push_back(values[static_cast<std::size_t>(index - 1)]);
  }
  return out;
}

namespace {

std::vector<int> all_indices() {
  std::vector<int> v(kSessionFeatureCount);
  for (int i = 0; i < kSessionFeatureCount; ++i) v[static_cast<std::size_t>(i)] = i + 1;
  return v;
}

std::vector<int> all_without(std::initializer_list<int> removed) {
  std::vector<int> v;
  for (int i = 1; i <= kSessionFeatureCount; ++i)
    if (std::find(removed.begin(), removed.end(), i) == removed.end())
      v.push_back(i);
  return v;
}

}  // namespace

const std::vector<FeatureMask>& builtin_session_masks() {
  static const std::vector<FeatureMask> kMasks = {
      {"all", all_indices()},
      // The submitted feature set is the full 15-feature session vector.
      {"selected", all_indices()},
      {"w/o time-based", all_without({9, 10, 11, 12})},
      {"w/o 3 and 4", all_without({3, 4})},
      {"{1,5,6,7,15}", {1, 5, 6, 7, 15}},
      {"w/o 1 and 2", all_without({1, 2})},
      {"w/o aggregated", all_without({5, 6, 13, 14, 15})},
  };
  return kMasks;
}

const FeatureMask& session_mask(std::string_view name) {
  for (const FeatureMask& mask : builtin_session_masks())
    if (mask.name == name) return mask;
  throw UnknownMaskError(std::string(name));
}

// ---------------------------------------------------------------------------
// CSV dumps
// ---------------------------------------------------------------------------

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

void dump_item_features_csv(const std::filesystem::path& path,
                            const std::vector<ItemFeatureVector>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << "sessionId,itemId";
  for (int i = 1; i <= kItemFeatureCount; ++i) out << ",f" << i;
  out << ",label\n";
  for (const auto& row : rows) {
    out << row.session_id << ',' << row.item_id;
    for (double v : row.values) out << ',' << format_double(v);
    out << ',' << (row.label == Label::Buy ? "buy" : "nonbuy") << '\n';
  }
  if (!out) throw IoError("write failure on " + path.string());
}

void dump_session_features_csv(const std::filesystem::path& path,
                               const std::vector<SessionFeatureVector>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << "sessionId";
  for (int i = 1; i <= kSessionFeatureCount; ++i) out << ",f" << i;
  out << ",label\n";
  for (const auto& row : rows) {
    out << row.session_id;
    for (double v : row.values) out << ',' << format_double(v);
    out << ',' << (row.label == Label::Buy ? "buy" : "nonbuy") << '\n';
  }
  if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace buypred
