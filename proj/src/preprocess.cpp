#include "buypred/preprocess.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>

namespace buypred {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double_field(const std::string& text, std::uint64_t line) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw MalformedRowError(line, "bad numeric field '" + text + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace

// ---------------------------------------------------------------------------
// Category resolution
// ---------------------------------------------------------------------------

void CategoryResolver::observe(const ClickEvent& e) {
  if (e.category.kind() != CategoryCode::Kind::Regular) return;
  auto& counts = counts_[e.item_id];
  counts[static_cast<std::size_t>(e.category.value() - 1)]++;
}

void CategoryResolver::observe_session(const Session& s) {
  for (const ClickEvent& e : s.clicks) observe(e);
}

CategoryMap CategoryResolver::finish() const {
  CategoryMap map;
  for (const auto& [item, counts] : counts_) {
    std::uint32_t best_count = 0;
    int best_category = 0;
    for (int c = 0; c < 12; ++c) {
      // Strictly-greater keeps the smallest category id on ties.
      if (counts[static_cast<std::size_t>(c)] > best_count) {
        best_count = counts[static_cast<std::size_t>(c)];
        best_category = c + 1;
      }
    }
    if (best_count > 0) map.set(item, best_category);
  }
  return map;
}

CategoryMap resolve_categories(EventStream<ClickEvent> clicks) {
  CategoryResolver resolver;
  while (auto e = clicks.next()) resolver.observe(*e);
  return resolver.finish();
}

void CategoryMap::dump_csv(const std::filesystem::path& path) const {
  std::vector<std::pair<std::int64_t, int>> rows(map_.begin(), map_.end());
  std::sort(rows.begin(), rows.end());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  for (const auto& [item, category] : rows)
    out << item << ',' << category << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

CategoryMap CategoryMap::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CategoryMap map;
  std::string line;
  std::uint64_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    auto fields = split_csv(line);
    if (fields.size() != 2)
      throw MalformedRowError(line_number, "expected itemId,category");
    map.set(static_cast<std::int64_t>(parse_double_field(fields[0], line_number)),
            static_cast<int>(parse_double_field(fields[1], line_number)));
  }
  return map;
}

// ---------------------------------------------------------------------------
// Click durations
// ---------------------------------------------------------------------------

ClickDurations compute_click_durations(const Session& s) {
  ClickDurations result;
  result.dwell_seconds.resize(s.clicks.size(), 0.0);
  for (std::size_t i = 0; i + 1 < s.clicks.size(); ++i) {
    const Millis delta = s.clicks[i + 1].timestamp - s.clicks[i].timestamp;
    if (delta < 0)
      throw NegativeDurationError("session " + std::to_string(s.session_id) +
                                  " clicks are not sorted by timestamp");
    result.dwell_seconds[i] = static_cast<double>(delta) / 1000.0;
  }
  // Last click dwell stays 0: there is no next click to subtract from.
  for (std::size_t i = 0; i < s.clicks.size(); ++i)
    result.item_duration_seconds[s.clicks[i].item_id] +=
        result.dwell_seconds[i];
  return result;
}

// ---------------------------------------------------------------------------
// Item statistics
// ---------------------------------------------------------------------------

void ItemStatsBuilder::add_session(const Session& s) {
  ClickDurations durations = compute_click_durations(s);

  // One click-session count per distinct clicked item.
  for (const auto& [item, duration] : durations.item_duration_seconds) {
    Accum& a = accum_[item];
    a.click_sessions += 1;
    a.duration_sum += duration;
  }
  for (const ClickEvent& e : s.clicks) {
    Accum& a = accum_[e.item_id];
    if (!a.seen_in_clicks) {
      a.seen_in_clicks = true;
      a.first_seen = e.timestamp;
      a.last_seen = e.timestamp;
    } else {
      a.first_seen = std::min(a.first_seen, e.timestamp);
      a.last_seen = std::max(a.last_seen, e.timestamp);
    }
  }
  for (std::int64_t item : s.bought_items) accum_[item].buy_sessions += 1;
  for (const BuyEvent& b : s.buys) {
    if (b.price <= 0) continue;
    Accum& a = accum_[b.item_id];
    if (!a.has_price || b.timestamp >= a.price_timestamp) {
      a.has_price = true;
      a.price = b.price;
      a.price_timestamp = b.timestamp;
    }
  }
}

void ItemStatsBuilder::merge(const ItemStatsBuilder& other) {
  for (const auto& [item, b] : other.accum_) {
    Accum& a = accum_[item];
    a.click_sessions += b.click_sessions;
    a.buy_sessions += b.buy_sessions;
    a.duration_sum += b.duration_sum;
    if (b.seen_in_clicks) {
      if (!a.seen_in_clicks) {
        a.seen_in_clicks = true;
        a.first_seen = b.first_seen;
        a.last_seen = b.last_seen;
      } else {
        a.first_seen = std::min(a.first_seen, b.first_seen);
        a.last_seen = std::max(a.last_seen, b.last_seen);
      }
    }
    if (b.has_price &&
        (!a.has_price || b.price_timestamp >= a.price_timestamp)) {
      a.has_price = true;
      a.price = b.price;
      a.price_timestamp = b.price_timestamp;
    }
  }
}

ItemStats ItemStatsTable::smoothed_default(const ItemStatsConfig& config) {
  ItemStats stats;
  stats.click_count = 1;
  stats.buy_count = 10;
  stats.price = 1000;
  stats.global_item_duration = 0;
  stats.observation_span = 0;
  stats.click_buy_ratio = config.invert_ratio
                              ? stats.buy_count / stats.click_count
                              : stats.click_count / stats.buy_count;
  return stats;
}

ItemStatsTable ItemStatsBuilder::finish() const {
  ItemStatsTable table(config_);
  for (const auto& [item, a] : accum_) {
    ItemStats stats;
    stats.click_count = a.click_sessions == 0
                            ? 1.0
                            : static_cast<double>(a.click_sessions);
    stats.buy_count =
        a.buy_sessions == 0 ? 10.0 : static_cast<double>(a.buy_sessions);
    stats.price = a.has_price ? static_cast<double>(a.price) : 1000.0;
    stats.global_item_duration = a.duration_sum;
    stats.observation_span =
        a.seen_in_clicks
            ? static_cast<double>(a.last_seen - a.first_seen) / 1000.0
            : 0.0;
    stats.click_buy_ratio = config_.invert_ratio
                                ? stats.buy_count / stats.click_count
                                : stats.click_count / stats.buy_count;
    table.insert(item, stats);
  }
  return table;
}

ItemStatsTable compute_item_stats(const std::vector<Session>& train_sessions,
                                  ItemStatsConfig config) {
  ItemStatsBuilder builder(config);
  for (const Session& s : train_sessions) builder.add_session(s);
  return builder.finish();
}

const ItemStats& ItemStatsTable::at(std::int64_t item_id) const {
  if (table_.empty())
    throw MissingStatsError("item stats table is empty; build stats first");
  auto it = table_.find(item_id);
  if (it != table_.end()) return it->second;
  static const ItemStats kDefault = smoothed_default(ItemStatsConfig{});
  static const ItemStats kDefaultInverted =
      smoothed_default(ItemStatsConfig{.invert_ratio = true});
  return config_.invert_ratio ? kDefaultInverted : kDefault;
}

void ItemStatsTable::dump_csv(const std::filesystem::path& path) const {
  std::vector<std::pair<std::int64_t, ItemStats>> rows(table_.begin(),
                                                       table_.end());
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  for (const auto& [item, s] : rows) {
    out << item << ',' << format_double(s.click_count) << ','
        << format_double(s.buy_count) << ',' << format_double(s.click_buy_ratio)
        << ',' << format_double(s.price) << ','
        << format_double(s.global_item_duration) << ','
        << format_double(s.observation_span) << '\n';
  }
  if (!out) throw IoError("write failure on " + path.string());
}

ItemStatsTable ItemStatsTable::load_csv(const std::filesystem::path& path,
                                        ItemStatsConfig config) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  ItemStatsTable table(config);
  std::string line;
  std::uint64_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    auto fields = split_csv(line);
    if (fields.size() != 7)
      throw MalformedRowError(line_number, "expected 7 stats columns");
    std::int64_t item = 0;
    auto [ptr, ec] =
        std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), item);
    if (ec != std::errc())
      throw MalformedRowError(line_number, "bad itemId '" + fields[0] + "'");
    ItemStats s;
    s.click_count = parse_double_field(fields[1], line_number);
    s.buy_count = parse_double_field(fields[2], line_number);
    s.click_buy_ratio = parse_double_field(fields[3], line_number);
    s.price = parse_double_field(fields[4], line_number);
    s.global_item_duration = parse_double_field(fields[5], line_number);
    s.observation_span = parse_double_field(fields[6], line_number);
    table.insert(item, s);
  }
  return table;
}

}  // namespace buypred
