#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "buypred/timestamp.hpp"

namespace buypred {

enum class Label : std::uint8_t { NonBuy = 0, Buy = 1 };

// Category attribute of a click row: 0 = unknown, 1..12 = regular shop
// categories, "S" = special offer, any other integer > 12 = brand.
class CategoryCode {
 public:
  enum class Kind : std::uint8_t { Unknown = 0, Regular, Special, Brand };

  CategoryCode() = default;

  static CategoryCode unknown() { return CategoryCode(); }
  static CategoryCode special() { return CategoryCode(Kind::Special, 0); }
  static CategoryCode regular(std::int64_t value);  // value in 1..12
  static CategoryCode brand(std::int64_t value);    // value > 12

  // Decodes a raw category field: "0" -> Unknown, "1".."12" -> Regular,
  // "S" -> Special, integer > 12 -> Brand. Anything else is rejected.
  static std::optional<CategoryCode> from_field(std::string_view text);

  Kind kind() const { return kind_; }
  std::int64_t value() const { return value_; }

  std::string to_field() const;

  bool operator==(const CategoryCode&) const = default;

 private:
  CategoryCode(Kind kind, std::int64_t value) : kind_(kind), value_(value) {}

  Kind kind_ = Kind::Unknown;
  std::int64_t value_ = 0;
};

struct ClickEvent {
  std::int64_t session_id = 0;
  Millis timestamp = 0;
  std::int64_t item_id = 0;
  CategoryCode category;

  bool operator==(const ClickEvent&) const = default;
};

struct BuyEvent {
  std::int64_t session_id = 0;
  Millis timestamp = 0;
  std::int64_t item_id = 0;
  std::int64_t price = 0;     // currency units; 0 means "not available"
  std::int64_t quantity = 1;  // >= 1

  bool operator==(const BuyEvent&) const = default;
};

// One session: clicks ordered by timestamp (stable on ties), plus its buy
// rows when the buy file had any. bought_items are the sorted distinct item
// ids of the buys; they may reference items never clicked in the session.
struct Session {
  std::int64_t session_id = 0;
  std::vector<ClickEvent> clicks;
  std::vector<BuyEvent> buys;
  std::vector<std::int64_t> bought_items;

  bool is_buy() const { return !bought_items.empty(); }
};

inline Label session_label(const Session& s) {
  return s.bought_items.empty() ? Label::NonBuy : Label::Buy;
}

// Stable sort by timestamp; idempotent, ties keep input order.
inline void sort_clicks(Session& s) {
  std::stable_sort(
      s.clicks.begin(), s.clicks.end(),
      [](const ClickEvent& a, const ClickEvent& b) {
        return a.timestamp < b.timestamp;
      });
}

// Rebuilds bought_items from the buy rows (sorted distinct item ids).
void derive_bought_items(Session& s);

struct DatasetStats {
  std::uint64_t buy_sessions = 0;      // n_b
  std::uint64_t non_buy_sessions = 0;  // n_c
  std::uint64_t item_buy_session_pairs = 0;    // distinct (item, buy session)
  std::uint64_t item_click_session_pairs = 0;  // distinct (item, non-buy sess.)
  std::uint64_t distinct_items = 0;

  std::uint64_t total_sessions() const {
    return buy_sessions + non_buy_sessions;
  }
};

}  // namespace buypred
