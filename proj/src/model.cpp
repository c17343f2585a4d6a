#include "buypred/model.hpp"

#include <charconv>
#include <stdexcept>

namespace buypred {

CategoryCode CategoryCode::regular(std::int64_t value) {
  if (value < 1 || value > 12)
    throw std::invalid_argument("regular category must be in 1..12, got " +
                                std::to_string(value));
  return CategoryCode(Kind::Regular, value);
}

CategoryCode CategoryCode::brand(std::int64_t value) {
  if (value >= 0 && value <= 12)
    throw std::invalid_argument("brand code must be outside 0..12, got " +
                                std::to_string(value));
  return CategoryCode(Kind::Brand, value);
}

std::optional<CategoryCode> CategoryCode::from_field(std::string_view text) {
  if (text == "S") return special();
  if (text.empty()) return std::nullopt;
  std::int64_t value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  if (value < 0) return std::nullopt;
  if (value == 0) return unknown();
  if (value <= 12) return regular(value);
  return brand(value);
}

std::string CategoryCode::to_field() const {
  switch (kind_) {
    case Kind::Unknown:
      return "0";
    case Kind::Special:
      return "S";
    case Kind::Regular:
    case Kind::Brand:
      return std::to_string(value_);
  }
  return "0";
}

void derive_bought_items(Session& s) {
  s.bought_items.clear();
  s.bought_items.reserve(s.buys.size());
  for (const BuyEvent& b : s.buys) s.bought_items.push_back(b.item_id);
  std::sort(s.bought_items.begin(), s.bought_items.end());
  s.bought_items.erase(
      std::unique(s.bought_items.begin(), s.bought_items.end()),
      s.bought_items.end());
}

}  // namespace buypred
