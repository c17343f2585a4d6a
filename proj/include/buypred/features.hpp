#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "buypred/model.hpp"
#include "buypred/preprocess.hpp"

namespace buypred {

inline constexpr int kItemFeatureCount = 22;
inline constexpr int kSessionFeatureCount = 15;

// 22 per-(session,item) features, index 0 holding feature 1:
//  1 clickBuyRatio          12 itemDuration (this session, seconds)
//  2 numberOfAppearance     13 price
//  3 itemPosition           14 categoryTopClickBuyRatio
//  4 isSunday               15 categoryTopBuy
//  5 isTuesday              16 sessionTopClickBuyRatio
//  6 hour                   17 sessionTopBuyCount
//  7 numberOfItems          18 maxDuration (session-wide)
//  8 itemAppearanceOverThree 19 itemOwnDuration (observation span)
//  9 isFirstItemCategory    20 clickCount
// 10 isLastItemCategory     21 categoryLowestPrice
// 11 buyCount               22 categoryHighestPrice
struct ItemFeatureVector {
  std::int64_t session_id = 0;
  std::int64_t item_id = 0;
  std::array<double, kItemFeatureCount> values{};
  Label label = Label::NonBuy;
};

// 15 per-session features, index 0 holding feature 1:
//  1 numberOfClicks        9 duration (seconds)
//  2 numberOfItems        10 hour
//  3 itemsOverClickBuyRatio 11 isSunday
//  4 itemsOverClickBuyCount 12 isTuesday
//  5 averageClickBuyRatio  13 averageItemDuration (global)
//  6 averageBuyCount       14 averageItemClickCount
//  7 itemAppearanceOverTwo 15 averageItemPrice
//  8 itemAppearanceOverThree
struct SessionFeatureVector {
  std::int64_t session_id = 0;
  std::array<double, kSessionFeatureCount> values{};
  Label label = Label::NonBuy;
};

// Cutoffs for session features 3 and 4. The defaults are the training-data
// values reported for the challenge corpus; recompute for other data.
struct FeatureThresholds {
  double ratio_threshold = 3.6;      // median item click-buy ratio
  double buy_count_threshold = 57.0; // mean item buyCount
};

// Median ratio (even count: mean of the two middle order statistics) and mean
// buyCount over the stats table.
FeatureThresholds compute_thresholds(const ItemStatsTable& stats);

// All 22 features for one clicked item. Calendar features come from the
// session's first click; category groups use resolved categories, items
// without one standing alone in a singleton group. Superlative ties all get 1.
ItemFeatureVector extract_item_features(const Session& s, std::int64_t item_id,
                                        const ItemStatsTable& stats,
                                        const CategoryMap& categories);

// One vector per distinct clicked item; label Buy iff the item was bought.
std::vector<ItemFeatureVector> extract_item_features_all(
    const Session& s, const ItemStatsTable& stats,
    const CategoryMap& categories);

SessionFeatureVector extract_session_features(
    const Session& s, const ItemStatsTable& stats,
    const FeatureThresholds& thresholds = {});

// Feature subset selection; indices are 1-based positions into the vector.
struct FeatureMask {
  std::string name;
  std::vector<int> indices;  // ascending, within [1, arity]
};

// Projection preserving index order. Throws IndexOutOfRangeError when the
// mask references a position beyond the vector.
std::vector<double> apply_mask(std::span<const double> values,
                               const FeatureMask& mask);

// Built-in session masks: "all", "selected", "w/o time-based", "w/o 3 and 4",
// "{1,5,6,7,15}", "w/o 1 and 2", "w/o aggregated".
const std::vector<FeatureMask>& builtin_session_masks();
const FeatureMask& session_mask(std::string_view name);  // UnknownMaskError

// CSV dump: header `sessionId[,itemId],f1..fN,label`, then one row per vector.
void dump_item_features_csv(const std::filesystem::path& path,
                            const std::vector<ItemFeatureVector>& rows);
void dump_session_features_csv(const std::filesystem::path& path,
                               const std::vector<SessionFeatureVector>& rows);

}  // namespace buypred
