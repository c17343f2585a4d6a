#include "buypred/cascade.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

#include <json.hpp>

#include "buypred/errors.hpp"
#include "buypred/rng.hpp"

namespace buypred {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

std::string to_string(SessionStage stage) {
  switch (stage) {
    case SessionStage::AdaBoost:
      return "adaboost";
    case SessionStage::NaiveBayes:
      return "naivebayes";
    case SessionStage::Heuristic:
      return "heuristic";
  }
  return "adaboost";
}

std::string to_string(ItemStage stage) {
  return stage == ItemStage::RandomForest ? "forest" : "naivebayes";
}

SessionStage session_stage_from_string(const std::string& name) {
  if (name == "adaboost") return SessionStage::AdaBoost;
  if (name == "naivebayes") return SessionStage::NaiveBayes;
  if (name == "heuristic") return SessionStage::Heuristic;
  throw ConfigError("unknown session stage '" + name + "'");
}

ItemStage item_stage_from_string(const std::string& name) {
  if (name == "forest") return ItemStage::RandomForest;
  if (name == "naivebayes") return ItemStage::NaiveBayes;
  throw ConfigError("unknown item stage '" + name + "'");
}

CascadeModel train_cascade(const std::vector<Session>& train,
                           const CascadeConfig& config, TrainReport* report) {
  TrainReport local;
  TrainReport& r = report ? *report : local;

  auto t0 = Clock::now();
  ItemStatsBuilder stats_builder(config.stats);
  CategoryResolver resolver;
  std::uint64_t buy_sessions_with_clicks = 0;
  for (const Session& s : train) {
    stats_builder.add_session(s);
    resolver.observe_session(s);
    if (s.is_buy()) {
      ++r.buy_sessions;
      if (!s.clicks.empty()) ++buy_sessions_with_clicks;
    }
  }
  if (r.buy_sessions == 0)
    throw InsufficientDataError("training stream has no buy session");

  CascadeModel model;
  model.config = config;
  model.stats = stats_builder.finish();
  model.categories = resolver.finish();
  model.mask = session_mask(config.session_mask);
  model.thresholds = config.recompute_thresholds
                         ? compute_thresholds(model.stats)
                         : config.thresholds;
  r.stats_seconds = seconds_since(t0);

  if (config.session_stage == SessionStage::Heuristic) {
    // The threshold strategy needs only the statistics table.
    return model;
  }

  // Session stage.
  t0 = Clock::now();
  {
    LabeledDataset sessions(static_cast<int>(model.mask.indices.size()));
    for (const Session& s : train) {
      if (s.clicks.empty()) continue;
      SessionFeatureVector v =
          extract_session_features(s, model.stats, model.thresholds);
      sessions.add(apply_mask(v.values, model.mask), v.label);
    }
    if (sessions.empty())
      throw InsufficientDataError("no session with clicks to train on");

    LabeledDataset training = sessions;
    if (config.resample.enabled) {
      const std::size_t output =
          std::min(sessions.size(), config.resample.max_output_size);
      training = resample(sessions, config.resample.target_positive_fraction,
                          output, splitmix64(config.seed ^ 0x5e55));
    }
    r.session_rows = training.size();

    if (config.session_stage == SessionStage::AdaBoost) {
      AdaBoostParams params = config.boost;
      params.seed = splitmix64(config.seed ^ 0xb005);
      model.session_boost = train_adaboost_m1(training, params);
    } else {
      model.session_nb = train_naive_bayes(training);
    }
  }
  r.session_seconds = seconds_since(t0);

  // Item stage: buy sessions only; bought items are the positives.
  t0 = Clock::now();
  {
    LabeledDataset items(kItemFeatureCount);
    for (const Session& s : train) {
      if (!s.is_buy() || s.clicks.empty()) continue;
      for (const ItemFeatureVector& v :
           extract_item_features_all(s, model.stats, model.categories)) {
        items.add(v.values, v.label);
        if (v.label == Label::Buy) ++r.item_rows_bought;
      }
    }
    if (items.empty())
      throw InsufficientDataError("no buy session has clicks");
    r.item_rows = items.size();

    if (config.item_stage == ItemStage::RandomForest) {
      ForestParams params = config.forest;
      params.seed = splitmix64(config.seed ^ 0xf03e);
      params.threads = config.threads;
      model.item_forest = train_forest(items, params);
    } else {
      model.item_nb = train_naive_bayes(items);
    }
  }
  r.item_seconds = seconds_since(t0);
  return model;
}

namespace {

Prediction score_session(const CascadeModel& model,
                         std::span<const double> masked) {
  if (model.config.session_stage == SessionStage::AdaBoost) {
    if (!model.session_boost) throw EmptyEnsembleError();
    return predict_adaboost(*model.session_boost, masked,
                            model.config.session_cutoff);
  }
  if (!model.session_nb)
    throw InsufficientDataError("model has no session classifier");
  return predict_naive_bayes(*model.session_nb, masked,
                             model.config.session_cutoff);
}

Prediction score_item(const CascadeModel& model, std::span<const double> x) {
  if (model.config.item_stage == ItemStage::RandomForest) {
    if (!model.item_forest)
      throw InsufficientDataError("model has no item classifier");
    return predict_forest(*model.item_forest, x, model.config.item_cutoff);
  }
  if (!model.item_nb)
    throw InsufficientDataError("model has no item classifier");
  return predict_naive_bayes(*model.item_nb, x, model.config.item_cutoff);
}

}  // namespace

std::vector<SolutionEntry> predict(const CascadeModel& model,
                                   const std::vector<Session>& test) {
  std::vector<SolutionEntry> entries;
  for (const Session& s : test) {
    if (s.clicks.empty()) continue;

    if (model.config.session_stage == SessionStage::Heuristic) {
      HeuristicResult h = heuristic_classify(
          s, model.stats, model.config.heuristic_ratio_threshold);
      if (h.label != Label::Buy) continue;
      SolutionEntry entry;
      entry.session_id = s.session_id;
      entry.items = h.ranked_items;
      std::sort(entry.items.begin(), entry.items.end());
      entry.session_score = h.mean_ratio;
      entries.push_back(std::move(entry));
      continue;
    }

    SessionFeatureVector v =
        extract_session_features(s, model.stats, model.thresholds);
    const Prediction gate =
        score_session(model, apply_mask(v.values, model.mask));
    if (gate.label != Label::Buy) continue;

    SolutionEntry entry;
    entry.session_id = s.session_id;
    entry.session_score = gate.score;

    double best_score = -1;
    std::int64_t best_item = 0;
    for (const ItemFeatureVector& iv :
         extract_item_features_all(s, model.stats, model.categories)) {
      const Prediction p = score_item(model, iv.values);
      if (p.score > best_score) {
        best_score = p.score;
        best_item = iv.item_id;
      }
      if (p.label == Label::Buy) entry.items.push_back(iv.item_id);
    }
    if (entry.items.empty()) entry.items.push_back(best_item);
    std::sort(entry.items.begin(), entry.items.end());
    entries.push_back(std::move(entry));
  }
  return entries;
}

// ---------------------------------------------------------------------------
// JSON model artifact
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

constexpr const char* kModelVersion = "buypred-model/1";

json tree_to_json(const Tree& t) {
  json nodes = json::array();
  for (const TreeNode& n : t.nodes)
    nodes.push_back({n.feature, n.threshold, n.left, n.right, n.p_buy});
  return {{"feature_count", t.feature_count}, {"nodes", std::move(nodes)}};
}

Tree tree_from_json(const json& j) {
  Tree t;
  t.feature_count = j.at("feature_count").get<int>();
  for (const json& n : j.at("nodes")) {
    TreeNode node;
    node.feature = n.at(0).get<int>();
    node.threshold = n.at(1).get<double>();
    node.left = n.at(2).get<std::int32_t>();
    node.right = n.at(3).get<std::int32_t>();
    node.p_buy = n.at(4).get<double>();
    t.nodes.push_back(node);
  }
  return t;
}

json nb_to_json(const NaiveBayesModel& m) {
  return {{"feature_count", m.feature_count}, {"prior_buy", m.prior_buy},
          {"mean_buy", m.mean_buy},           {"var_buy", m.var_buy},
          {"mean_non_buy", m.mean_non_buy},   {"var_non_buy", m.var_non_buy}};
}

NaiveBayesModel nb_from_json(const json& j) {
  NaiveBayesModel m;
  m.feature_count = j.at("feature_count").get<int>();
  m.prior_buy = j.at("prior_buy").get<double>();
  m.mean_buy = j.at("mean_buy").get<std::vector<double>>();
  m.var_buy = j.at("var_buy").get<std::vector<double>>();
  m.mean_non_buy = j.at("mean_non_buy").get<std::vector<double>>();
  m.var_non_buy = j.at("var_non_buy").get<std::vector<double>>();
  return m;
}

}  // namespace

void save_model(const CascadeModel& model, const std::filesystem::path& path) {
  json j;
  j["version"] = kModelVersion;

  const CascadeConfig& c = model.config;
  j["config"] = {
      {"session_stage", to_string(c.session_stage)},
      {"item_stage", to_string(c.item_stage)},
      {"session_mask", c.session_mask},
      {"session_cutoff", c.session_cutoff},
      {"item_cutoff", c.item_cutoff},
      {"boost_rounds", c.boost.rounds},
      {"boost_depth", c.boost.base.max_depth},
      {"forest_trees", c.forest.n_trees},
      {"forest_depth", c.forest.max_depth},
      {"forest_min_leaf", c.forest.min_leaf},
      {"forest_subset", c.forest.feature_subset_size},
      {"resample_enabled", c.resample.enabled},
      {"resample_fraction", c.resample.target_positive_fraction},
      {"resample_max_size", c.resample.max_output_size},
      {"ratio_threshold", c.thresholds.ratio_threshold},
      {"buy_count_threshold", c.thresholds.buy_count_threshold},
      {"recompute_thresholds", c.recompute_thresholds},
      {"heuristic_ratio_threshold", c.heuristic_ratio_threshold},
      {"invert_ratio", c.stats.invert_ratio},
      {"seed", c.seed},
  };
  j["thresholds"] = {{"ratio", model.thresholds.ratio_threshold},
                     {"buy_count", model.thresholds.buy_count_threshold}};
  j["mask"] = {{"name", model.mask.name}, {"indices", model.mask.indices}};

  json stats = json::array();
  {
    std::vector<std::pair<std::int64_t, ItemStats>> rows(
        model.stats.entries().begin(), model.stats.entries().end());
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [item, s] : rows)
      stats.push_back({item, s.click_count, s.buy_count, s.click_buy_ratio,
                       s.price, s.global_item_duration, s.observation_span});
  }
  j["stats"] = std::move(stats);

  json categories = json::array();
  {
    std::vector<std::pair<std::int64_t, int>> rows(
        model.categories.entries().begin(), model.categories.entries().end());
    std::sort(rows.begin(), rows.end());
    for (const auto& [item, category] : rows)
      categories.push_back({item, category});
  }
  j["categories"] = std::move(categories);

  if (model.session_boost) {
    json rounds = json::array();
    for (const BoostRound& r : model.session_boost->rounds)
      rounds.push_back({{"alpha", r.alpha},
                        {"epsilon", r.epsilon},
                        {"tree", tree_to_json(r.learner)}});
    j["session_boost"] = {
        {"feature_count", model.session_boost->feature_count},
        {"rounds", std::move(rounds)}};
  }
  if (model.session_nb) j["session_nb"] = nb_to_json(*model.session_nb);
  if (model.item_forest) {
    json trees = json::array();
    for (const Tree& t : model.item_forest->trees)
      trees.push_back(tree_to_json(t));
    j["item_forest"] = {{"feature_count", model.item_forest->feature_count},
                        {"trees", std::move(trees)}};
  }
  if (model.item_nb) j["item_nb"] = nb_to_json(*model.item_nb);

  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  out << j.dump();
  out << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

CascadeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("model file " + path.string() + " is not valid JSON: " +
                      e.what());
  }
  if (!j.contains("version") || j["version"] != kModelVersion)
    throw ConfigError("model file " + path.string() +
                      " has an unsupported version tag");

  CascadeModel model;
  const json& c = j.at("config");
  model.config.session_stage =
      session_stage_from_string(c.at("session_stage").get<std::string>());
  model.config.item_stage =
      item_stage_from_string(c.at("item_stage").get<std::string>());
  model.config.session_mask = c.at("session_mask").get<std::string>();
  model.config.session_cutoff = c.at("session_cutoff").get<double>();
  model.config.item_cutoff = c.at("item_cutoff").get<double>();
  model.config.boost.rounds = c.at("boost_rounds").get<int>();
  model.config.boost.base.max_depth = c.at("boost_depth").get<int>();
  model.config.forest.n_trees = c.at("forest_trees").get<int>();
  model.config.forest.max_depth = c.at("forest_depth").get<int>();
  model.config.forest.min_leaf = c.at("forest_min_leaf").get<int>();
  model.config.forest.feature_subset_size = c.at("forest_subset").get<int>();
  model.config.resample.enabled = c.at("resample_enabled").get<bool>();
  model.config.resample.target_positive_fraction =
      c.at("resample_fraction").get<double>();
  model.config.resample.max_output_size =
      c.at("resample_max_size").get<std::size_t>();
  model.config.thresholds.ratio_threshold = c.at("ratio_threshold").get<double>();
  model.config.thresholds.buy_count_threshold =
      c.at("buy_count_threshold").get<double>();
  model.config.recompute_thresholds = c.at("recompute_thresholds").get<bool>();
  model.config.heuristic_ratio_threshold =
      c.at("heuristic_ratio_threshold").get<double>();
  model.config.stats.invert_ratio = c.at("invert_ratio").get<bool>();
  model.config.seed = c.at("seed").get<std::uint64_t>();

  model.thresholds.ratio_threshold = j.at("thresholds").at("ratio").get<double>();
  model.thresholds.buy_count_threshold =
      j.at("thresholds").at("buy_count").get<double>();
  model.mask.name = j.at("mask").at("name").get<std::string>();
  model.mask.indices = j.at("mask").at("indices").get<std::vector<int>>();

  ItemStatsTable stats(model.config.stats);
  for (const json& row : j.at("stats")) {
    ItemStats s;
    s.click_count = row.at(1).get<double>();
    s.buy_count = row.at(2).get<double>();
    s.click_buy_ratio = row.at(3).get<double>();
    s.price = row.at(4).get<double>();
    s.global_item_duration = row.at(5).get<double>();
    s.observation_span = row.at(6).get<double>();
    stats.insert(row.at(0).get<std::int64_t>(), s);
  }
  model.stats = std::move(stats);

  for (const json& row : j.at("categories"))
    model.categories.set(row.at(0).get<std::int64_t>(), row.at(1).get<int>());

  if (j.contains("session_boost")) {
    BoostedEnsemble e;
    e.feature_count = j["session_boost"].at("feature_count").get<int>();
    for (const json& r : j["session_boost"].at("rounds"))
      e.rounds.push_back({tree_from_json(r.at("tree")),
                          r.at("alpha").get<double>(),
                          r.at("epsilon").get<double>()});
    model.session_boost = std::move(e);
  }
  if (j.contains("session_nb")) model.session_nb = nb_from_json(j["session_nb"]);
  if (j.contains("item_forest")) {
    Forest f;
    f.feature_count = j["item_forest"].at("feature_count").get<int>();
    for (const json& t : j["item_forest"].at("trees"))
      f.trees.push_back(tree_from_json(t));
    model.item_forest = std::move(f);
  }
  if (j.contains("item_nb")) model.item_nb = nb_from_json(j["item_nb"]);
  return model;
}

}  // namespace buypred
