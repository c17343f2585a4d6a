#include "buypred/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "buypred/cascade.hpp"
#include "buypred/errors.hpp"
#include "buypred/eval.hpp"
#include "buypred/ingest.hpp"
#include "buypred/synth.hpp"

namespace buypred {

namespace {

using Clock = std::chrono::steady_clock;

struct IngestFlags {
  std::string clicks;
  std::string buys;
  std::size_t memory_budget = 256ull << 20;
  std::string malformed = "fail";
  std::string temp_dir;

  IngestConfig to_config() const {
    IngestConfig config;
    config.memory_budget_bytes = memory_budget;
    if (malformed == "skip")
      config.policy = MalformedRowPolicy::SkipAndCount;
    else if (malformed == "fail")
      config.policy = MalformedRowPolicy::FailFast;
    else
      throw ConfigError("malformed-row policy must be 'fail' or 'skip'");
    config.temp_dir = temp_dir;
    return config;
  }
};

void add_ingest_flags(CLI::App* cmd, IngestFlags& flags, bool with_buys) {
  cmd->add_option("--clicks", flags.clicks, "Click file (CSV, 4 columns)")
      ->required();
  if (with_buys)
    cmd->add_option("--buys", flags.buys, "Buy file (CSV, 5 columns)");
  cmd->add_option("--memory-budget", flags.memory_budget,
                  "External sort memory budget in bytes");
  cmd->add_option("--malformed", flags.malformed,
                  "Malformed row policy: fail | skip");
  cmd->add_option("--temp-dir", flags.temp_dir,
                  "Directory for sort runs (default $BUYPRED_TMPDIR)");
}

void print_stats(const std::string& side, const DatasetStats& stats) {
  std::cout << side << ".buy_sessions=" << stats.buy_sessions << '\n'
            << side << ".non_buy_sessions=" << stats.non_buy_sessions << '\n'
            << side << ".item_buy_session_pairs="
            << stats.item_buy_session_pairs << '\n'
            << side << ".item_click_session_pairs="
            << stats.item_click_session_pairs << '\n'
            << side << ".distinct_items=" << stats.distinct_items << '\n';
}

void write_click_file(const std::filesystem::path& path,
                      const std::vector<Session>& sessions) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  for (const Session& s : sessions)
    for (const ClickEvent& e : s.clicks) out << serialize_click_row(e) << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

void write_buy_file(const std::filesystem::path& path,
                    const std::vector<Session>& sessions) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  for (const Session& s : sessions)
    for (const BuyEvent& e : s.buys) out << serialize_buy_row(e) << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

int cmd_split(const IngestFlags& ingest, const std::string& out_dir,
              std::uint64_t seed) {
  const LoadedSessions loaded =
      load_sessions(ingest.clicks, ingest.buys, ingest.to_config());
  TestbedSplit split = split_testbed(loaded.sessions, seed);

  std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  write_click_file(dir / "train_clicks.dat", split.train);
  write_buy_file(dir / "train_buys.dat", split.train);
  write_click_file(dir / "test_clicks.dat", split.test);
  save_ground_truth(split.truth, dir / "ground_truth.dat");

  print_stats("train", dataset_stats(split.train));
  print_stats("test", dataset_stats(split.test));
  std::cout << "clickless_buy_sessions=" << loaded.clickless_buy_sessions
            << '\n'
            << "malformed_skipped="
            << loaded.click_counters.malformed_skipped +
                   loaded.buy_counters.malformed_skipped
            << '\n';
  return 0;
}

int cmd_train(const IngestFlags& ingest, const std::string& out_path,
              CascadeConfig config) {
  const LoadedSessions loaded =
      load_sessions(ingest.clicks, ingest.buys, ingest.to_config());
  TrainReport report;
  CascadeModel model = train_cascade(loaded.sessions, config, &report);
  save_model(model, out_path);
  std::cout << "stats_seconds=" << report.stats_seconds << '\n'
            << "session_seconds=" << report.session_seconds << '\n'
            << "item_seconds=" << report.item_seconds << '\n'
            << "session_rows=" << report.session_rows << '\n'
            << "item_rows=" << report.item_rows << '\n'
            << "item_rows_bought=" << report.item_rows_bought << '\n'
            << "buy_sessions=" << report.buy_sessions << '\n'
            << "model=" << out_path << '\n';
  return 0;
}

int cmd_predict(const std::string& model_path, const IngestFlags& ingest,
                const std::string& out_path, std::size_t max_bytes) {
  CascadeModel model = load_model(model_path);
  const LoadedSessions loaded = load_sessions(
      ingest.clicks, "", ingest.to_config(), SourceFile::Test);
  std::vector<SolutionEntry> entries = predict(model, loaded.sessions);
  EmitReport report = emit_solution(std::move(entries), out_path, max_bytes);
  std::cout << "predicted_sessions=" << report.entries_written << '\n'
            << "dropped_sessions=" << report.entries_dropped << '\n'
            << "bytes_written=" << report.bytes_written << '\n'
            << "solution=" << out_path << '\n';
  return 0;
}

int cmd_score(const std::string& solution_path, const std::string& truth_path,
              std::uint64_t test_sessions, bool kv_only) {
  std::vector<SolutionEntry> solution = parse_solution(solution_path);
  GroundTruth gt = test_sessions > 0
                       ? load_ground_truth(truth_path, test_sessions)
                       : load_ground_truth_with_meta(truth_path);
  MetricsReport report = evaluate(solution, gt);
  if (!kv_only) std::cout << report.to_table() << '\n';
  std::cout << report.to_kv();
  return 0;
}

int cmd_synth(const SynthParams& params, const std::string& out_dir) {
  SynthOutput output = generate(params, out_dir);
  std::cout << "clicks=" << output.clicks.string() << '\n'
            << "buys=" << output.buys.string() << '\n'
            << "truth=" << output.truth.string() << '\n'
            << "sessions=" << output.sessions << '\n'
            << "buy_sessions=" << output.buy_sessions << '\n'
            << "click_rows=" << output.click_rows << '\n'
            << "buy_rows=" << output.buy_rows << '\n';
  return 0;
}

int cmd_stats(const IngestFlags& ingest) {
  const LoadedSessions loaded =
      load_sessions(ingest.clicks, ingest.buys, ingest.to_config());
  print_stats("data", dataset_stats(loaded.sessions));
  std::cout << "clickless_buy_sessions=" << loaded.clickless_buy_sessions
            << '\n'
            << "malformed_skipped="
            << loaded.click_counters.malformed_skipped +
                   loaded.buy_counters.malformed_skipped
            << '\n';
  return 0;
}

const char* error_kind(const std::exception& e) {
  if (auto* known = dynamic_cast<const Error*>(&e)) return known->kind().c_str();
  if (dynamic_cast<const std::invalid_argument*>(&e)) return "invalid_argument";
  return "internal";
}

// Flat key=value config support: `--config FILE` entries become `--key=value`
// tokens appended to the argument list, except for keys the command line
// already carries -- flags win. Lines starting with '#' are comments.
std::vector<std::string> merge_config_file(std::vector<std::string> args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size())
        throw ConfigError("--config needs a file path");
      config_path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (config_path.empty()) return args;

  std::ifstream in(config_path);
  if (!in) throw IoError("cannot open config file " + config_path);
  std::string line;
  std::uint64_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("config line " + std::to_string(line_number) +
                        " is not key=value");
    const std::string flag = "--" + line.substr(0, eq);
    bool overridden = false;
    for (const std::string& arg : args)
      if (arg == flag || arg.rfind(flag + "=", 0) == 0) {
        overridden = true;
        break;
      }
    if (!overridden) args.push_back(flag + "=" + line.substr(eq + 1));
  }
  return args;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Two-stage session/item purchase prediction pipeline"};
  app.require_subcommand(1);
  std::string config_file_note;  // consumed by merge_config_file; help only

  // split
  auto* split = app.add_subcommand(
      "split", "Build a local train/test testbed with ground truth");
  IngestFlags split_ingest;
  std::string split_out;
  std::uint64_t split_seed = 1;
  add_ingest_flags(split, split_ingest, true);
  split->add_option("--out", split_out, "Output directory")->required();
  split->add_option("--seed", split_seed, "Split seed");
  split->get_option("--buys")->required();
  split->add_option("--config", config_file_note, "Flat key=value config file (flags win)");

  // train
  auto* train = app.add_subcommand("train", "Train the cascaded classifier");
  IngestFlags train_ingest;
  std::string train_out;
  CascadeConfig config;
  std::string session_stage = "adaboost";
  std::string item_stage = "forest";
  bool no_resample = false;
  add_ingest_flags(train, train_ingest, true);
  train->add_option("--out", train_out, "Model output path")->required();
  train->get_option("--buys")->required();
  train->add_option("--session-stage", session_stage,
                    "adaboost | naivebayes | heuristic");
  train->add_option("--item-stage", item_stage, "forest | naivebayes");
  train->add_option("--mask", config.session_mask,
                    "Session feature mask name");
  train->add_option("--session-cutoff", config.session_cutoff,
                    "Session Buy-score cutoff");
  train->add_option("--item-cutoff", config.item_cutoff,
                    "Item Buy-score cutoff");
  train->add_option("--rounds", config.boost.rounds, "Boosting rounds");
  train->add_option("--stump-depth", config.boost.base.max_depth,
                    "Boosting weak learner depth");
  train->add_option("--trees", config.forest.n_trees, "Forest size");
  train->add_option("--tree-depth", config.forest.max_depth,
                    "Forest tree depth cap (0 = unlimited)");
  train->add_option("--min-leaf", config.forest.min_leaf,
                    "Minimum rows per leaf");
  train->add_option("--feature-subset", config.forest.feature_subset_size,
                    "Features per node (-1 = sqrt(F), 0 = all)");
  train->add_flag("--no-resample", no_resample,
                  "Train the session stage without resampling");
  train->add_option("--resample-fraction",
                    config.resample.target_positive_fraction,
                    "Target Buy fraction after resampling");
  train->add_option("--resample-max-size", config.resample.max_output_size,
                    "Resampled dataset size cap");
  train->add_option("--ratio-threshold", config.thresholds.ratio_threshold,
                    "Session feature 3 cutoff");
  train->add_option("--buycount-threshold",
                    config.thresholds.buy_count_threshold,
                    "Session feature 4 cutoff");
  train->add_flag("--recompute-thresholds", config.recompute_thresholds,
                  "Derive the two cutoffs from the training data");
  train->add_option("--heuristic-threshold",
                    config.heuristic_ratio_threshold,
                    "Mean-ratio cutoff for the heuristic stage");
  train->add_flag("--invert-ratio", config.stats.invert_ratio,
                  "Flip the click-buy ratio direction");
  train->add_option("--seed", config.seed, "Master training seed");
  train->add_option("--threads", config.threads, "Worker threads");
  train->add_option("--config", config_file_note, "Flat key=value config file (flags win)");

  // predict
  auto* predict_cmd =
      app.add_subcommand("predict", "Emit a solution file for test clicks");
  IngestFlags predict_ingest;
  std::string predict_model, predict_out;
  std::size_t predict_max_bytes = kSolutionSizeCap;
  predict_cmd->add_option("--model", predict_model, "Model file")->required();
  predict_cmd
      ->add_option("--test", predict_ingest.clicks, "Test click file")
      ->required();
  predict_cmd->add_option("--out", predict_out, "Solution output path")
      ->required();
  predict_cmd->add_option("--max-bytes", predict_max_bytes,
                          "Solution size cap in bytes");
  predict_cmd->add_option("--memory-budget", predict_ingest.memory_budget,
                          "External sort memory budget in bytes");
  predict_cmd->add_option("--malformed", predict_ingest.malformed,
                          "Malformed row policy: fail | skip");
  predict_cmd->add_option("--temp-dir", predict_ingest.temp_dir,
                          "Directory for sort runs");
  predict_cmd->add_option("--config", config_file_note, "Flat key=value config file (flags win)");

  // score
  auto* score =
      app.add_subcommand("score", "Score a solution against ground truth");
  std::string score_solution, score_truth;
  std::uint64_t score_test_sessions = 0;
  bool score_kv = false;
  score->add_option("--solution", score_solution, "Solution file")->required();
  score->add_option("--truth", score_truth, "Ground truth file")->required();
  score->add_option("--test-sessions", score_test_sessions,
                    "Test universe size (default: <truth>.meta)");
  score->add_flag("--kv", score_kv, "Print key=value lines only");
  score->add_option("--config", config_file_note, "Flat key=value config file (flags win)");

  // synth
  auto* synth =
      app.add_subcommand("synth", "Generate a synthetic clickstream corpus");
  SynthParams params;
  std::string synth_out;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--sessions", params.n_sessions, "Session count");
  synth->add_option("--buy-fraction", params.buy_fraction,
                    "Approximate buy-session fraction");
  synth->add_option("--items", params.n_items, "Catalog size");
  synth->add_option("--categories", params.n_categories,
                    "Regular categories (1..12)");
  synth->add_option("--zipf", params.zipf_exponent, "Item popularity skew");
  synth->add_option("--mean-clicks", params.mean_clicks_per_session,
                    "Mean clicks per session");
  synth->add_option("--missing-cutoff", params.missing_category_cutoff,
                    "Window fraction with unknown categories");
  synth->add_option("--w-pop", params.propensity.popularity,
                    "Propensity weight: popularity");
  synth->add_option("--w-dwell", params.propensity.dwell,
                    "Propensity weight: dwell");
  synth->add_option("--w-repeat", params.propensity.repeat,
                    "Propensity weight: repeat clicks");
  synth->add_option("--seed", params.seed, "Generator seed");
  synth->add_option("--config", config_file_note, "Flat key=value config file (flags win)");

  // stats
  auto* stats = app.add_subcommand("stats", "Print dataset statistics");
  IngestFlags stats_ingest;
  add_ingest_flags(stats, stats_ingest, true);
  stats->add_option("--config", config_file_note, "Flat key=value config file (flags win)");

  std::vector<std::string> merged;
  try {
    merged = merge_config_file(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << error_kind(e) << ": " << e.what() << std::endl;
    return 1;
  }
  std::vector<std::string> argv(merged.rbegin(), merged.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    // CLI11 prints its own message; --help lands here with exit code 0.
    return app.exit(e);
  }

  try {
    if (split->parsed()) return cmd_split(split_ingest, split_out, split_seed);
    if (train->parsed()) {
      config.session_stage = session_stage_from_string(session_stage);
      config.item_stage = item_stage_from_string(item_stage);
      config.resample.enabled = !no_resample;
      return cmd_train(train_ingest, train_out, config);
    }
    if (predict_cmd->parsed())
      return cmd_predict(predict_model, predict_ingest, predict_out,
                         predict_max_bytes);
    if (score->parsed())
      return cmd_score(score_solution, score_truth, score_test_sessions,
                       score_kv);
    if (synth->parsed()) return cmd_synth(params, synth_out);
    if (stats->parsed()) return cmd_stats(stats_ingest);
  } catch (const std::exception& e) {
    std::cerr << "error: " << error_kind(e) << ": " << e.what() << std::endl;
    return 1;
  }
  return 1;
}

}  // namespace buypred
