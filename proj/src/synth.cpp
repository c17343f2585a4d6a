#include "buypred/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "buypred/errors.hpp"
#include "buypred/ingest.hpp"
#include "buypred/rng.hpp"
#include "buypred/timestamp.hpp"

namespace buypred {

namespace {

constexpr std::int64_t kItemIdBase = 210000000;
constexpr double kWindowDays = 183;  // six months, April through September

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void validate(const SynthParams& p) {
  if (p.n_sessions < 1 || p.n_items < 1)
    throw ConfigError("synth: counts must be >= 1");
  if (p.n_categories < 1 || p.n_categories > 12)
    throw ConfigError("synth: categories must be in 1..12");
  if (p.buy_fraction < 0 || p.buy_fraction > 1 ||
      p.missing_category_cutoff < 0 || p.missing_category_cutoff > 1)
    throw ConfigError("synth: fractions must be in [0,1]");
  if (p.mean_clicks_per_session < 1)
    throw ConfigError("synth: mean clicks per session must be >= 1");
}

// Cumulative Zipf over ranks 1..n with the given exponent.
std::vector<double> zipf_cdf(std::uint64_t n, double exponent) {
  std::vector<double> cdf(n);
  double sum = 0;
  for (std::uint64_t r = 1; r <= n; ++r) {
    sum += 1.0 / std::pow(static_cast<double>(r), exponent);
    cdf[r - 1] = sum;
  }
  for (double& v : cdf) v /= sum;
  return cdf;
}

std::uint64_t draw_rank(const std::vector<double>& cdf, Rng& rng) {
  const double u = rng.unit();
  auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  return static_cast<std::uint64_t>(it - cdf.begin()) + 1;
}

struct SessionDraft {
  Session session;
  std::vector<std::uint64_t> click_ranks;  // rank per click
  double raw_propensity = 0;
};

}  // namespace

SynthCorpus generate_corpus(const SynthParams& params) {
  validate(params);
  Rng rng(params.seed);
  Rng item_rng = rng.fork(101);
  Rng session_rng = rng.fork(202);
  Rng label_rng = rng.fork(303);

  const Millis window_start =
      days_from_civil(2014, 4, 1) * 24 * 3600 * 1000LL;
  const Millis window_ms =
      static_cast<Millis>(kWindowDays * 24 * 3600 * 1000.0);
  const Millis category_cutoff =
      window_start +
      static_cast<Millis>(params.missing_category_cutoff *
                          static_cast<double>(window_ms));

  // Per-item ground truth: category and base price.
  SynthCorpus corpus;
  std::vector<int> category_of_rank(params.n_items);
  std::vector<std::int64_t> price_of_rank(params.n_items);
  for (std::uint64_t r = 1; r <= params.n_items; ++r) {
    const int category =
        1 + static_cast<int>(item_rng.below(
                static_cast<std::uint64_t>(params.n_categories)));
    category_of_rank[r - 1] = category;
    price_of_rank[r - 1] =
        99 + static_cast<std::int64_t>(item_rng.below(100)) * 50;
    corpus.true_categories[kItemIdBase + static_cast<std::int64_t>(r)] =
        category;
  }

  const std::vector<double> cdf = zipf_cdf(params.n_items, params.zipf_exponent);
  const double log_n = std::log(static_cast<double>(params.n_items) + 1.0);
  auto pop_norm = [&](std::uint64_t rank) {
    return 1.0 - std::log(static_cast<double>(rank)) / log_n;
  };

  // Pass 1: browse. Each session has a popularity focus (mixture of Zipf and
  // uniform draws), a dwell scale, and a repeat-click tendency; the same three
  // signals feed the purchase propensity.
  std::vector<SessionDraft> drafts;
  drafts.reserve(params.n_sessions);
  for (std::uint64_t sid = 1; sid <= params.n_sessions; ++sid) {
    SessionDraft draft;
    draft.session.session_id = static_cast<std::int64_t>(sid);

    const double focus = session_rng.unit();
    const double dwell_scale = 10.0 + 110.0 * session_rng.unit();
    const double repeat_prob = 0.05 + 0.45 * session_rng.unit();

    const std::uint64_t clicks =
        1 + session_rng.poisson(params.mean_clicks_per_session - 1.0);
    Millis t = window_start + static_cast<Millis>(
                                  session_rng.unit() *
                                  static_cast<double>(window_ms));

    double pop_sum = 0, gap_sum = 0;
    for (std::uint64_t c = 0; c < clicks; ++c) {
      std::uint64_t rank;
      if (c > 0 && session_rng.bernoulli(repeat_prob)) {
        rank = draft.click_ranks[session_rng.below(draft.click_ranks.size())];
      } else if (session_rng.bernoulli(focus)) {
        rank = draw_rank(cdf, session_rng);
      } else {
        rank = 1 + session_rng.below(params.n_items);
      }
      draft.click_ranks.push_back(rank);

      ClickEvent e;
      e.session_id = draft.session.session_id;
      e.timestamp = t;
      e.item_id = kItemIdBase + static_cast<std::int64_t>(rank);
      e.category = t < category_cutoff
                       ? CategoryCode::unknown()
                       : CategoryCode::regular(category_of_rank[rank - 1]);
      draft.session.clicks.push_back(e);
      pop_sum += pop_norm(rank);

      const double gap =
          5.0 - dwell_scale * std::log(1.0 - session_rng.unit());
      gap_sum += gap;
      t += static_cast<Millis>(gap * 1000.0);
    }

    std::uint64_t distinct = 0;
    {
      std::vector<std::uint64_t> sorted = draft.click_ranks;
      std::sort(sorted.begin(), sorted.end());
      distinct = static_cast<std::uint64_t>(
          std::unique(sorted.begin(), sorted.end()) - sorted.begin());
    }
    const double x_pop = pop_sum / static_cast<double>(clicks);
    const double x_dwell =
        std::min(1.0, gap_sum / static_cast<double>(clicks) / 120.0);
    const double x_repeat =
        clicks > 1 ? static_cast<double>(clicks - distinct) /
                         static_cast<double>(clicks - 1)
                   : 0.0;
    draft.raw_propensity = params.propensity.popularity * x_pop +
                           params.propensity.dwell * x_dwell +
                           params.propensity.repeat * x_repeat;
    drafts.push_back(std::move(draft));
    corpus.click_rows += clicks;
  }

  // Calibrate the logistic bias so the mean buy probability hits buy_fraction.
  double bias = 0;
  if (params.buy_fraction > 0 && params.buy_fraction < 1) {
    double lo = -60, hi = 60;
    for (int iter = 0; iter < 80; ++iter) {
      bias = (lo + hi) / 2;
      double mean = 0;
      for (const SessionDraft& d : drafts)
        mean += sigmoid(d.raw_propensity + bias);
      mean /= static_cast<double>(drafts.size());
      if (mean < params.buy_fraction)
        lo = bias;
      else
        hi = bias;
    }
  }

  // Pass 2: label. Buy sessions pick bought items with odds increasing in the
  // same per-item signals.
  for (SessionDraft& draft : drafts) {
    Session& s = draft.session;
    bool buy;
    if (params.buy_fraction <= 0)
      buy = false;
    else if (params.buy_fraction >= 1)
      buy = true;
    else
      buy = label_rng.bernoulli(sigmoid(draft.raw_propensity + bias));

    if (buy) {
      struct ItemSignal {
        std::int64_t item;
        std::uint64_t rank;
        double score;
        double dwell = 0;
        int appearances = 0;
      };
      std::vector<ItemSignal> signals;
      for (std::size_t c = 0; c < s.clicks.size(); ++c) {
        const std::int64_t item = s.clicks[c].item_id;
        auto it = std::find_if(signals.begin(), signals.end(),
                               [&](const ItemSignal& x) { return x.item == item; });
        if (it == signals.end()) {
          signals.push_back({item, draft.click_ranks[c], 0, 0, 1});
          it = signals.end() - 1;
        } else {
          it->appearances += 1;
        }
        if (c + 1 < s.clicks.size())
          it->dwell += static_cast<double>(s.clicks[c + 1].timestamp -
                                           s.clicks[c].timestamp) /
                       1000.0;
      }
      double min_score = 0, max_score = 0;
      for (std::size_t i = 0; i < signals.size(); ++i) {
        ItemSignal& sig = signals[i];
        sig.score = params.propensity.popularity * pop_norm(sig.rank) +
                    params.propensity.dwell * std::min(1.0, sig.dwell / 120.0) +
                    params.propensity.repeat *
                        std::min(3, sig.appearances - 1) / 3.0;
        if (i == 0) {
          min_score = max_score = sig.score;
        } else {
          min_score = std::min(min_score, sig.score);
          max_score = std::max(max_score, sig.score);
        }
      }
      const double span = max_score - min_score;
      std::size_t best = 0;
      for (std::size_t i = 0; i < signals.size(); ++i)
        if (signals[i].score > signals[best].score) best = i;

      const Millis buy_base = s.clicks.back().timestamp;
      for (std::size_t i = 0; i < signals.size(); ++i) {
        const double q =
            span > 0 ? (signals[i].score - min_score) / span : 1.0;
        if (!label_rng.bernoulli(0.2 + 0.6 * q)) continue;
        BuyEvent b;
        b.session_id = s.session_id;
        b.timestamp = buy_base + 1000 * (1 + static_cast<Millis>(
                                                 label_rng.below(600)));
        b.item_id = signals[i].item;
        b.price = label_rng.bernoulli(0.05)
                      ? 0
                      : price_of_rank[signals[i].rank - 1];
        b.quantity = 1 + static_cast<std::int64_t>(label_rng.below(3));
        s.buys.push_back(b);
      }
      if (s.buys.empty()) {
        BuyEvent b;
        b.session_id = s.session_id;
        b.timestamp = buy_base + 1000;
        b.item_id = signals[best].item;
        b.price = price_of_rank[signals[best].rank - 1];
        b.quantity = 1;
        s.buys.push_back(b);
      }
      std::sort(s.buys.begin(), s.buys.end(),
                [](const BuyEvent& a, const BuyEvent& b) {
                  return a.timestamp < b.timestamp;
                });
      derive_bought_items(s);
      ++corpus.buy_sessions;
    }
    corpus.sessions.push_back(std::move(s));
  }
  return corpus;
}

SynthOutput generate(const SynthParams& params,
                     const std::filesystem::path& out_dir) {
  SynthCorpus corpus = generate_corpus(params);
  std::filesystem::create_directories(out_dir);

  SynthOutput output;
  output.clicks = out_dir / "clicks.dat";
  output.buys = out_dir / "buys.dat";
  output.truth = out_dir / "item_categories.csv";
  output.sessions = corpus.sessions.size();
  output.buy_sessions = corpus.buy_sessions;
  output.click_rows = corpus.click_rows;

  // Log order: click rows globally by timestamp (ties by session, then input
  // position), so ingest's session sort has real work to do.
  struct Row {
    Millis timestamp;
    std::int64_t session;
    std::size_t seq;
    std::string text;
  };
  std::vector<Row> clicks, buys;
  clicks.reserve(corpus.click_rows);
  for (const Session& s : corpus.sessions) {
    for (std::size_t i = 0; i < s.clicks.size(); ++i)
      clicks.push_back({s.clicks[i].timestamp, s.session_id, i,
                        serialize_click_row(s.clicks[i])});
    for (std::size_t i = 0; i < s.buys.size(); ++i)
      buys.push_back({s.buys[i].timestamp, s.session_id, i,
                      serialize_buy_row(s.buys[i])});
  }
  auto by_time = [](const Row& a, const Row& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    if (a.session != b.session) return a.session < b.session;
    return a.seq < b.seq;
  };
  std::sort(clicks.begin(), clicks.end(), by_time);
  std::sort(buys.begin(), buys.end(), by_time);
  output.buy_rows = buys.size();

  auto write_rows = [](const std::filesystem::path& path,
                       const std::vector<Row>& rows) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot create " + path.string());
    for (const Row& row : rows) out << row.text << '\n';
    if (!out) throw IoError("write failure on " + path.string());
  };
  write_rows(output.clicks, clicks);
  write_rows(output.buys, buys);

  std::vector<std::pair<std::int64_t, int>> truth(
      corpus.true_categories.begin(), corpus.true_categories.end());
  std::sort(truth.begin(), truth.end());
  std::ofstream out(output.truth, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot create " + output.truth.string());
  for (const auto& [item, category] : truth)
    out << item << ',' << category << '\n';
  if (!out) throw IoError("write failure on " + output.truth.string());
  return output;
}

}  // namespace buypred
