#include <doctest.h>

#include <algorithm>
#include <vector>

#include "buypred/ingest.hpp"
#include "buypred/rng.hpp"
#include "buypred/timestamp.hpp"
#include "test_util.hpp"

using namespace buypred;
using testutil::TempDir;

namespace {

RawRow click_row(std::string_view line, std::uint64_t number = 1) {
  return {line, number, SourceFile::Clicks};
}

RawRow buy_row(std::string_view line, std::uint64_t number = 1) {
  return {line, number, SourceFile::Buys};
}

ClickEvent click(std::int64_t sid, Millis t, std::int64_t item) {
  return {sid, t, item, CategoryCode::unknown()};
}

}  // namespace

TEST_CASE("parse_click_row maps fields positionally") {
  ClickEvent e =
      parse_click_row(click_row("1,2014-04-07T10:51:09.277Z,214536502,0"));
  CHECK(e.session_id == 1);
  CHECK(e.timestamp == 1396867869277LL);
  CHECK(e.item_id == 214536502);
  CHECK(e.category.kind() == CategoryCode::Kind::Unknown);

  ClickEvent special =
      parse_click_row(click_row("9,2014-04-06T09:00:00.000Z,42,S"));
  CHECK(special.category.kind() == CategoryCode::Kind::Special);
}

TEST_CASE("parse_click_row rejects bad rows with the line number") {
  CHECK_THROWS_AS(parse_click_row(click_row("9,2014-04-06T09:00:00.000Z,42", 3)),
                  MalformedRowError);
  try {
    parse_click_row(click_row("9,2014-04-06T09:00:00.000Z,42", 3));
  } catch (const MalformedRowError& e) {
    CHECK(e.line_number() == 3);
  }
  CHECK_THROWS_AS(
      parse_click_row(click_row("a,2014-04-06T09:00:00.000Z,42,0")),
      MalformedRowError);
  CHECK_THROWS_AS(parse_click_row(click_row("9,2014-04-06 09:00:00,42,0")),
                  MalformedRowError);
  CHECK_THROWS_AS(parse_click_row(click_row("9,2014-04-06T09:00:00.000Z,42,0,x")),
                  MalformedRowError);
  CHECK_THROWS_AS(parse_click_row(click_row("-1,2014-04-06T09:00:00.000Z,42,0")),
                  MalformedRowError);
}

TEST_CASE("parse_buy_row handles price 0 and rejects quantity < 1") {
  BuyEvent e = parse_buy_row(
      buy_row("420471,2014-04-06T18:44:58.314Z,214717867,1046,1"));
  CHECK(e.session_id == 420471);
  CHECK(e.item_id == 214717867);
  CHECK(e.price == 1046);
  CHECK(e.quantity == 1);

  BuyEvent free = parse_buy_row(
      buy_row("420471,2014-04-06T18:44:58.314Z,214717867,0,2"));
  CHECK(free.price == 0);

  CHECK_THROWS_AS(parse_buy_row(buy_row(
                      "420471,2014-04-06T18:44:58.314Z,214717867,1046,0")),
                  NegativeQuantityError);
}

TEST_CASE("serialize/parse round-trip is bit-exact on canonical rows") {
  Rng rng(17);
  for (int i = 0; i < 500; ++i) {
    ClickEvent e;
    e.session_id = static_cast<std::int64_t>(rng.below(1'000'000));
    e.timestamp = 1'396'000'000'000LL + static_cast<Millis>(rng.below(1'000'000'000));
    e.item_id = static_cast<std::int64_t>(rng.below(300'000'000));
    switch (rng.below(4)) {
      case 0: e.category = CategoryCode::unknown(); break;
      case 1: e.category = CategoryCode::special(); break;
      case 2:
        e.category = CategoryCode::regular(1 + static_cast<int>(rng.below(12)));
        break;
      default:
        e.category =
            CategoryCode::brand(13 + static_cast<std::int64_t>(rng.below(1000)));
    }
    const std::string line = serialize_click_row(e);
    CHECK(parse_click_row(click_row(line)) == e);
    CHECK(serialize_click_row(parse_click_row(click_row(line))) == line);

    BuyEvent b;
    b.session_id = e.session_id;
    b.timestamp = e.timestamp;
    b.item_id = e.item_id;
    b.price = static_cast<std::int64_t>(rng.below(10000));
    b.quantity = 1 + static_cast<std::int64_t>(rng.below(5));
    const std::string buy_line = serialize_buy_row(b);
    CHECK(parse_buy_row(buy_row(buy_line)) == b);
    CHECK(serialize_buy_row(parse_buy_row(buy_row(buy_line))) == buy_line);
  }
}

TEST_CASE("external sort orders by sessionId then timestamp") {
  TempDir tmp("sort-basic");
  ExternalSorter<ClickEvent> sorter(1 << 20, tmp.path());
  sorter.push(click(3, 0, 1));
  sorter.push(click(1, 5, 2));
  sorter.push(click(1, 2, 3));
  auto stream = sorter.finish();
  std::vector<ClickEvent> out;
  while (auto e = stream.next()) out.push_back(*e);
  REQUIRE(out.size() == 3);
  CHECK(out[0].session_id == 1);
  CHECK(out[0].timestamp == 2);
  CHECK(out[1].session_id == 1);
  CHECK(out[1].timestamp == 5);
  CHECK(out[2].session_id == 3);
}

TEST_CASE("external sort is idempotent on sorted input and stable on ties") {
  TempDir tmp("sort-stable");
  std::vector<ClickEvent> input = {click(1, 1, 10), click(1, 1, 11),
                                   click(1, 2, 12), click(2, 1, 13)};
  ExternalSorter<ClickEvent> sorter(1 << 20, tmp.path());
  for (const auto& e : input) sorter.push(e);
  auto stream = sorter.finish();
  std::vector<ClickEvent> out;
  while (auto e = stream.next()) out.push_back(*e);
  CHECK(out == input);  // already sorted; equal timestamps keep input order
}

TEST_CASE("external sort with spilled runs equals the in-memory oracle") {
  TempDir tmp("sort-big");
  Rng rng(1234);
  const std::size_t n = 1'000'000;
  std::vector<ClickEvent> input;
  input.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    input.push_back(click(static_cast<std::int64_t>(rng.below(200'000)),
                          static_cast<Millis>(rng.below(1'000'000)),
                          static_cast<std::int64_t>(i)));
  }

  // ~10 MB budget over ~48 MB of keyed records: forces several runs.
  ExternalSorter<ClickEvent> sorter(10 << 20, tmp.path());
  for (const auto& e : input) sorter.push(e);
  CHECK(sorter.run_count() >= 4);
  auto stream = sorter.finish();

  std::vector<ClickEvent> oracle = input;
  std::stable_sort(oracle.begin(), oracle.end(),
                   [](const ClickEvent& a, const ClickEvent& b) {
                     if (a.session_id != b.session_id)
                       return a.session_id < b.session_id;
                     return a.timestamp < b.timestamp;
                   });

  for (const ClickEvent& want : oracle) {
    auto got = stream.next();
    REQUIRE(got.has_value());
    CHECK(*got == want);
  }
  CHECK_FALSE(stream.next().has_value());
}

TEST_CASE("external sort output ignores input permutation") {
  TempDir tmp("sort-perm");
  Rng rng(5);
  std::vector<ClickEvent> input;
  for (int i = 0; i < 500; ++i)
    input.push_back(click(static_cast<std::int64_t>(rng.below(50)),
                          static_cast<Millis>(i),  // distinct keys
                          i));
  auto run = [&](const std::vector<ClickEvent>& rows) {
    ExternalSorter<ClickEvent> sorter(4096, tmp.path());
    for (const auto& e : rows) sorter.push(e);
    auto stream = sorter.finish();
    std::vector<ClickEvent> out;
    while (auto e = stream.next()) out.push_back(*e);
    return out;
  };
  std::vector<ClickEvent> shuffled = input;
  shuffle(shuffled, rng);
  CHECK(run(input) == run(shuffled));
}

TEST_CASE("assembler joins clicks and buys by session") {
  std::vector<ClickEvent> clicks = {click(7, 1, 100), click(7, 2, 101),
                                    click(7, 3, 100), click(8, 1, 102)};
  std::vector<BuyEvent> buys = {{7, 5, 42, 100, 1}, {9, 6, 55, 0, 1}};
  SessionAssembler assembler(EventStream<ClickEvent>::from_vector(clicks),
                             EventStream<BuyEvent>::from_vector(buys));

  auto s7 = assembler.next();
  REQUIRE(s7.has_value());
  CHECK(s7->session_id == 7);
  CHECK(s7->clicks.size() == 3);
  CHECK(s7->bought_items == std::vector<std::int64_t>{42});

  auto s8 = assembler.next();
  REQUIRE(s8.has_value());
  CHECK(s8->session_id == 8);
  CHECK(s8->bought_items.empty());

  auto s9 = assembler.next();
  REQUIRE(s9.has_value());
  CHECK(s9->session_id == 9);
  CHECK(s9->clicks.empty());
  CHECK(s9->bought_items == std::vector<std::int64_t>{55});

  CHECK_FALSE(assembler.next().has_value());
  CHECK(assembler.clickless_buy_sessions() == 1);
  CHECK(assembler.total_clicks() == 4);
}

TEST_CASE("assembler rejects decreasing session ids") {
  std::vector<ClickEvent> clicks = {click(5, 1, 1), click(3, 1, 2)};
  SessionAssembler assembler(EventStream<ClickEvent>::from_vector(clicks),
                             EventStream<BuyEvent>::from_vector({}));
  CHECK_THROWS_AS(
      [&] {
        while (assembler.next()) {
        }
      }(),
      UnsortedInputError);
}

TEST_CASE("assembler emits each session once and conserves clicks") {
  TempDir tmp("assemble-prop");
  Rng rng(99);
  ExternalSorter<ClickEvent> sorter(1 << 14, tmp.path());
  std::size_t total = 2000;
  for (std::size_t i = 0; i < total; ++i)
    sorter.push(click(static_cast<std::int64_t>(rng.below(300)),
                      static_cast<Millis>(rng.below(100000)),
                      static_cast<std::int64_t>(rng.below(50))));
  SessionAssembler assembler(sorter.finish(),
                             EventStream<BuyEvent>::from_vector({}));
  std::size_t clicks_seen = 0;
  std::int64_t last_id = -1;
  while (auto s = assembler.next()) {
    CHECK(s->session_id > last_id);  // strictly increasing => unique
    last_id = s->session_id;
    clicks_seen += s->clicks.size();
    for (std::size_t i = 1; i < s->clicks.size(); ++i)
      CHECK(s->clicks[i - 1].timestamp <= s->clicks[i].timestamp);
  }
  CHECK(clicks_seen == total);
}

TEST_CASE("file ingestion honors the malformed-row policy") {
  TempDir tmp("policy");
  const std::string content =
      "1,2014-04-07T10:51:09.277Z,214536502,0\n"
      "garbage line\n"
      "2,2014-04-07T10:52:09.277Z,214536503,S\n";
  testutil::write_file(tmp.file("clicks.dat"), content);

  IngestConfig fail_fast;
  fail_fast.temp_dir = tmp.path();
  CHECK_THROWS_AS(
      sort_click_file(tmp.file("clicks.dat"), SourceFile::Clicks, fail_fast),
      MalformedRowError);

  IngestConfig skip;
  skip.policy = MalformedRowPolicy::SkipAndCount;
  skip.temp_dir = tmp.path();
  SortedClicks result =
      sort_click_file(tmp.file("clicks.dat"), SourceFile::Clicks, skip);
  CHECK(result.counters.rows_read == 3);
  CHECK(result.counters.rows_parsed == 2);
  CHECK(result.counters.malformed_skipped == 1);
  std::size_t n = 0;
  while (result.stream.next()) ++n;
  CHECK(n == 2);
}

TEST_CASE("temp dir resolution: explicit beats env beats system") {
  TempDir tmp("tmpdir");
  IngestConfig explicit_dir;
  explicit_dir.temp_dir = tmp.path();
  CHECK(resolve_temp_dir(explicit_dir) == tmp.path());

  ::setenv("BUYPRED_TMPDIR", tmp.path().c_str(), 1);
  CHECK(resolve_temp_dir(IngestConfig{}) == tmp.path());
  CHECK(resolve_temp_dir(explicit_dir) == tmp.path());
  ::unsetenv("BUYPRED_TMPDIR");
  CHECK(resolve_temp_dir(IngestConfig{}) ==
        std::filesystem::temp_directory_path());
}

TEST_CASE("load_sessions drives the whole ingest path") {
  TempDir tmp("load");
  testutil::write_file(tmp.file("clicks.dat"),
                       "2,2014-04-07T10:52:00.000Z,50,1\n"
                       "1,2014-04-07T10:51:00.000Z,40,0\n"
                       "1,2014-04-07T10:50:00.000Z,41,0\n");
  testutil::write_file(tmp.file("buys.dat"),
                       "2,2014-04-07T11:00:00.000Z,50,999,2\n");
  IngestConfig config;
  config.temp_dir = tmp.path();
  LoadedSessions loaded =
      load_sessions(tmp.file("clicks.dat"), tmp.file("buys.dat"), config);
  REQUIRE(loaded.sessions.size() == 2);
  CHECK(loaded.sessions[0].session_id == 1);
  CHECK(loaded.sessions[0].clicks.front().item_id == 41);  // time-sorted
  CHECK(loaded.sessions[1].bought_items == std::vector<std::int64_t>{50});
  CHECK(loaded.clickless_buy_sessions == 0);
}
