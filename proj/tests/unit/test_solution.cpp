#include <doctest.h>

#include <string>
#include <vector>

#include "buypred/errors.hpp"
#include "buypred/solution.hpp"
#include "test_util.hpp"

using namespace buypred;
using testutil::TempDir;

TEST_CASE("emit writes the documented line format, ascending session id") {
  TempDir tmp("emit");
  std::vector<SolutionEntry> entries = {
      {420471, {214717867}, 0.9},
      {7, {42, 100, 5}, 0.8},
  };
  // Items serialize sorted; 5,42,100.
  std::sort(entries[1].items.begin(), entries[1].items.end());
  EmitReport report = emit_solution(entries, tmp.file("solution.dat"));
  CHECK(report.entries_written == 2);
  CHECK(report.entries_dropped == 0);
  const std::string want = "7;5,42,100\n420471;214717867\n";
  CHECK(testutil::read_file(tmp.file("solution.dat")) == want);
  CHECK(report.bytes_written == want.size());
}

TEST_CASE("emit enforces the byte cap by dropping low scores first") {
  TempDir tmp("cap");
  std::vector<SolutionEntry> entries;
  for (int i = 0; i < 100; ++i)
    entries.push_back({i, {1000000 + i, 2000000 + i}, double(i)});
  std::size_t full = 0;
  for (const auto& e : entries)
    full += std::to_string(e.session_id).size() + 1 + 7 + 1 + 7 + 1;

  const std::size_t cap = full / 2;
  EmitReport report = emit_solution(entries, tmp.file("solution.dat"), cap);
  CHECK(report.entries_dropped > 0);
  CHECK(report.entries_written + report.entries_dropped == 100);
  CHECK(report.bytes_written <= cap);
  CHECK(testutil::read_file(tmp.file("solution.dat")).size() ==
        report.bytes_written);

  // The survivors are exactly the highest-score entries.
  std::vector<SolutionEntry> kept = parse_solution(tmp.file("solution.dat"));
  for (const SolutionEntry& e : kept)
    CHECK(e.session_id >= 100 - static_cast<int>(report.entries_written));
}

TEST_CASE("emit of nothing is an empty file") {
  TempDir tmp("empty");
  EmitReport report = emit_solution({}, tmp.file("solution.dat"));
  CHECK(report.entries_written == 0);
  CHECK(report.entries_dropped == 0);
  CHECK(report.bytes_written == 0);
  CHECK(testutil::read_file(tmp.file("solution.dat")).empty());
  CHECK(parse_solution(tmp.file("solution.dat")).empty());
}

TEST_CASE("parse is the inverse of emit when nothing is dropped") {
  TempDir tmp("roundtrip");
  std::vector<SolutionEntry> entries = {
      {1, {5}, 0.1}, {2, {7, 9}, 0.2}, {30, {1, 2, 3, 4}, 0.3}};
  emit_solution(entries, tmp.file("solution.dat"));
  std::vector<SolutionEntry> parsed = parse_solution(tmp.file("solution.dat"));
  REQUIRE(parsed.size() == entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i)
    CHECK(same_entries(parsed[i], entries[i]));
}

TEST_CASE("emit rejects invalid entries") {
  TempDir tmp("invalid");
  CHECK_THROWS_AS(emit_solution({{5, {}, 0.0}}, tmp.file("x.dat")),
                  EmptyItemSetError);
  CHECK_THROWS_AS(emit_solution({{5, {1}, 0.0}, {5, {2}, 0.0}},
                                tmp.file("x.dat")),
                  DuplicateSessionError);
}

TEST_CASE("parse rejects malformed lines") {
  TempDir tmp("badparse");
  testutil::write_file(tmp.file("no_items.dat"), "7;\n");
  CHECK_THROWS_AS(parse_solution(tmp.file("no_items.dat")),
                  MalformedSolutionError);

  testutil::write_file(tmp.file("no_semi.dat"), "7\n");
  CHECK_THROWS_AS(parse_solution(tmp.file("no_semi.dat")),
                  MalformedSolutionError);

  testutil::write_file(tmp.file("bad_item.dat"), "7;1,x\n");
  CHECK_THROWS_AS(parse_solution(tmp.file("bad_item.dat")),
                  MalformedSolutionError);

  testutil::write_file(tmp.file("trailing_comma.dat"), "7;1,\n");
  CHECK_THROWS_AS(parse_solution(tmp.file("trailing_comma.dat")),
                  MalformedSolutionError);

  testutil::write_file(tmp.file("dup.dat"), "7;1\n7;2\n");
  CHECK_THROWS_AS(parse_solution(tmp.file("dup.dat")), DuplicateSessionError);

  CHECK_THROWS_AS(parse_solution(tmp.file("missing.dat")), IoError);
}

TEST_CASE("parse normalizes hand-written item lists") {
  TempDir tmp("normalize");
  testutil::write_file(tmp.file("raw.dat"), "7;9,1,9,3\n");
  std::vector<SolutionEntry> parsed = parse_solution(tmp.file("raw.dat"));
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0].items == std::vector<std::int64_t>{1, 3, 9});
}
