#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "buypred/errors.hpp"
#include "buypred/model.hpp"

namespace buypred {

enum class SourceFile : std::uint8_t { Clicks, Buys, Test };

struct RawRow {
  std::string_view line;
  std::uint64_t line_number = 1;
  SourceFile source = SourceFile::Clicks;
};

// sessionId,timestamp,itemId,category -- exactly 4 fields, no header.
ClickEvent parse_click_row(const RawRow& row);
// sessionId,timestamp,itemId,price,quantity -- exactly 5 fields.
BuyEvent parse_buy_row(const RawRow& row);

// Canonical encodings; serialize(parse(line)) == line for well-formed rows.
std::string serialize_click_row(const ClickEvent& e);
std::string serialize_buy_row(const BuyEvent& e);

enum class MalformedRowPolicy : std::uint8_t { FailFast, SkipAndCount };

struct IngestConfig {
  std::size_t memory_budget_bytes = 256ull << 20;
  MalformedRowPolicy policy = MalformedRowPolicy::FailFast;
  // Empty -> $BUYPRED_TMPDIR if set, else the system temp directory.
  std::filesystem::path temp_dir;
};

std::filesystem::path resolve_temp_dir(const IngestConfig& config);

struct IngestCounters {
  std::uint64_t rows_read = 0;
  std::uint64_t rows_parsed = 0;
  std::uint64_t malformed_skipped = 0;
  std::uint64_t sort_runs = 0;
};

// Type-erased pull stream; tests feed vectors, production feeds merge output.
template <typename T>
class EventStream {
 public:
  EventStream() : next_([] { return std::optional<T>(); }) {}

  template <typename Fn>
  explicit EventStream(Fn fn) : next_(std::move(fn)) {}

  static EventStream from_vector(std::vector<T> events) {
    auto state = std::make_shared<std::pair<std::vector<T>, std::size_t>>(
        std::move(events), 0);
    return EventStream([state]() -> std::optional<T> {
      if (state->second >= state->first.size()) return std::nullopt;
      return state->first[state->second++];
    });
  }

  std::optional<T> next() { return next_(); }

 private:
  std::function<std::optional<T>()> next_;
};

// External merge sort keyed by (sessionId, timestamp, arrival order). Spills
// sorted binary runs whenever the in-memory buffer would exceed the budget,
// then k-way merges them. Stable by construction (arrival order is a key).
template <typename Event>
class ExternalSorter {
 public:
  ExternalSorter(std::size_t memory_budget_bytes,
                 std::filesystem::path temp_dir);
  ~ExternalSorter();

  ExternalSorter(const ExternalSorter&) = delete;
  ExternalSorter& operator=(const ExternalSorter&) = delete;

  void push(const Event& e);

  // Number of runs the input was split into (1 when everything fit in RAM).
  std::uint64_t run_count() const;

  // Finishes ingestion and returns the merged, ordered stream. Call once.
  EventStream<Event> finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

extern template class ExternalSorter<ClickEvent>;
extern template class ExternalSorter<BuyEvent>;

struct SortedClicks {
  EventStream<ClickEvent> stream;
  IngestCounters counters;
};

struct SortedBuys {
  EventStream<BuyEvent> stream;
  IngestCounters counters;
};

// Parse + external sort of one file. source selects the click/test schema.
SortedClicks sort_click_file(const std::filesystem::path& path,
                             SourceFile source, const IngestConfig& config);
SortedBuys sort_buy_file(const std::filesystem::path& path,
                         const IngestConfig& config);

// Merge-join of session-sorted click and buy streams into Sessions, ascending
// by sessionId. Buy rows whose session never clicked become click-less
// sessions and are counted. Throws UnsortedInputError if an id decreases.
class SessionAssembler {
 public:
  SessionAssembler(EventStream<ClickEvent> clicks, EventStream<BuyEvent> buys);

  std::optional<Session> next();

  std::uint64_t clickless_buy_sessions() const {
    return clickless_buy_sessions_;
  }
  std::uint64_t total_clicks() const { return total_clicks_; }

 private:
  EventStream<ClickEvent> clicks_;
  EventStream<BuyEvent> buys_;
  std::optional<ClickEvent> click_head_;
  std::optional<BuyEvent> buy_head_;
  std::uint64_t clickless_buy_sessions_ = 0;
  std::uint64_t total_clicks_ = 0;
};

std::vector<Session> assemble_all(EventStream<ClickEvent> clicks,
                                  EventStream<BuyEvent> buys,
                                  std::uint64_t* clickless_buy_sessions = nullptr);

// Convenience: parse, sort and assemble a click file plus an optional buy
// file (empty path -> no buys, e.g. test data).
struct LoadedSessions {
  std::vector<Session> sessions;
  IngestCounters click_counters;
  IngestCounters buy_counters;
  std::uint64_t clickless_buy_sessions = 0;
};

LoadedSessions load_sessions(const std::filesystem::path& clicks_path,
                             const std::filesystem::path& buys_path,
                             const IngestConfig& config,
                             SourceFile click_source = SourceFile::Clicks);

}  // namespace buypred
