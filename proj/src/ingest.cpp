#include "buypred/ingest.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <queue>

#include "buypred/timestamp.hpp"

namespace buypred {

namespace {

// Splits a line on commas into exactly `arity` fields. Returns false when the
// field count differs.
bool split_fields(std::string_view line, std::string_view* fields,
                  std::size_t arity) {
  std::size_t count = 0;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    std::string_view field = comma == std::string_view::npos
                                 ? line.substr(start)
                                 : line.substr(start, comma - start);
    if (count < arity) fields[count] = field;
    ++count;
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return count == arity;
}

std::optional<std::int64_t> parse_nonneg_int(std::string_view text) {
  if (text.empty() || text[0] == '-' || text[0] == '+') return std::nullopt;
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

[[noreturn]] void malformed(const RawRow& row, const std::string& reason) {
  throw MalformedRowError(row.line_number, reason);
}

}  // namespace

ClickEvent parse_click_row(const RawRow& row) {
  std::string_view fields[4];
  if (!split_fields(row.line, fields, 4))
    malformed(row, "expected 4 comma-separated fields");
  ClickEvent e;
  if (auto id = parse_nonneg_int(fields[0])) e.session_id = *id;
  else malformed(row, "bad sessionId '" + std::string(fields[0]) + "'");
  if (auto t = parse_iso8601_ms(fields[1])) e.timestamp = *t;
  else malformed(row, "bad timestamp '" + std::string(fields[1]) + "'");
  if (auto id = parse_nonneg_int(fields[2])) e.item_id = *id;
  else malformed(row, "bad itemId '" + std::string(fields[2]) + "'");
  if (auto cat = CategoryCode::from_field(fields[3])) e.category = *cat;
  else malformed(row, "bad category '" + std::string(fields[3]) + "'");
  return e;
}

BuyEvent parse_buy_row(const RawRow& row) {
  std::string_view fields[5];
  if (!split_fields(row.line, fields, 5))
    malformed(row, "expected 5 comma-separated fields");
  BuyEvent e;
  if (auto id = parse_nonneg_int(fields[0])) e.session_id = *id;
  else malformed(row, "bad sessionId '" + std::string(fields[0]) + "'");
  if (auto t = parse_iso8601_ms(fields[1])) e.timestamp = *t;
  else malformed(row, "bad timestamp '" + std::string(fields[1]) + "'");
  if (auto id = parse_nonneg_int(fields[2])) e.item_id = *id;
  else malformed(row, "bad itemId '" + std::string(fields[2]) + "'");
  if (auto p = parse_nonneg_int(fields[3])) e.price = *p;
  else malformed(row, "bad price '" + std::string(fields[3]) + "'");
  if (auto q = parse_nonneg_int(fields[4])) {
    if (*q < 1) throw NegativeQuantityError(row.line_number);
    e.quantity = *q;
  } else {
    malformed(row, "bad quantity '" + std::string(fields[4]) + "'");
  }
  return e;
}

std::string serialize_click_row(const ClickEvent& e) {
  std::string out = std::to_string(e.session_id);
  out += ',';
  out += format_iso8601_ms(e.timestamp);
  out += ',';
  out += std::to_string(e.item_id);
  out += ',';
  out += e.category.to_field();
  return out;
}

std::string serialize_buy_row(const BuyEvent& e) {
  std::string out = std::to_string(e.session_id);
  out += ',';
  out += format_iso8601_ms(e.timestamp);
  out += ',';
  out += std::to_string(e.item_id);
  out += ',';
  out += std::to_string(e.price);
  out += ',';
  out += std::to_string(e.quantity);
  return out;
}

std::filesystem::path resolve_temp_dir(const IngestConfig& config) {
  if (!config.temp_dir.empty()) return config.temp_dir;
  if (const char* env = std::getenv("BUYPRED_TMPDIR"); env && *env)
    return std::filesystem::path(env);
  return std::filesystem::temp_directory_path();
}

// ---------------------------------------------------------------------------
// External sorter
// ---------------------------------------------------------------------------

namespace {

template <typename Event>
struct Keyed {
  Event event;
  std::uint64_t seq;  // arrival order; makes the sort stable

  bool operator<(const Keyed& other) const {
    if (event.session_id != other.event.session_id)
      return event.session_id < other.event.session_id;
    if (event.timestamp != other.event.timestamp)
      return event.timestamp < other.event.timestamp;
    return seq < other.seq;
  }
};

std::filesystem::path make_run_path(const std::filesystem::path& dir) {
  static std::atomic<std::uint64_t> counter{0};
  std::uint64_t n = counter.fetch_add(1);
  return dir / ("buypred-sort-" + std::to_string(::getpid()) + "-" +
                std::to_string(n) + ".run");
}

}  // namespace

template <typename Event>
struct ExternalSorter<Event>::Impl {
  std::size_t capacity;  // records per run
  std::filesystem::path temp_dir;
  std::vector<Keyed<Event>> buffer;
  std::vector<std::filesystem::path> run_files;
  std::uint64_t next_seq = 0;
  bool finished = false;

  Impl(std::size_t budget_bytes, std::filesystem::path dir)
      : temp_dir(std::move(dir)) {
    capacity = std::max<std::size_t>(1, budget_bytes / sizeof(Keyed<Event>));
  }

  ~Impl() {
    for (const auto& path : run_files) {
      std::error_code ec;
      std::filesystem::remove(path, ec);
    }
  }

  void spill() {
    std::sort(buffer.begin(), buffer.end());
    std::filesystem::path path = make_run_path(temp_dir);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create sort run " + path.string());
    out.write(reinterpret_cast<const char*>(buffer.data()),
              static_cast<std::streamsize>(buffer.size() * sizeof(Keyed<Event>)));
    if (!out) throw IoError("short write to sort run " + path.string());
    run_files.push_back(std::move(path));
    buffer.clear();
  }
};

template <typename Event>
ExternalSorter<Event>::ExternalSorter(std::size_t memory_budget_bytes,
                                      std::filesystem::path temp_dir)
    : impl_(std::make_unique<Impl>(memory_budget_bytes, std::move(temp_dir))) {}

template <typename Event>
ExternalSorter<Event>::~ExternalSorter() = default;

template <typename Event>
void ExternalSorter<Event>::push(const Event& e) {
  impl_->buffer.push_back({e, impl_->next_seq++});
  if (impl_->buffer.size() >= impl_->capacity) impl_->spill();
}

template <typename Event>
std::uint64_t ExternalSorter<Event>::run_count() const {
  return impl_->run_files.size() + (impl_->buffer.empty() ? 0 : 1);
}

namespace {

template <typename Event>
class RunReader {
 public:
  explicit RunReader(const std::filesystem::path& path)
      : in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot reopen sort run " + path.string());
  }

  bool read(Keyed<Event>& out) {
    in_.read(reinterpret_cast<char*>(&out), sizeof(out));
    return static_cast<bool>(in_);
  }

 private:
  std::ifstream in_;
};

// Merge state shared by the stream closure.
template <typename Event>
struct MergeState {
  // Keeps the Impl (and with it the run files) alive until the stream dies.
  std::shared_ptr<void> owner;
  std::vector<std::unique_ptr<RunReader<Event>>> readers;
  // (record, reader index); min-heap by record key.
  using HeapEntry = std::pair<Keyed<Event>, std::size_t>;
  struct Greater {
    bool operator()(const HeapEntry& a, const HeapEntry& b) const {
      return b.first < a.first;
    }
  };
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, Greater> heap;
  std::vector<Keyed<Event>> memory;  // final unsorted-at-push buffer, sorted
  std::size_t memory_pos = 0;
};

}  // namespace

template <typename Event>
EventStream<Event> ExternalSorter<Event>::finish() {
  impl_->finished = true;
  auto state = std::make_shared<MergeState<Event>>();

  if (impl_->run_files.empty()) {
    // Everything fit in memory: one sorted buffer, no files.
    std::sort(impl_->buffer.begin(), impl_->buffer.end());
    state->memory = std::move(impl_->buffer);
    return EventStream<Event>([state]() -> std::optional<Event> {
      if (state->memory_pos >= state->memory.size()) return std::nullopt;
      return state->memory[state->memory_pos++].event;
    });
  }

  if (!impl_->buffer.empty()) impl_->spill();

  // Move ownership of the run files into the merge state so they survive the
  // sorter object and are deleted when the stream is dropped.
  auto impl = std::shared_ptr<Impl>(std::move(impl_));
  state->owner = impl;
  for (const auto& path : impl->run_files) {
    auto reader = std::make_unique<RunReader<Event>>(path);
    Keyed<Event> record;
    if (reader->read(record)) {
      state->readers.push_back(std::move(reader));
      state->heap.push({record, state->readers.size() - 1});
    }
  }

  return EventStream<Event>([state]() -> std::optional<Event> {
    if (state->heap.empty()) return std::nullopt;
    auto [record, index] = state->heap.top();
    state->heap.pop();
    Keyed<Event> next;
    if (state->readers[index]->read(next)) state->heap.push({next, index});
    return record.event;
  });
}

template class ExternalSorter<ClickEvent>;
template class ExternalSorter<BuyEvent>;

// ---------------------------------------------------------------------------
// File readers
// ---------------------------------------------------------------------------

namespace {

template <typename Event, typename ParseFn>
void read_rows(const std::filesystem::path& path, SourceFile source,
               const IngestConfig& config, ExternalSorter<Event>& sorter,
               IngestCounters& counters, ParseFn parse) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::uint64_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    ++counters.rows_read;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    RawRow row{line, line_number, source};
    try {
      sorter.push(parse(row));
      ++counters.rows_parsed;
    } catch (const MalformedRowError&) {
      if (config.policy == MalformedRowPolicy::FailFast) throw;
      ++counters.malformed_skipped;
    }
  }
  if (in.bad()) throw IoError("read failure on " + path.string());
}

}  // namespace

SortedClicks sort_click_file(const std::filesystem::path& path,
                             SourceFile source, const IngestConfig& config) {
  SortedClicks result;
  ExternalSorter<ClickEvent> sorter(config.memory_budget_bytes,
                                    resolve_temp_dir(config));
  read_rows(path, source, config, sorter, result.counters, parse_click_row);
  result.counters.sort_runs = sorter.run_count();
  result.stream = sorter.finish();
  return result;
}

SortedBuys sort_buy_file(const std::filesystem::path& path,
                         const IngestConfig& config) {
  SortedBuys result;
  ExternalSorter<BuyEvent> sorter(config.memory_budget_bytes,
                                  resolve_temp_dir(config));
  read_rows(path, SourceFile::Buys, config, sorter, result.counters,
            parse_buy_row);
  result.counters.sort_runs = sorter.run_count();
  result.stream = sorter.finish();
  return result;
}

// ---------------------------------------------------------------------------
// Session assembly
// ---------------------------------------------------------------------------

SessionAssembler::SessionAssembler(EventStream<ClickEvent> clicks,
                                   EventStream<BuyEvent> buys)
    : clicks_(std::move(clicks)), buys_(std::move(buys)) {
  click_head_ = clicks_.next();
  buy_head_ = buys_.next();
}

std::optional<Session> SessionAssembler::next() {
  if (!click_head_ && !buy_head_) return std::nullopt;

  std::int64_t session_id;
  if (click_head_ && buy_head_)
    session_id = std::min(click_head_->session_id, buy_head_->session_id);
  else if (click_head_)
    session_id = click_head_->session_id;
  else
    session_id = buy_head_->session_id;

  Session session;
  session.session_id = session_id;

  while (click_head_ && click_head_->session_id == session_id) {
    session.clicks.push_back(*click_head_);
    ++total_clicks_;
    click_head_ = clicks_.next();
    if (click_head_ && click_head_->session_id < session_id)
      throw UnsortedInputError("click stream sessionId decreased at " +
                               std::to_string(click_head_->session_id));
  }
  while (buy_head_ && buy_head_->session_id == session_id) {
    session.buys.push_back(*buy_head_);
    buy_head_ = buys_.next();
    if (buy_head_ && buy_head_->session_id < session_id)
      throw UnsortedInputError("buy stream sessionId decreased at " +
                               std::to_string(buy_head_->session_id));
  }

  // Upholds the Session invariant even when fed ad-hoc streams; stable and
  // idempotent, so sorted input is untouched.
  sort_clicks(session);
  derive_bought_items(session);
  if (session.clicks.empty() && !session.buys.empty())
    ++clickless_buy_sessions_;
  return session;
}

std::vector<Session> assemble_all(EventStream<ClickEvent> clicks,
                                  EventStream<BuyEvent> buys,
                                  std::uint64_t* clickless_buy_sessions) {
  SessionAssembler assembler(std::move(clicks), std::move(buys));
  std::vector<Session> sessions;
  while (auto s = assembler.next()) sessions.push_back(std::move(*s));
  if (clickless_buy_sessions)
    *clickless_buy_sessions = assembler.clickless_buy_sessions();
  return sessions;
}

LoadedSessions load_sessions(const std::filesystem::path& clicks_path,
                             const std::filesystem::path& buys_path,
                             const IngestConfig& config,
                             SourceFile click_source) {
  LoadedSessions result;
  SortedClicks clicks = sort_click_file(clicks_path, click_source, config);
  result.click_counters = clicks.counters;
  EventStream<BuyEvent> buy_stream;
  if (!buys_path.empty()) {
    SortedBuys buys = sort_buy_file(buys_path, config);
    result.buy_counters = buys.counters;
    buy_stream = std::move(buys.stream);
  }
  result.sessions = assemble_all(std::move(clicks.stream),
                                 std::move(buy_stream),
                                 &result.clickless_buy_sessions);
  return result;
}

}  // namespace buypred
