#include "buypred/solution.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <string>
#include <unordered_set>

#include "buypred/errors.hpp"

namespace buypred {

namespace {

std::size_t digits(std::int64_t v) {
  std::size_t n = 1;
  while (v >= 10) {
    v /= 10;
    ++n;
  }
  return n;
}

// Bytes of the encoded line including the trailing newline.
std::size_t line_bytes(const SolutionEntry& e) {
  std::size_t n = digits(e.session_id) + 1;  // id + ';'
  for (std::int64_t item : e.items) n += digits(item);
  n += e.items.size() - 1;  // commas
  return n + 1;             // '\n'
}

}  // namespace

EmitReport emit_solution(std::vector<SolutionEntry> entries,
                         const std::filesystem::path& path,
                         std::size_t max_bytes) {
  std::unordered_set<std::int64_t> ids;
  for (const SolutionEntry& e : entries) {
    if (e.items.empty()) throw EmptyItemSetError(e.session_id);
    if (!ids.insert(e.session_id).second)
      throw DuplicateSessionError(e.session_id);
  }

  std::size_t total = 0;
  for (const SolutionEntry& e : entries) total += line_bytes(e);

  EmitReport report;
  if (total > max_bytes) {
    // Lowest-confidence sessions go first; ties break on id for determinism.
    std::sort(entries.begin(), entries.end(),
              [](const SolutionEntry& a, const SolutionEntry& b) {
                if (a.session_score != b.session_score)
                  return a.session_score < b.session_score;
                return a.session_id > b.session_id;
              });
    std::size_t dropped = 0;
    while (dropped < entries.size() && total > max_bytes) {
      total -= line_bytes(entries[dropped]);
      ++dropped;
    }
    entries.erase(entries.begin(),
                  entries.begin() + static_cast<std::ptrdiff_t>(dropped));
    report.entries_dropped = dropped;
  }

  std::sort(entries.begin(), entries.end(),
            [](const SolutionEntry& a, const SolutionEntry& b) {
              return a.session_id < b.session_id;
            });

  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  for (const SolutionEntry& e : entries) {
    out << e.session_id << ';';
    for (std::size_t i = 0; i < e.items.size(); ++i) {
      if (i) out << ',';
      out << e.items[i];
    }
    out << '\n';
  }
  if (!out) throw IoError("write failure on " + path.string());
  report.entries_written = entries.size();
  report.bytes_written = total;
  return report;
}

std::vector<SolutionEntry> parse_solution(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<SolutionEntry> entries;
  std::unordered_set<std::int64_t> ids;
  std::string line;
  std::uint64_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::size_t semi = line.find(';');
    if (semi == std::string::npos)
      throw MalformedSolutionError(line_number, "missing ';'");
    SolutionEntry entry;
    {
      const char* first = line.data();
      const char* last = line.data() + semi;
      auto [ptr, ec] = std::from_chars(first, last, entry.session_id);
      if (ec != std::errc() || ptr != last || semi == 0)
        throw MalformedSolutionError(line_number, "bad session id");
    }
    std::size_t start = semi + 1;
    if (start >= line.size())
      throw MalformedSolutionError(line_number, "empty item set");
    while (start <= line.size()) {
      std::size_t comma = line.find(',', start);
      const std::size_t end = comma == std::string::npos ? line.size() : comma;
      std::int64_t item = 0;
      const char* first = line.data() + start;
      const char* last = line.data() + end;
      auto [ptr, ec] = std::from_chars(first, last, item);
      if (ec != std::errc() || ptr != last || first == last)
        throw MalformedSolutionError(line_number, "bad item id");
      entry.items.push_back(item);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!ids.insert(entry.session_id).second)
      throw DuplicateSessionError(entry.session_id);
    // Normalize to the SolutionEntry invariant; emitted files are already in
    // this form, so parse(emit(x)) stays the identity.
    std::sort(entry.items.begin(), entry.items.end());
    entry.items.erase(std::unique(entry.items.begin(), entry.items.end()),
                      entry.items.end());
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace buypred
