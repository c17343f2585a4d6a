#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace buypred {

// One predicted buy session. session_score is emission metadata (size-cap
// trimming drops the lowest-scoring entries first); it is never serialized
// and never part of entry equality.
struct SolutionEntry {
  std::int64_t session_id = 0;
  std::vector<std::int64_t> items;  // sorted distinct, never empty
  double session_score = 0;
};

inline bool same_entries(const SolutionEntry& a, const SolutionEntry& b) {
  return a.session_id == b.session_id && a.items == b.items;
}

constexpr std::size_t kSolutionSizeCap = 25ull << 20;  // 25 MiB

struct EmitReport {
  std::uint64_t entries_written = 0;
  std::uint64_t entries_dropped = 0;
  std::uint64_t bytes_written = 0;
};

// Writes `sessionId;item1,item2,...\n` lines, ascending sessionId. When the
// encoding would exceed max_bytes, entries are dropped in ascending
// session_score order until it fits, and the report says how many.
EmitReport emit_solution(std::vector<SolutionEntry> entries,
                         const std::filesystem::path& path,
                         std::size_t max_bytes = kSolutionSizeCap);

// Inverse of emit_solution. MalformedSolutionError / DuplicateSessionError.
std::vector<SolutionEntry> parse_solution(const std::filesystem::path& path);

}  // namespace buypred
