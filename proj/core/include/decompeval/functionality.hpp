#pragma once

#include "decompeval/manifest.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace decompeval {

/// An Exit without a matching Enter, or an unreadable wire record.
class StreamCorruptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EventKind { Enter, Exit, Write };

struct MappedRegion {
  std::uint64_t start = 0;
  std::uint64_t end = 0;  // exclusive
  std::string name;
  bool operator==(const MappedRegion&) const = default;
};

struct TraceEvent {
  EventKind kind = EventKind::Enter;
  std::uint64_t seq_id = 0;
  std::uint64_t thread_id = 0;
  std::string function;
  std::map<std::string, std::uint64_t> registers;  // Enter/Exit
  std::optional<std::uint64_t> return_value;      // Exit
  int fd = 1;                                      // Write
  std::string data;                                // Write, raw bytes
  std::uint64_t order_index = 0;
  bool operator==(const TraceEvent&) const = default;
};

/// Parsed instrumentation stream: events in order, the mapped-region
/// preamble, and the count of corruption markers the agent emitted.
struct TraceStream {
  std::vector<TraceEvent> events;
  std::vector<MappedRegion> regions;
  std::size_t corrupt_markers = 0;
};

/// One JSON record per line: {kind, seq, tid, fn, regs, ret, fd, data_b64, idx};
/// kind "maps" carries {regions:[{start,end,name}]}, kind "corrupt" a marker.
/// Register and return values are "0x..." strings. Writes to fds other than 1
/// are dropped. Throws StreamCorruptionError on a malformed line.
TraceStream parse_wire(std::string_view text);
std::string serialize_wire(const TraceStream& stream);

inline constexpr std::string_view kToplevelFrame = "<toplevel>";

struct CallRecord {
  std::uint64_t seq_id = 0;
  std::uint64_t thread_id = 0;
  std::string function;
  std::map<std::string, std::uint64_t> entry_registers;
  std::optional<std::uint64_t> return_value;  // absent when the call never returned
  std::vector<std::string> attributed_writes;
  int invocation_ordinal = 0;  // 1-based, per function, in seq order
  std::optional<std::uint64_t> parent_seq;
  int depth = 0;
  bool operator==(const CallRecord&) const = default;
};

void to_json(nlohmann::json& j, const CallRecord& c);

/// Per-thread stack simulation. fd=1 writes go to the top frame of their
/// thread, or to a synthetic kToplevelFrame record (seq 0) when the stack is
/// empty. Records come back in seq order. Throws StreamCorruptionError for an
/// Exit with no matching Enter.
std::vector<CallRecord> reconstruct_calls(const std::vector<TraceEvent>& events);

/// Inverse of reconstruct_calls: an event stream that reconstructs to `calls`.
std::vector<TraceEvent> events_from_calls(const std::vector<CallRecord>& calls);

// Program level.

struct Observation {
  std::string case_id;
  std::string payload;
  int position = 0;
  bool operator==(const Observation&) const = default;
};

/// Lines of the form "[CASE-ID] payload"; other lines are ignored.
std::vector<Observation> parse_observations(std::string_view stdout_text);

enum class ProgramCategory { ExactStdout, Partial, Fail, Unsupported };
std::string_view to_string(ProgramCategory c);
std::optional<ProgramCategory> program_category_from_string(std::string_view s);

struct ProgramVerdict {
  ProgramCategory category = ProgramCategory::Unsupported;
  int matched = 0;
  int total_original = 0;
  bool crash = false;
};

/// Longest order-preserving alignment of equal (case_id, payload) pairs.
int aligned_matches(const std::vector<Observation>& orig, const std::vector<Observation>& rec);

ProgramVerdict classify_program(const std::vector<Observation>& orig, const std::vector<Observation>& rec,
                                bool rec_crashed);

/// classify_program restricted to each case id the original emitted.
std::map<std::string, ProgramVerdict> classify_cases(const std::vector<Observation>& orig,
                                                     const std::vector<Observation>& rec, bool rec_crashed);

// Function level.

/// Registers that decide I/O agreement, per architecture.
const std::vector<std::string>& canonical_arg_registers(Arch arch);

struct CallPair {
  CallRecord orig;
  CallRecord rec;
};

/// k-th invocation of f in the original with the k-th invocation of f in the
/// recompiled trace. The synthetic toplevel frame never pairs.
std::vector<CallPair> match_calls(const std::vector<CallRecord>& orig_calls, const std::vector<CallRecord>& rec_calls);

struct ValueContext {
  Arch arch = Arch::x64;
  std::vector<MappedRegion> orig_regions;
  std::vector<MappedRegion> rec_regions;
};

/// Canonical argument registers and return values agree. Values that fall in
/// each side's mapped regions compare as pointers (equal category), since
/// addresses differ across builds.
bool io_matches(const CallPair& pair, const ValueContext& ctx);

struct IoMatch {
  bool evidence_available = false;
  int matched = 0;
  int total = 0;
  [[nodiscard]] double rate() const { return total > 0 ? static_cast<double>(matched) / total : 0.0; }
};

IoMatch io_match_rate(const std::vector<CallPair>& pairs, const ValueContext& ctx);

// Instruction level.

enum class ReturnCategory { Zero, Positive, Negative, PointerRange, Other };
std::string_view to_string(ReturnCategory c);

ReturnCategory return_category(std::optional<std::uint64_t> value, Arch arch,
                               const std::vector<MappedRegion>& regions);

struct SeqToken {
  std::string function;
  std::string register_signature;
  ReturnCategory return_category = ReturnCategory::Other;
  bool operator==(const SeqToken&) const = default;
};

std::vector<SeqToken> build_label_sequence(const std::vector<CallRecord>& calls, Arch arch,
                                           const std::vector<MappedRegion>& regions);

template <typename T>
std::size_t lcs_length(const std::vector<T>& a, const std::vector<T>& b) {
  const auto& row = b.size() <= a.size() ? b : a;
  const auto& col = b.size() <= a.size() ? a : b;
  const std::size_t n = row.size();
  if (n == 0) return 0;
  if (n <= 64) {
    // Bit-parallel LCS (Hyyro): bit j of v is cleared once row[j] joins the LCS.
    const std::uint64_t all = n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
    std::uint64_t v = all;
    for (const auto& x : col) {
      std::uint64_t match = 0;
      for (std::size_t j = 0; j < n; ++j) match |= static_cast<std::uint64_t>(row[j] == x) << j;
      const std::uint64_t u = v & match;
      v = ((v + u) | (v - u)) & all;
    }
    return n - static_cast<std::size_t>(__builtin_popcountll(v));
  }
  std::vector<std::size_t> dp(n + 1, 0);
  for (const auto& x : col) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t up = dp[j];
      dp[j] = x == row[j - 1] ? diag + 1 : std::max(up, dp[j - 1]);
      diag = up;
    }
  }
  return dp[n];
}

/// |LCS| / max(|a|, |b|); 1 when both are empty.
template <typename T>
double seq_similarity(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.empty() && b.empty()) return 1.0;
  return static_cast<double>(lcs_length(a, b)) / static_cast<double>(std::max(a.size(), b.size()));
}

/// Per dimension, the fraction of expected observation ids that the original
/// run emitted. Dimensions without expectations are omitted.
std::map<Dimension, double> driver_coverage(const std::vector<Observation>& orig_observations,
                                            const Manifest& manifest);

// Whole-task verdict.

struct FunctionLevel {
  IoMatch io;
};

struct InstructionLevel {
  bool evidence_available = false;
  double similarity = 0.0;
};

struct TaskVerdict {
  ProgramVerdict program;
  std::map<std::string, ProgramVerdict> per_case;
  std::optional<FunctionLevel> function_level;
  std::optional<InstructionLevel> instruction_level;
  std::string note;
};

void to_json(nlohmann::json& j, const ProgramVerdict& v);
void from_json(const nlohmann::json& j, ProgramVerdict& v);
void to_json(nlohmann::json& j, const TaskVerdict& v);
void from_json(const nlohmann::json& j, TaskVerdict& v);

struct TaskInputs {
  std::string orig_stdout;
  std::string rec_stdout;
  bool rec_crashed = false;
  std::optional<TraceStream> orig_trace;
  std::optional<TraceStream> rec_trace;
  Arch arch = Arch::x64;
};

/// Program verdict from stdout; function and instruction levels only when
/// both traces exist and at least one call pair matches. Those levels never
/// change the program verdict.
TaskVerdict evaluate_task(const TaskInputs& in);

}  // namespace decompeval
