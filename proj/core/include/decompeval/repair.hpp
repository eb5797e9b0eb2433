#pragma once

#include "decompeval/build.hpp"
#include "decompeval/diagnostics.hpp"
#include "decompeval/llm.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace decompeval {

enum class EditKind { EditCodeBlock, ReplaceString };

struct EditCommand {
  EditKind kind = EditKind::ReplaceString;
  int start_line = 0;  // EditCodeBlock, 1-based inclusive
  int end_line = 0;
  std::string needle;  // ReplaceString
  std::string replacement;
  bool operator==(const EditCommand&) const = default;
};

void to_json(nlohmann::json& j, const EditCommand& e);
/// Throws std::invalid_argument naming the problem when the object is not a
/// well-formed edit.
void from_json(const nlohmann::json& j, EditCommand& e);

struct EditFailure {
  std::size_t index = 0;  // position in the edit list
  std::string reason;
};

struct ApplyResult {
  std::string text;
  std::vector<EditFailure> failures;
};

/// Applies edits in order to the progressively edited text. A failing edit
/// leaves the text unchanged and is recorded.
ApplyResult apply_edits(std::string_view text, const std::vector<EditCommand>& edits);

enum class RepairTier { FS, LF, CF };
std::string_view to_string(RepairTier t);
std::optional<RepairTier> tier_from_string(std::string_view s);

/// FS when a linkable binary exists; otherwise LF when compilation passed and
/// CF when it did not. Throws std::invalid_argument when link status is given
/// for a failed compile, or when nothing was linked yet the budget remains.
RepairTier classify_outcome(bool compile_ok, std::optional<bool> link_ok, bool budget_exhausted);

enum class RepairFlag { Oscillating, Stuck };
std::string_view to_string(RepairFlag f);

struct IterationRecord {
  int index = 0;
  bool compile_ok = false;
  std::optional<bool> link_ok;
  std::vector<Diagnostic> diagnostics;
  ErrorSnapshot snapshot_before;  // state this iteration's compile observed
  std::string action;             // none | stubs | llm | llm-failed | llm-unusable
  std::vector<EditCommand> edits;
  std::vector<std::string> rejected_edits;
  std::vector<EditFailure> apply_failures;
  std::vector<std::string> stubbed_symbols;
  ErrorSnapshot snapshot_after;  // state the next compile observed (= before on the last iteration)
  std::optional<std::string> exchange_key;
  std::string error;
};

struct RepairOutcome {
  RepairTier tier = RepairTier::CF;
  int iterations_used = 0;
  std::optional<int> fs_iteration;
  int initial_errors = 0;
  int min_residual_errors = 0;
  double effort_ratio = 0.0;
  std::set<RepairFlag> flags;
  int budget = 0;
};

struct RepairTrace {
  std::string task_ref;
  std::vector<IterationRecord> iterations;
  RepairOutcome outcome;
  std::vector<std::filesystem::path> stub_files;
  std::vector<std::string> warnings;
  std::vector<UsageRecord> usage;
  std::string final_code;
  std::optional<std::filesystem::path> binary;
};

void to_json(nlohmann::json& j, const IterationRecord& r);
void from_json(const nlohmann::json& j, IterationRecord& r);
void to_json(nlohmann::json& j, const RepairOutcome& o);
void from_json(const nlohmann::json& j, RepairOutcome& o);
void to_json(nlohmann::json& j, const RepairTrace& t);
void from_json(const nlohmann::json& j, RepairTrace& t);

/// Signature used for oscillation: category, line and normalized message.
std::string error_signature(const Diagnostic& d);

/// Needs at least two iterations; fewer yields no flags.
std::set<RepairFlag> detect_flags(const std::vector<IterationRecord>& iterations, int stuck_window = 5);

/// Derives tier, residuals, effort ratio and flags from the iterations.
RepairOutcome summarize(const std::vector<IterationRecord>& iterations, int budget, int stuck_window = 5);

/// The tier the trace would have received under a smaller iteration cap.
RepairTier tier_at_cap(const RepairTrace& trace, int cap);

/// Cumulative FS fraction after each iteration k = 1..budget.
std::vector<std::pair<int, double>> success_curve(const std::vector<RepairTrace>& traces, int budget);

// Link stubs.

struct StubResult {
  std::string text;
  std::vector<std::string> stubbed;
  std::vector<std::string> warnings;
};

/// Symbols named by UndefinedReference diagnostics, deduplicated, in order.
std::vector<std::string> undefined_symbols(const std::vector<Diagnostic>& diags);

/// One zero-valued definition per symbol. Signatures come from declarations in
/// `source_text` when they use only builtin types; otherwise functions are
/// emitted unprototyped (C) and data objects as zeroed storage. Symbols that
/// `source_text` already defines are skipped with a warning. Throws
/// std::invalid_argument on an empty or duplicated list.
StubResult generate_stubs(const std::vector<std::string>& symbols, std::string_view source_text,
                          SourceLanguage lang = SourceLanguage::C);

inline constexpr std::string_view kReservedPrefix = "__decomp_";

/// Renames top-level definitions of libc/crt symbols (e.g. a decompiled
/// `_start` or a `puts` thunk) to the reserved prefix. Call sites keep their
/// names so they bind to the real runtime.
std::string rename_runtime_definitions(std::string_view source, std::vector<std::string>* renamed = nullptr);

// The loop.

struct RepairOptions {
  int budget = 50;
  int window_radius = 20;
  int stuck_window = 5;
  SourceLanguage language = SourceLanguage::C;
  std::vector<std::string> extra_flags;
  bool rename_runtime = true;
  std::filesystem::path work_dir;  // iter-NNN/, stubs/, outcome.json
  std::string task_ref;
};

/// The repair prompt: edit protocol in the system message; diagnostics JSON
/// and a numbered code window around the first located error in the user
/// message. Deterministic and free of filesystem paths.
std::vector<ChatMessage> build_repair_prompt(std::string_view code, const std::vector<Diagnostic>& diags,
                                             int window_radius = 20);

/// Edits from a repair-edits object; malformed entries are returned as
/// rejection messages instead of failing the batch.
std::vector<EditCommand> parse_edit_list(const nlohmann::json& object, std::vector<std::string>& rejected);

/// compile -> parse -> (linkable: stop | stub unresolved symbols | ask the
/// model for edits and apply them), at most `budget` compiles. Every
/// compile uses flags_for(config) plus options.extra_flags.
RepairTrace run_repair(const BuildHarness& harness, Gateway& gateway, const ModelConfig& model,
                       std::string_view decompiled_source, const BuildConfig& config, const RepairOptions& options);

}  // namespace decompeval
