#pragma once

#include "decompeval/build.hpp"
#include "decompeval/functionality.hpp"
#include "decompeval/llm.hpp"
#include "decompeval/manifest.hpp"
#include "decompeval/readability.hpp"
#include "decompeval/repair.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace decompeval {

// Decompiler adapters.

enum class AdapterMode { ExternalCommand, DirectoryOfOutputs };
enum class AdapterUnit { WholeProgram, FunctionGranularity };
std::string_view to_string(AdapterMode m);
std::string_view to_string(AdapterUnit u);

struct DecompilerAdapter {
  std::string name;
  AdapterMode mode = AdapterMode::DirectoryOfOutputs;
  AdapterUnit unit = AdapterUnit::WholeProgram;
  /// DirectoryOfOutputs: directory holding <binary_id>.c (or .cpp).
  std::filesystem::path directory;
  /// ExternalCommand: argv template; {binary}, {output} and {binary_id} are
  /// substituted per invocation. The command must write {output}.
  std::string command;
  std::chrono::seconds timeout{600};

  /// Throws ConfigurationError when the adapter cannot be used at all: bad
  /// name, missing directory, or an executable not on PATH.
  void validate() const;

  /// Writes the decompiled text for one binary to `output`. Throws
  /// std::runtime_error when this binary has no output.
  void decompile(const std::filesystem::path& binary, const std::string& binary_id,
                 const std::filesystem::path& output) const;
};

void to_json(nlohmann::json& j, const DecompilerAdapter& a);
void from_json(const nlohmann::json& j, DecompilerAdapter& a);

/// Whole programs feed recompilability and program-level functionality;
/// function-granularity output does not produce a linkable program.
inline bool counts_for_recompilability(AdapterUnit u) { return u == AdapterUnit::WholeProgram; }

// Run configuration.

enum class Backend { LocalHost, RemoteExec };
std::string_view to_string(Backend b);

struct RunConfig {
  std::filesystem::path manifest_path;
  std::vector<DecompilerAdapter> adapters;
  std::vector<ModelConfig> judges;
  std::vector<ModelConfig> repair_models;
  int budget = 50;
  int window_radius = 20;
  Backend backend = Backend::LocalHost;
  /// RemoteExec: argv template with {binary}; its stdout is the program's.
  std::string remote_template;
  /// Optional tracer with {binary} and {output}; writes the wire format.
  std::string tracer_template;
  std::filesystem::path output_root;
  unsigned jobs = 1;
  /// Defaults to <output_root>/replay.
  std::filesystem::path replay_dir;
  bool replay_only = false;
  std::optional<BuildAxes> axes;  // overrides the manifest's axes
  std::chrono::milliseconds run_timeout{10000};

  /// Throws ValidationError listing every problem.
  void validate() const;
  [[nodiscard]] std::filesystem::path effective_replay_dir() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
/// Relative paths resolve against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

enum class Stage { Build, Decompile, Readability, Repair, Trace, Diff, Report };
std::string_view to_string(Stage s);
std::optional<Stage> stage_from_string(std::string_view s);
inline const std::vector<Stage> kAllStages = {Stage::Build,  Stage::Decompile, Stage::Readability, Stage::Repair,
                                              Stage::Trace, Stage::Diff,      Stage::Report};

struct PipelineOptions {
  std::set<Stage> stages = {kAllStages.begin(), kAllStages.end()};
  /// Replaces the HTTP transport (tests, offline model stand-ins).
  std::shared_ptr<ChatTransport> transport;
  BuildHarness* harness = nullptr;  // defaults to a host BuildHarness
};

struct TaskFailure {
  std::string task_id;
  std::string stage;
  std::string error;
};

struct RunSummary {
  std::filesystem::path run_dir;
  std::size_t binaries = 0;
  std::size_t tasks = 0;
  std::vector<TaskFailure> failures;
  std::size_t transport_calls = 0;
  std::size_t replay_hits = 0;
  std::vector<std::string> tables;  // ids written by the report stage
};

/// Task ids are "<binary_id>_<decompiler>".
std::string task_id_for(const std::string& binary_id, const std::string& decompiler);

/// Runs the requested stages in order over output_root. Adapters are
/// validated before anything else; a bad adapter aborts with
/// ConfigurationError. Each stage skips work whose artifacts already exist,
/// and a failing task is recorded without stopping the others.
RunSummary run_pipeline(const RunConfig& config, const PipelineOptions& options = {});

// Report tables.

struct ReportTable {
  std::string id;
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  nlohmann::json records = nlohmann::json::array();  // numeric values behind the cells

  [[nodiscard]] std::string to_csv() const;
  [[nodiscard]] nlohmann::json to_json() const;
};

/// One decimal with a trailing ".0" dropped: 1700.0 -> "1700", 64.8 -> "64.8".
std::string format_compact(double value);
/// "414.7 64.8%".
std::string format_mean_percent(double mean, double denominator);
/// "24/1945 (1.2%)"; one decimal always kept.
std::string format_count_fraction(long count, long total);
/// "83.3%" from a 0..1 rate.
std::string format_rate(double rate);
/// "5.89 (6.58/5.31/5.78)"; an absent judge renders as "–".
std::string format_readability_cell(double mean, const std::vector<std::optional<double>>& judge_means);

struct TierCounts {
  int fs = 0;
  int lf = 0;
  int cf = 0;
  [[nodiscard]] int total() const { return fs + lf + cf; }
};

struct RecompGroup {
  std::string decompiler;
  AdapterUnit unit = AdapterUnit::WholeProgram;
  int denominator = 0;                         // tasks per repair model
  std::map<std::string, TierCounts> by_model;  // repair model -> counts
};

/// Rows per decompiler plus Total. Each tier cell is the mean over models and
/// its share of the denominator. Throws std::invalid_argument when a model's
/// counts do not sum to the group denominator, when groups disagree on the
/// model set, or for a function-granularity group.
ReportTable render_recompilability(const std::vector<RecompGroup>& groups);

struct FunctionalityGroup {
  std::string decompiler;
  AdapterUnit unit = AdapterUnit::WholeProgram;
  std::vector<TaskVerdict> verdicts;  // FS tasks of one repair model
};

/// Program-level category counts, function- and instruction-level evidence
/// and means; groups without verdicts are omitted. I/O match pools matched
/// calls over all evidence tasks; similarity is the mean over evidence tasks.
ReportTable render_functionality(const std::vector<FunctionalityGroup>& groups, const std::string& repair_model = {});

/// Cells "mean (j1/j2/...)" in `judge_order`, one column per level plus overall.
ReportTable render_readability(const std::vector<CellStats>& cells, const std::vector<std::string>& judge_order);
/// Cross-judge sample stddev per cell.
ReportTable render_readability_spread(const std::vector<CellStats>& cells);
ReportTable render_rank_agreement(const std::vector<RankAgreement>& rows);

/// Per decompiler and failure tier: Σ(initial − min residual) / Σ initial.
/// FS outcomes are ignored; tiers with a zero initial total are omitted.
ReportTable render_effort(const std::map<std::string, std::vector<RepairOutcome>>& outcomes);

struct EfficiencyRow {
  std::string model;
  std::string stage;
  std::optional<UsageSummary> tokens;  // absent for stages with no model calls
  std::vector<double> task_seconds;    // used when tokens are absent
};

ReportTable render_efficiency(const std::vector<EfficiencyRow>& rows);

/// Cumulative FS share after each iteration, one column per repair model.
ReportTable render_success_curve(const std::map<std::string, std::vector<RepairTrace>>& traces_by_model, int budget);

/// Category shares of first-iteration diagnostics, plus the type-related share.
ReportTable render_error_categories(const std::vector<Diagnostic>& corpus);

ReportTable render_driver_coverage(const std::map<Dimension, double>& coverage);

/// Reads every task artifact under `run_dir` and renders all tables. Pure
/// function of the persisted state.
std::vector<ReportTable> render_run(const std::filesystem::path& run_dir, const RunConfig& config);

/// <dir>/<id>.csv and <dir>/<id>.json per table.
void write_tables(const std::vector<ReportTable>& tables, const std::filesystem::path& dir);

}  // namespace decompeval
