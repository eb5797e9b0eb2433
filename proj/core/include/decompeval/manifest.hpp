#pragma once

#include <json.hpp>

#include <array>
#include <compare>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace decompeval {

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Dimension {
  ControlFlow,
  DataTypesVariables,
  MemoryOperations,
  FunctionCalls,
  ObjectOrientedCpp,
  CompileTimeSpecialization,
  SystemInteraction,
  SpecialChallenges,
};

inline constexpr std::array<Dimension, 8> kAllDimensions = {
    Dimension::ControlFlow,       Dimension::DataTypesVariables,        Dimension::MemoryOperations,
    Dimension::FunctionCalls,     Dimension::ObjectOrientedCpp,         Dimension::CompileTimeSpecialization,
    Dimension::SystemInteraction, Dimension::SpecialChallenges,
};

std::string_view to_string(Dimension d);
/// Two-letter id prefix, e.g. "CF" for ControlFlow.
std::string_view abbreviation(Dimension d);
/// snake_case form used in binary and task ids.
std::string_view slug(Dimension d);
std::optional<Dimension> dimension_from_string(std::string_view s);
std::optional<Dimension> dimension_from_abbreviation(std::string_view s);

enum class Level { L1 = 1, L2, L3, L4, L5 };
std::string_view to_string(Level l);

/// Ratings on the integer scale 1..5.
struct DifficultyViews {
  int control_data_flow = 1;
  int optimization_resistance = 1;
  int semantic_loss_risk = 1;
  bool operator==(const DifficultyViews&) const = default;
};

struct DifficultyWeights {
  double control_data_flow = 0.5;
  double optimization_resistance = 0.3;
  double semantic_loss_risk = 0.2;
  bool operator==(const DifficultyWeights&) const = default;
};

/// Throws ValidationError unless weights are non-negative, sum to 1 (1e-9)
/// and control/data-flow carries the strictly largest weight.
void validate_weights(const DifficultyWeights& w);
double weighted_difficulty(const DifficultyViews& views, const DifficultyWeights& weights);
Level assign_difficulty(const DifficultyViews& views, const DifficultyWeights& weights = {});

struct TestCase {
  std::string id;  // e.g. "CF-L1-03"
  Dimension dimension = Dimension::ControlFlow;
  DifficultyViews difficulty_views;
  Level level = Level::L1;
  std::string function_name;
  std::vector<std::string> expected_observation_ids;
  std::string source_file;
  bool operator==(const TestCase&) const = default;
};

/// `[A-Z]{2}-L[1-5]-[0-9]{2}`, brackets already stripped.
bool is_valid_case_id(std::string_view id);

enum class Compiler { GCC, Clang };
enum class OptLevel { O0, O1, O2, O3, Os };
enum class DebugInfo { WithDebug, Stripped };
enum class Arch { x86, x64, ARM32, ARM64 };

std::string_view to_string(Compiler c);
std::string_view to_string(OptLevel o);
std::string_view to_string(DebugInfo d);
std::string_view to_string(Arch a);
std::optional<Compiler> compiler_from_string(std::string_view s);
std::optional<OptLevel> opt_from_string(std::string_view s);
std::optional<DebugInfo> debug_from_string(std::string_view s);
std::optional<Arch> arch_from_string(std::string_view s);
/// Architecture of the machine this library was built for.
Arch host_arch();

struct BuildConfig {
  Compiler compiler = Compiler::GCC;
  OptLevel optimization = OptLevel::O0;
  DebugInfo debug = DebugInfo::WithDebug;
  Arch architecture = Arch::x64;
  auto operator<=>(const BuildConfig&) const = default;
};

/// "gcc_O2_g_x64" style fragment.
std::string config_slug(const BuildConfig& c);

struct BuildAxes {
  std::vector<Compiler> compilers;
  std::vector<OptLevel> optimizations;
  std::vector<DebugInfo> debug;
  std::vector<Arch> architectures;
  static BuildAxes defaults();
  bool operator==(const BuildAxes&) const = default;
};

struct DimensionSourceFile {
  Dimension dimension = Dimension::ControlFlow;
  std::string path;  // relative to the manifest directory
  std::vector<std::string> case_ids;
  std::vector<std::string> extra_flags;  // appended verbatim to every build of this file
  bool operator==(const DimensionSourceFile&) const = default;
};

struct MatrixEntry {
  DimensionSourceFile file;
  BuildConfig config;
  /// "<dimension-slug>_<config-slug>", unique within a matrix.
  [[nodiscard]] std::string binary_id() const;
};

struct BuildMatrix {
  std::vector<MatrixEntry> entries;
};

/// Cartesian product files x compilers x optimizations x debug x archs, in
/// that nesting order (files outermost). Throws ValidationError on an empty
/// axis or a duplicated axis value.
BuildMatrix expand_matrix(std::span<const DimensionSourceFile> files, const BuildAxes& axes);

struct Manifest {
  std::vector<TestCase> cases;
  std::vector<DimensionSourceFile> files;
  BuildAxes axes = BuildAxes::defaults();
  DifficultyWeights weights;
  /// Directory that relative paths resolve against; not serialized.
  std::filesystem::path base_dir;

  [[nodiscard]] const TestCase* find_case(std::string_view id) const;
  [[nodiscard]] std::filesystem::path resolve(const std::string& relative) const;
};

/// Every broken invariant as a human-readable message; empty when valid.
std::vector<std::string> validate_manifest(const Manifest& manifest);

nlohmann::json manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const nlohmann::json& j, std::filesystem::path base_dir = {});
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);
/// Canonical serialized form (stable key order, 2-space indent, trailing newline).
std::string manifest_canonical_text(const Manifest& manifest);

void to_json(nlohmann::json& j, const BuildConfig& c);
void from_json(const nlohmann::json& j, BuildConfig& c);

}  // namespace decompeval
