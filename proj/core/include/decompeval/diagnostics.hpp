#pragma once

#include "decompeval/build.hpp"
#include "decompeval/manifest.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace decompeval {

enum class Phase { Compile, Link };
enum class Severity { Error, Warning };

enum class ErrorCategory {
  SyntaxError,
  UndeclaredIdentifier,
  ConflictingTypes,
  IncompatiblePointerType,
  TypeConversionWarning,
  ImplicitFunctionDeclaration,
  MemberAccessError,
  MultipleDefinition,
  ArgumentCountMismatch,
  VoidValueError,
  UnknownType,
  UndefinedReference,
  Redefinition,
  IncompleteType,
  Uncategorized,
};

inline constexpr std::array<ErrorCategory, 15> kAllCategories = {
    ErrorCategory::SyntaxError,         ErrorCategory::UndeclaredIdentifier,
    ErrorCategory::ConflictingTypes,    ErrorCategory::IncompatiblePointerType,
    ErrorCategory::TypeConversionWarning, ErrorCategory::ImplicitFunctionDeclaration,
    ErrorCategory::MemberAccessError,   ErrorCategory::MultipleDefinition,
    ErrorCategory::ArgumentCountMismatch, ErrorCategory::VoidValueError,
    ErrorCategory::UnknownType,         ErrorCategory::UndefinedReference,
    ErrorCategory::Redefinition,        ErrorCategory::IncompleteType,
    ErrorCategory::Uncategorized,
};

std::string_view to_string(Phase p);
std::string_view to_string(Severity s);
std::string_view to_string(ErrorCategory c);
std::optional<Phase> phase_from_string(std::string_view s);
std::optional<Severity> severity_from_string(std::string_view s);
std::optional<ErrorCategory> category_from_string(std::string_view s);

/// ConflictingTypes, IncompatiblePointerType, UnknownType, IncompleteType,
/// MemberAccessError, VoidValueError.
bool type_related(ErrorCategory c);

struct Diagnostic {
  Phase phase = Phase::Compile;
  std::optional<std::string> file;
  std::optional<int> line;
  std::optional<int> column;
  ErrorCategory category = ErrorCategory::Uncategorized;
  Severity severity = Severity::Error;
  /// The diagnostic line as emitted, followed by any attached note lines.
  std::string raw_message;
  /// Message text after the location and severity prefix.
  std::string message;
  bool operator==(const Diagnostic&) const = default;
};

void to_json(nlohmann::json& j, const Diagnostic& d);
void from_json(const nlohmann::json& j, Diagnostic& d);

/// First match over an ordered pattern table. `compiler` selects the
/// per-compiler sub-table; without a hint the union table applies.
ErrorCategory classify(std::string_view message, Phase phase, std::optional<Compiler> compiler = std::nullopt);

std::vector<Diagnostic> parse_diagnostics(std::string_view raw_stderr, Phase phase,
                                          std::optional<Compiler> compiler = std::nullopt);

/// Text form that parse_diagnostics reads back into the same list.
std::string render_diagnostics(const std::vector<Diagnostic>& diags);

/// Diagnostics for a build outcome: compile-phase when compilation failed,
/// link-phase when linking failed, compile warnings otherwise. A failed phase
/// that yields no error diagnostic gets one synthesized Uncategorized error.
std::vector<Diagnostic> diagnostics_for(const CompileResult& result, std::optional<Compiler> compiler = std::nullopt);

struct ErrorSnapshot {
  std::map<ErrorCategory, int> counts;  // Error severity only
  int total_errors = 0;
  int total_warnings = 0;
  Phase phase = Phase::Compile;
  bool operator==(const ErrorSnapshot&) const = default;
};

void to_json(nlohmann::json& j, const ErrorSnapshot& s);
void from_json(const nlohmann::json& j, ErrorSnapshot& s);

/// Phase is Link when any diagnostic is link-phase, Compile otherwise.
ErrorSnapshot snapshot(const std::vector<Diagnostic>& diags);

/// Share of each category over the corpus; throws std::invalid_argument on an
/// empty corpus.
std::map<ErrorCategory, double> category_shares(const std::vector<Diagnostic>& corpus);
double type_related_share(const std::map<ErrorCategory, double>& shares);

}  // namespace decompeval
