#include "decompeval/diagnostics.hpp"

#include "decompeval/util.hpp"

#include <numeric>
#include <regex>
#include <stdexcept>

namespace decompeval {

using nlohmann::json;

std::string_view to_string(Phase p) { return p == Phase::Compile ? "Compile" : "Link"; }
std::string_view to_string(Severity s) { return s == Severity::Error ? "Error" : "Warning"; }

std::string_view to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::SyntaxError: return "SyntaxError";
    case ErrorCategory::UndeclaredIdentifier: return "UndeclaredIdentifier";
    case ErrorCategory::ConflictingTypes: return "ConflictingTypes";
    case ErrorCategory::IncompatiblePointerType: return "IncompatiblePointerType";
    case ErrorCategory::TypeConversionWarning: return "TypeConversionWarning";
    case ErrorCategory::ImplicitFunctionDeclaration: return "ImplicitFunctionDeclaration";
    case ErrorCategory::MemberAccessError: return "MemberAccessError";
    case ErrorCategory::MultipleDefinition: return "MultipleDefinition";
    case ErrorCategory::ArgumentCountMismatch: return "ArgumentCountMismatch";
    case ErrorCategory::VoidValueError: return "VoidValueError";
    case ErrorCategory::UnknownType: return "UnknownType";
    case ErrorCategory::UndefinedReference: return "UndefinedReference";
    case ErrorCategory::Redefinition: return "Redefinition";
    case ErrorCategory::IncompleteType: return "IncompleteType";
    case ErrorCategory::Uncategorized: return "Uncategorized";
  }
  return "Uncategorized";
}

std::optional<Phase> phase_from_string(std::string_view s) {
  if (s == "Compile") return Phase::Compile;
  if (s == "Link") return Phase::Link;
  return std::nullopt;
}

std::optional<Severity> severity_from_string(std::string_view s) {
  if (s == "Error") return Severity::Error;
  if (s == "Warning") return Severity::Warning;
  return std::nullopt;
}

std::optional<ErrorCategory> category_from_string(std::string_view s) {
  for (auto c : kAllCategories) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

bool type_related(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::ConflictingTypes:
    case ErrorCategory::IncompatiblePointerType:
    case ErrorCategory::UnknownType:
    case ErrorCategory::IncompleteType:
    case ErrorCategory::MemberAccessError:
    case ErrorCategory::VoidValueError:
      return true;
    default:
      return false;
  }
}

void to_json(json& j, const Diagnostic& d) {
  j = json{{"phase", to_string(d.phase)},
           {"file", d.file ? json(*d.file) : json(nullptr)},
           {"line", d.line ? json(*d.line) : json(nullptr)},
           {"column", d.column ? json(*d.column) : json(nullptr)},
           {"category", to_string(d.category)},
           {"severity", to_string(d.severity)},
           {"raw_message", d.raw_message},
           {"message", d.message}};
}

void from_json(const json& j, Diagnostic& d) {
  auto need = [](auto opt, const std::string& what) {
    if (!opt) throw std::invalid_argument("bad diagnostic field: " + what);
    return *opt;
  };
  d.phase = need(phase_from_string(j.at("phase").get<std::string>()), "phase");
  d.severity = need(severity_from_string(j.at("severity").get<std::string>()), "severity");
  d.category = need(category_from_string(j.at("category").get<std::string>()), "category");
  d.file = j.contains("file") && !j["file"].is_null() ? std::optional(j["file"].get<std::string>()) : std::nullopt;
  d.line = j.contains("line") && !j["line"].is_null() ? std::optional(j["line"].get<int>()) : std::nullopt;
  d.column = j.contains("column") && !j["column"].is_null() ? std::optional(j["column"].get<int>()) : std::nullopt;
  d.raw_message = j.at("raw_message").get<std::string>();
  d.message = j.value("message", std::string());
}

namespace {

enum : unsigned { kGcc = 1, kClang = 2, kBoth = 3 };

struct Pattern {
  std::string_view needle;
  ErrorCategory category;
  unsigned compilers;
  bool prefix = false;
};

// Most specific first. Order is significant.
constexpr Pattern kCompilePatterns[] = {
    {"implicit declaration of function", ErrorCategory::ImplicitFunctionDeclaration, kBoth},
    {"call to undeclared function", ErrorCategory::ImplicitFunctionDeclaration, kClang},
    {"void value not ignored", ErrorCategory::VoidValueError, kGcc},
    {"'return' with a value, in function returning void", ErrorCategory::VoidValueError, kGcc},
    {"incompatible type 'void'", ErrorCategory::VoidValueError, kClang},
    {"should not return a value", ErrorCategory::VoidValueError, kClang},
    {"incompatible pointer to integer conversion", ErrorCategory::TypeConversionWarning, kClang},
    {"incompatible integer to pointer conversion", ErrorCategory::TypeConversionWarning, kClang},
    {"makes integer from pointer", ErrorCategory::TypeConversionWarning, kGcc},
    {"makes pointer from integer", ErrorCategory::TypeConversionWarning, kGcc},
    {"changes value", ErrorCategory::TypeConversionWarning, kBoth},
    {"may change value", ErrorCategory::TypeConversionWarning, kGcc},
    {"implicit conversion", ErrorCategory::TypeConversionWarning, kClang},
    {"incompatible pointer type", ErrorCategory::IncompatiblePointerType, kBoth},
    {"conflicting types", ErrorCategory::ConflictingTypes, kBoth},
    {"has no member named", ErrorCategory::MemberAccessError, kGcc},
    {"request for member", ErrorCategory::MemberAccessError, kGcc},
    {"no member named", ErrorCategory::MemberAccessError, kClang},
    {"member reference base type", ErrorCategory::MemberAccessError, kClang},
    {"too many arguments", ErrorCategory::ArgumentCountMismatch, kBoth},
    {"too few arguments", ErrorCategory::ArgumentCountMismatch, kBoth},
    {"unknown type name", ErrorCategory::UnknownType, kBoth},
    {"redefinition of", ErrorCategory::Redefinition, kBoth},
    {"redeclaration of", ErrorCategory::Redefinition, kGcc},
    {"dereferencing pointer to incomplete type", ErrorCategory::IncompleteType, kGcc},
    {"incomplete definition of type", ErrorCategory::IncompleteType, kClang},
    {"incomplete type", ErrorCategory::IncompleteType, kBoth},
    {"storage size of", ErrorCategory::IncompleteType, kGcc},
    {"invalid use of undefined type", ErrorCategory::IncompleteType, kGcc},
    {"undeclared", ErrorCategory::UndeclaredIdentifier, kBoth},
    {"expected ", ErrorCategory::SyntaxError, kBoth, true},
    {"stray ", ErrorCategory::SyntaxError, kGcc},
    {"extraneous closing brace", ErrorCategory::SyntaxError, kClang},
    {"unterminated", ErrorCategory::SyntaxError, kBoth},
    {"missing terminating", ErrorCategory::SyntaxError, kBoth},
};

constexpr Pattern kLinkPatterns[] = {
    {"undefined reference to", ErrorCategory::UndefinedReference, kBoth},
    {"undefined symbol", ErrorCategory::UndefinedReference, kBoth},
    {"multiple definition of", ErrorCategory::MultipleDefinition, kBoth},
    {"duplicate symbol", ErrorCategory::MultipleDefinition, kBoth},
};

unsigned mask_for(std::optional<Compiler> c) {
  if (!c) return kBoth;
  return *c == Compiler::GCC ? kGcc : kClang;
}

const std::regex& compile_line_re() {
  static const std::regex re(R"(^(.+?):(\d+):(?:(\d+):)? (fatal error|error|warning|note): (.*)$)");
  return re;
}
const std::regex& bare_line_re() {
  static const std::regex re(R"(^([^\s:]+): (fatal error|error|warning|note): (.*)$)");
  return re;
}
const std::regex& linker_prefix_re() {
  static const std::regex re(R"(^(?:\S*/)?(?:ld|ld\.\w+|ld64\.lld): (.*)$)");
  return re;
}
const std::regex& section_loc_re() {
  static const std::regex re(R"(^(.+?):\(([^)]*)\): (.*)$)");
  return re;
}
const std::regex& line_loc_re() {
  static const std::regex re(R"(^([^\s:]+):(\d+): (.*)$)");
  return re;
}

bool is_summary_line(std::string_view line) {
  return starts_with(line, "collect2: error: ld returned") || contains(line, "linker command failed with exit code") ||
         line == "compilation terminated.";
}

bool is_object_path(std::string_view p) {
  auto ends = [&](std::string_view suf) { return p.size() >= suf.size() && p.substr(p.size() - suf.size()) == suf; };
  return ends(".o") || ends(".a") || ends(".so") || contains(p, ".a(");
}

Severity severity_of(std::string_view word) { return word == "warning" ? Severity::Warning : Severity::Error; }

void parse_compile(const std::vector<std::string>& lines, std::optional<Compiler> compiler,
                   std::vector<Diagnostic>& out) {
  bool last_open = false;
  for (const auto& line : lines) {
    if (line.empty() || is_summary_line(line)) {
      continue;
    }
    std::smatch m;
    if (std::regex_match(line, m, compile_line_re())) {
      const std::string kind = m[4].str();
      if (kind == "note") {
        if (last_open) out.back().raw_message += "\n" + line;
        continue;
      }
      Diagnostic d;
      d.phase = Phase::Compile;
      d.file = m[1].str();
      d.line = std::stoi(m[2].str());
      if (m[3].matched) d.column = std::stoi(m[3].str());
      d.severity = severity_of(kind);
      d.message = m[5].str();
      d.raw_message = line;
      d.category = classify(d.message, Phase::Compile, compiler);
      out.push_back(std::move(d));
      last_open = true;
      continue;
    }
    if (std::regex_match(line, m, bare_line_re())) {
      const std::string kind = m[2].str();
      if (kind == "note") {
        if (last_open) out.back().raw_message += "\n" + line;
        continue;
      }
      Diagnostic d;
      d.phase = Phase::Compile;
      d.severity = severity_of(kind);
      d.message = m[3].str();
      d.raw_message = line;
      d.category = classify(d.message, Phase::Compile, compiler);
      out.push_back(std::move(d));
      last_open = true;
      continue;
    }
    // "In function", "In file included from", caret art: context only.
  }
}

void parse_link(const std::vector<std::string>& lines, std::vector<Diagnostic>& out) {
  bool last_open = false;
  for (const auto& line : lines) {
    if (line.empty() || is_summary_line(line)) continue;
    if (starts_with(line, ">>>") || starts_with(trim(line), "note:")) {
      if (last_open) out.back().raw_message += "\n" + line;
      continue;
    }
    std::string rest = line;
    std::smatch m;
    if (std::regex_match(line, m, linker_prefix_re())) rest = m[1].str();
    if (rest.ends_with(":") && contains(rest, "in function")) continue;
    if (contains(rest, "first defined here") && !contains(rest, "multiple definition")) {
      if (last_open) out.back().raw_message += "\n" + line;
      continue;
    }

    Diagnostic d;
    d.phase = Phase::Link;
    d.raw_message = line;
    std::string msg = rest;
    std::smatch lm;
    if (std::regex_match(rest, lm, section_loc_re())) {
      if (!is_object_path(lm[1].str())) d.file = lm[1].str();
      msg = lm[3].str();
    } else if (std::regex_match(rest, lm, line_loc_re())) {
      d.file = lm[1].str();
      d.line = std::stoi(lm[2].str());
      msg = lm[3].str();
    }
    if (starts_with(msg, "warning: ")) {
      d.severity = Severity::Warning;
      msg = msg.substr(9);
    } else if (starts_with(msg, "error: ")) {
      msg = msg.substr(7);
    }
    d.message = msg;
    d.category = classify(msg, Phase::Link);
    out.push_back(std::move(d));
    last_open = true;
  }
}

}  // namespace

ErrorCategory classify(std::string_view message, Phase phase, std::optional<Compiler> compiler) {
  const unsigned mask = mask_for(compiler);
  auto scan = [&](const auto& table) -> std::optional<ErrorCategory> {
    for (const auto& p : table) {
      if (!(p.compilers & mask)) continue;
      if (p.prefix ? starts_with(message, p.needle) : contains(message, p.needle)) return p.category;
    }
    return std::nullopt;
  };
  if (phase == Phase::Link) return scan(kLinkPatterns).value_or(ErrorCategory::Uncategorized);
  return scan(kCompilePatterns).value_or(ErrorCategory::Uncategorized);
}

std::vector<Diagnostic> parse_diagnostics(std::string_view raw_stderr, Phase phase, std::optional<Compiler> compiler) {
  std::vector<Diagnostic> out;
  const auto lines = split_lines(raw_stderr);
  if (phase == Phase::Compile) {
    parse_compile(lines, compiler, out);
  } else {
    parse_link(lines, out);
  }
  return out;
}

std::string render_diagnostics(const std::vector<Diagnostic>& diags) {
  std::string out;
  for (const auto& d : diags) {
    out += d.raw_message;
    out += '\n';
  }
  return out;
}

std::vector<Diagnostic> diagnostics_for(const CompileResult& result, std::optional<Compiler> compiler) {
  const Phase phase = !result.compile_ok ? Phase::Compile : Phase::Link;
  const bool failed = !result.compile_ok || (result.link_ok && !*result.link_ok);
  auto diags = parse_diagnostics(result.raw_stderr, failed ? phase : Phase::Compile, compiler);
  if (!failed) return diags;
  const bool any_error =
      std::any_of(diags.begin(), diags.end(), [](const Diagnostic& d) { return d.severity == Severity::Error; });
  if (!any_error) {
    Diagnostic d;
    d.phase = phase;
    d.severity = Severity::Error;
    d.category = ErrorCategory::Uncategorized;
    std::string first;
    for (const auto& l : split_lines(result.raw_stderr)) {
      if (!trim(l).empty()) {
        first = trim(l);
        break;
      }
    }
    d.message = first.empty() ? (phase == Phase::Compile ? "compilation failed" : "linking failed") +
                                    std::string(" with exit code ") + std::to_string(result.exit_code)
                              : first;
    d.raw_message = "decompeval: error: " + d.message;
    diags.push_back(std::move(d));
  }
  return diags;
}

void to_json(json& j, const ErrorSnapshot& s) {
  json counts = json::object();
  for (const auto& [c, n] : s.counts) counts[std::string(to_string(c))] = n;
  j = json{{"counts", counts},
           {"total_errors", s.total_errors},
           {"total_warnings", s.total_warnings},
           {"phase", to_string(s.phase)}};
}

void from_json(const json& j, ErrorSnapshot& s) {
  s.counts.clear();
  for (const auto& [k, v] : j.at("counts").items()) {
    auto c = category_from_string(k);
    if (!c) throw std::invalid_argument("unknown category " + k);
    s.counts[*c] = v.get<int>();
  }
  s.total_errors = j.at("total_errors").get<int>();
  s.total_warnings = j.at("total_warnings").get<int>();
  s.phase = phase_from_string(j.at("phase").get<std::string>()).value_or(Phase::Compile);
}

ErrorSnapshot snapshot(const std::vector<Diagnostic>& diags) {
  ErrorSnapshot s;
  for (const auto& d : diags) {
    if (d.phase == Phase::Link) s.phase = Phase::Link;
    if (d.severity == Severity::Error) {
      ++s.counts[d.category];
      ++s.total_errors;
    } else {
      ++s.total_warnings;
    }
  }
  return s;
}

std::map<ErrorCategory, double> category_shares(const std::vector<Diagnostic>& corpus) {
  if (corpus.empty()) throw std::invalid_argument("category_shares: empty corpus");
  std::map<ErrorCategory, int> counts;
  for (const auto& d : corpus) ++counts[d.category];
  std::map<ErrorCategory, double> shares;
  for (const auto& [c, n] : counts) shares[c] = static_cast<double>(n) / static_cast<double>(corpus.size());
  return shares;
}

double type_related_share(const std::map<ErrorCategory, double>& shares) {
  double sum = 0.0;
  for (const auto& [c, v] : shares) {
    if (type_related(c)) sum += v;
  }
  return sum;
}

}  // namespace decompeval
