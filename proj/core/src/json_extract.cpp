#include "decompeval/llm.hpp"
#include "decompeval/readability.hpp"

#include "decompeval/util.hpp"

#include <regex>

namespace decompeval {

using nlohmann::json;

SchemaValidationError::SchemaValidationError(const std::string& schema, std::vector<std::string> problems)
    : std::runtime_error("response does not satisfy schema " + schema + ": " + join(problems, "; ")),
      problems_(std::move(problems)) {}

std::vector<std::string> schema_problems(const json& value, std::string_view schema_id) {
  std::vector<std::string> problems;
  if (schema_id == kScorecardSchema) {
    if (!value.is_object() || !value.contains("scores") || !value["scores"].is_object()) {
      problems.emplace_back("missing object field 'scores'");
      return problems;
    }
    const auto& scores = value["scores"];
    for (const auto& key : Rubric::standard().keys()) {
      if (!scores.contains(key)) {
        problems.push_back("missing sub-dimension '" + key + "'");
      } else if (!scores[key].is_number()) {
        problems.push_back("sub-dimension '" + key + "' is not a number");
      }
    }
    return problems;
  }
  if (schema_id == kRepairEditsSchema) {
    if (!value.is_object() || !value.contains("edits")) {
      problems.emplace_back("missing field 'edits'");
    } else if (!value["edits"].is_array()) {
      problems.emplace_back("field 'edits' is not an array");
    }
    return problems;
  }
  throw std::invalid_argument("unregistered schema '" + std::string(schema_id) + "'");
}

namespace {

std::vector<std::string> fenced_blocks(std::string_view text) {
  static const std::regex fence_re(R"(```[ \t]*(?:json|JSON)?[ \t]*\r?\n([\s\S]*?)```)");
  std::vector<std::string> out;
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), fence_re); it != std::sregex_iterator(); ++it) {
    out.push_back((*it)[1].str());
  }
  return out;
}

/// Every brace-balanced `{...}` span, in order of its opening brace. String
/// literals are skipped so braces inside them do not count.
std::vector<std::string> balanced_objects(std::string_view text) {
  std::vector<std::string> out;
  for (std::size_t start = text.find('{'); start != std::string_view::npos; start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) {
          out.emplace_back(text.substr(start, i - start + 1));
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace

json extract_json(std::string_view response_text, std::string_view schema_id) {
  schema_problems(json::object(), schema_id);  // rejects unknown schema ids up front

  std::vector<std::string> candidates = fenced_blocks(response_text);
  for (auto& c : balanced_objects(response_text)) candidates.push_back(std::move(c));

  std::optional<std::vector<std::string>> first_problems;
  for (const auto& c : candidates) {
    json parsed = json::parse(c, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) continue;
    auto problems = schema_problems(parsed, schema_id);
    if (problems.empty()) return parsed;
    if (!first_problems) first_problems = std::move(problems);
  }
  if (first_problems) throw SchemaValidationError(std::string(schema_id), *first_problems);
  throw ExtractionError("no JSON object found in response");
}

}  // namespace decompeval
