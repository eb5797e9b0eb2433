#pragma once

#include "decompeval/llm.hpp"
#include "decompeval/readability.hpp"
#include "decompeval/util.hpp"

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testsupport {

namespace fs = std::filesystem;
using nlohmann::json;

inline fs::path source_dir() { return fs::path(DECOMPEVAL_SOURCE_DIR); }
inline fs::path fixtures() { return source_dir() / "tests" / "fixtures"; }

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("decompeval-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

/// A stand-in repair model: the first rule whose `when` text occurs in the
/// last user message supplies the edits; no rule means no edits.
struct ScriptRule {
  std::string when;
  json edits;
};

inline std::vector<ScriptRule> load_script(const fs::path& path) {
  std::vector<ScriptRule> rules;
  const auto doc = json::parse(decompeval::read_text_file(path));
  for (const auto& r : doc.at("rules")) {
    rules.push_back({r.at("when").get<std::string>(), r.at("edits")});
  }
  return rules;
}

inline std::shared_ptr<decompeval::ChatTransport> scripted_model(std::vector<ScriptRule> rules,
                                                                std::shared_ptr<std::atomic<int>> calls = nullptr) {
  return std::make_shared<decompeval::FunctionTransport>(
      [rules = std::move(rules), calls](const decompeval::ModelConfig&,
                                        const std::vector<decompeval::ChatMessage>& messages) {
        if (calls) ++*calls;
        const auto& user = messages.back().content;
        json edits = json::array();
        for (const auto& r : rules) {
          if (user.find(r.when) != std::string::npos) {
            edits = r.edits;
            break;
          }
        }
        return "Proposed fix:\n```json\n" + json{{"edits", edits}}.dump(2) + "\n```\n";
      });
}

inline std::string fenced_block(const std::string& text, const std::string& label) {
  const auto at = text.find(label);
  if (at == std::string::npos) return {};
  const auto open = text.find("```", at);
  const auto body = text.find('\n', open) + 1;
  const auto close = text.find("\n```", body);
  return text.substr(body, close - body);
}

inline int count_of(const std::string& text, const std::string& needle) {
  int n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

/// A deterministic judge. Type-system sub-dimensions drop when the decompiled
/// code declares more unsigned values than the original; the judge id shifts
/// every score so that judges disagree a little.
inline std::string heuristic_judgement(const decompeval::ModelConfig& model,
                                       const std::vector<decompeval::ChatMessage>& messages) {
  const auto& user = messages.at(1).content;  // retries append after the first prompt
  const auto original = fenced_block(user, "ORIGINAL source:");
  const auto decompiled = fenced_block(user, "DECOMPILED code:");
  const bool drift = count_of(decompiled, "unsigned") > count_of(original, "unsigned");
  const int shift = static_cast<int>(std::hash<std::string>{}(model.model_id) % 2);
  json scores = json::object();
  for (const auto& sd : decompeval::Rubric::standard().sub_dimensions) {
    int v = 7;
    if (sd.level == decompeval::ReadabilityLevel::TypeSystemFidelity) v = drift ? 3 : 8;
    if (sd.level == decompeval::ReadabilityLevel::StructuralIntelligibility && drift) v = 8;
    scores[sd.key] = v - shift;
  }
  return "```json\n" + json{{"scores", scores}}.dump() + "\n```";
}

}  // namespace testsupport
