#include "decompeval/readability.hpp"

#include "decompeval/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace decompeval {

using nlohmann::json;

std::string_view to_string(ReadabilityLevel l) {
  switch (l) {
    case ReadabilityLevel::LexicalClarity: return "LexicalClarity";
    case ReadabilityLevel::StructuralIntelligibility: return "StructuralIntelligibility";
    case ReadabilityLevel::TypeSystemFidelity: return "TypeSystemFidelity";
    case ReadabilityLevel::SemanticTransparency: return "SemanticTransparency";
    case ReadabilityLevel::ContextualCoherence: return "ContextualCoherence";
  }
  return "?";
}

std::string_view display_name(ReadabilityLevel l) {
  switch (l) {
    case ReadabilityLevel::LexicalClarity: return "Lexical Clarity";
    case ReadabilityLevel::StructuralIntelligibility: return "Structural Intelligibility";
    case ReadabilityLevel::TypeSystemFidelity: return "Type-System Fidelity";
    case ReadabilityLevel::SemanticTransparency: return "Semantic Transparency";
    case ReadabilityLevel::ContextualCoherence: return "Contextual Coherence";
  }
  return "?";
}

std::optional<ReadabilityLevel> readability_level_from_string(std::string_view s) {
  for (auto l : kAllLevels) {
    if (to_string(l) == s || display_name(l) == s) return l;
  }
  return std::nullopt;
}

const Rubric& Rubric::standard() {
  using L = ReadabilityLevel;
  static const Rubric rubric{
      {
          {"variable_naming", "Variable naming", L::LexicalClarity,
           "Do local and global variable names convey the role they play in the original, or are they placeholders such as v1, var_8, local_10?"},
          {"function_naming", "Function naming", L::LexicalClarity,
           "Are functions named after what they do, or left as sub_401000 / FUN_00101139 style addresses?"},
          {"literal_clarity", "Literal clarity", L::LexicalClarity,
           "Are constants, characters and strings shown in their natural form (decimal, char literals, enum names) instead of raw hex or offsets?"},
          {"noise_reduction", "Noise reduction", L::LexicalClarity,
           "Is the output free of casts, temporaries, stack-canary checks and register artifacts that the source does not contain?"},
          {"control_flow_naturalness", "Control-flow naturalness", L::StructuralIntelligibility,
           "Are loops, conditionals and switches recovered as structured statements rather than goto chains and flag variables?"},
          {"function_decomposition", "Function decomposition", L::StructuralIntelligibility,
           "Do function boundaries match the source, without spurious splits, inlined bodies or merged helpers?"},
          {"code_linearization", "Code linearization", L::StructuralIntelligibility,
           "Does the code read top to bottom like the source, without excessive nesting or reordered blocks?"},
          {"redundancy_elimination", "Redundancy elimination", L::StructuralIntelligibility,
           "Are duplicated computations, dead stores and unreachable paths absent?"},
          {"type_precision", "Type precision", L::TypeSystemFidelity,
           "Do scalar types match the source in width and signedness (int vs unsigned int, char vs byte, pointer vs integer)?"},
          {"composite_type_recovery", "Composite-type recovery", L::TypeSystemFidelity,
           "Are structs, unions, arrays and enums recovered with member access instead of pointer arithmetic on raw offsets?"},
          {"type_safety", "Type safety", L::TypeSystemFidelity,
           "Would the code compile without reinterpreting casts, and do function signatures agree with their call sites?"},
          {"comment_quality", "Decompiler-emitted comment quality", L::SemanticTransparency,
           "Do comments the decompiler added help understanding rather than restate addresses or clutter the code?"},
          {"idiom_recognition", "Idiom recognition", L::SemanticTransparency,
           "Are library calls, string operations, division by constants and similar idioms shown as the high-level operation?"},
          {"anomaly_indication", "Anomaly indication", L::SemanticTransparency,
           "Does the output flag what it could not recover (bad instructions, unknown calls) instead of silently emitting wrong code?"},
          {"contract_recovery", "Assertion/contract recovery", L::SemanticTransparency,
           "Are preconditions, assertions and error-handling paths of the source still visible?"},
          {"cross_reference_clarity", "Cross-reference clarity", L::ContextualCoherence,
           "Are references to globals, other functions and data tables resolved to names a reader can follow?"},
          {"module_organization", "Module organization", L::ContextualCoherence,
           "Is the output organised like a translation unit (declarations before use, related code together)?"},
          {"build_compatibility", "Build compatibility", L::ContextualCoherence,
           "How close is the output to something a C compiler accepts with standard headers?"},
      },
      {
          {10, 10, "as readable as the original"},
          {8, 9, "minor issues"},
          {6, 7, "moderate issues"},
          {4, 5, "significant issues"},
          {2, 3, "severe issues"},
          {1, 1, "unusable"},
      },
  };
  return rubric;
}

std::vector<std::string> Rubric::keys() const {
  std::vector<std::string> out;
  for (const auto& s : sub_dimensions) out.push_back(s.key);
  return out;
}

std::vector<const SubDimension*> Rubric::of_level(ReadabilityLevel l) const {
  std::vector<const SubDimension*> out;
  for (const auto& s : sub_dimensions) {
    if (s.level == l) out.push_back(&s);
  }
  return out;
}

void to_json(json& j, const JudgeScorecard& s) {
  json levels = json::object();
  for (const auto& [l, v] : s.level_scores) levels[std::string(to_string(l))] = v;
  j = json{{"judge_id", s.judge_id},
           {"sub_scores", s.sub_scores},
           {"level_scores", levels},
           {"overall", s.overall},
           {"warnings", s.warnings}};
}

void from_json(const json& j, JudgeScorecard& s) {
  s = make_scorecard(j.at("judge_id").get<std::string>(), j.at("sub_scores").get<std::map<std::string, int>>());
  s.warnings = j.value("warnings", std::vector<std::string>{});
}

JudgeScorecard make_scorecard(std::string judge_id, std::map<std::string, int> sub_scores, const Rubric& rubric) {
  std::vector<std::string> problems;
  for (const auto& sd : rubric.sub_dimensions) {
    auto it = sub_scores.find(sd.key);
    if (it == sub_scores.end()) {
      problems.push_back("missing sub-dimension '" + sd.key + "'");
    } else if (it->second < 1 || it->second > 10) {
      problems.push_back("sub-dimension '" + sd.key + "' = " + std::to_string(it->second) + " outside 1..10");
    }
  }
  for (const auto& [k, v] : sub_scores) {
    const auto keys = rubric.keys();
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) problems.push_back("unknown sub-dimension '" + k + "'");
  }
  if (!problems.empty()) throw SchemaValidationError(std::string(kScorecardSchema), problems);

  JudgeScorecard card;
  card.judge_id = std::move(judge_id);
  card.sub_scores = std::move(sub_scores);
  double sum_levels = 0.0;
  for (auto l : kAllLevels) {
    const auto subs = rubric.of_level(l);
    double sum = 0.0;
    for (const auto* sd : subs) sum += card.sub_scores.at(sd->key);
    card.level_scores[l] = sum / static_cast<double>(subs.size());
    sum_levels += card.level_scores[l];
  }
  card.overall = sum_levels / static_cast<double>(kAllLevels.size());
  return card;
}

JudgeScorecard scorecard_from_json(std::string judge_id, const json& object, const Rubric& rubric) {
  auto problems = schema_problems(object, kScorecardSchema);
  if (!problems.empty()) throw SchemaValidationError(std::string(kScorecardSchema), problems);
  std::map<std::string, int> scores;
  std::vector<std::string> warnings;
  const auto keys = rubric.keys();
  for (const auto& [k, v] : object["scores"].items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      warnings.push_back("ignored unknown sub-dimension '" + k + "'");
      continue;
    }
    const double raw = v.get<double>();
    if (!(raw >= 1.0 && raw <= 10.0)) {
      problems.push_back("sub-dimension '" + k + "' = " + v.dump() + " outside 1..10");
      continue;
    }
    const int rounded = static_cast<int>(std::floor(raw + 0.5));
    if (static_cast<double>(rounded) != raw) {
      warnings.push_back("sub-dimension '" + k + "' = " + v.dump() + " rounded to " + std::to_string(rounded));
    }
    scores[k] = rounded;
  }
  if (!problems.empty()) throw SchemaValidationError(std::string(kScorecardSchema), problems);
  auto card = make_scorecard(std::move(judge_id), std::move(scores), rubric);
  card.warnings = std::move(warnings);
  return card;
}

std::map<ReadabilityLevel, double> nominal_level_weights() {
  return {{ReadabilityLevel::LexicalClarity, 0.30},
          {ReadabilityLevel::StructuralIntelligibility, 0.25},
          {ReadabilityLevel::TypeSystemFidelity, 0.20},
          {ReadabilityLevel::SemanticTransparency, 0.15},
          {ReadabilityLevel::ContextualCoherence, 0.10}};
}

double weighted_overall(const JudgeScorecard& card, const std::map<ReadabilityLevel, double>& weights) {
  double total_w = 0.0;
  double sum = 0.0;
  for (const auto& [l, w] : weights) {
    if (w < 0.0) throw std::invalid_argument("negative level weight");
    sum += w * card.level_scores.at(l);
    total_w += w;
  }
  if (total_w <= 0.0) throw std::invalid_argument("level weights sum to zero");
  return sum / total_w;
}

std::vector<ChatMessage> build_judge_prompt(std::string_view source_code, std::string_view decompiled_code,
                                            const Rubric& rubric) {
  if (trim(source_code).empty() || trim(decompiled_code).empty()) {
    throw std::invalid_argument("build_judge_prompt: source and decompiled code must be non-empty");
  }
  std::string sys;
  sys += "You are a strict reviewer of decompiler output. Score how readable the DECOMPILED code is for a reverse "
         "engineer, relative to the ORIGINAL source it was compiled from. Judge each sub-dimension independently.\n\n";
  sys += "Scale: integers 1 to 10, anchored to these bands:\n";
  for (const auto& b : rubric.bands) {
    sys += b.low == b.high ? "- " + std::to_string(b.low) : "- " + std::to_string(b.low) + "-" + std::to_string(b.high);
    sys += ": " + b.description + "\n";
  }
  sys += "\nRubric (5 levels, " + std::to_string(rubric.sub_dimensions.size()) + " sub-dimensions):\n";
  for (auto l : kAllLevels) {
    sys += "\n## " + std::string(display_name(l)) + "\n";
    for (const auto* sd : rubric.of_level(l)) {
      sys += "- " + sd->key + " (" + sd->name + "): " + sd->focus + "\n";
    }
  }
  sys += "\nReply with exactly one JSON object in a ```json fenced block, of the form\n";
  sys += "{\"scores\": {";
  bool first = true;
  for (const auto& sd : rubric.sub_dimensions) {
    if (!first) sys += ", ";
    first = false;
    sys += "\"" + sd.key + "\": <1-10>";
  }
  sys += "}}\nEvery key is required. Do not add commentary outside the block.\n";

  std::string user;
  user += "ORIGINAL source:\n```c\n" + std::string(source_code);
  if (!user.ends_with("\n")) user += "\n";
  user += "```\n\nDECOMPILED code:\n```c\n" + std::string(decompiled_code);
  if (!user.ends_with("\n")) user += "\n";
  user += "```\n";
  return {{"system", sys}, {"user", user}};
}

std::vector<JudgeResult> score_pair(Gateway& gateway, std::string_view source_code, std::string_view decompiled_code,
                                    const std::vector<ModelConfig>& judges, int attempts, const Rubric& rubric) {
  if (judges.empty()) throw std::invalid_argument("score_pair: at least one judge required");
  if (attempts < 1) throw std::invalid_argument("score_pair: attempts must be >= 1");
  const auto base = build_judge_prompt(source_code, decompiled_code, rubric);
  std::vector<JudgeResult> results;
  for (const auto& judge : judges) {
    JudgeResult r;
    r.judge_id = judge.model_id;
    auto messages = base;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
      ChatExchange ex;
      try {
        ex = gateway.complete(judge, messages);
      } catch (const std::exception& e) {
        r.error = e.what();
        break;
      }
      r.exchanges.push_back(ex);
      try {
        r.scorecard = scorecard_from_json(judge.model_id, extract_json(ex.response_text, kScorecardSchema), rubric);
        r.error.clear();
        break;
      } catch (const std::exception& e) {
        r.error = e.what();
        messages.push_back({"assistant", ex.response_text});
        messages.push_back({"user", std::string("Your reply could not be used: ") + e.what() +
                                        "\nReply again with only the ```json block containing every required key."});
      }
    }
    results.push_back(std::move(r));
  }
  return results;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty set");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

std::optional<double> sample_stddev(std::span<const double> xs) {
  if (xs.size() < 2) return std::nullopt;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

CellStats cell_from_judge_means(std::string decompiler, std::optional<ReadabilityLevel> level,
                                std::map<std::string, double> judge_means) {
  if (judge_means.empty()) throw std::invalid_argument("cell needs at least one judge");
  CellStats c;
  c.decompiler = std::move(decompiler);
  c.level = level;
  c.judge_means = std::move(judge_means);
  std::vector<double> v;
  for (const auto& [j, m] : c.judge_means) v.push_back(m);
  c.cross_judge_mean = mean(v);
  c.stddev = sample_stddev(v);
  return c;
}

std::vector<CellStats> aggregate_cells(const std::vector<ScoredPair>& pairs) {
  // decompiler -> judge -> (per-level sums, overall sum, count)
  struct Acc {
    std::map<ReadabilityLevel, double> level_sum;
    double overall_sum = 0.0;
    int n = 0;
  };
  std::map<std::string, std::map<std::string, Acc>> acc;
  for (const auto& p : pairs) {
    auto& a = acc[p.decompiler][p.judge_id];
    for (const auto& [l, v] : p.scorecard.level_scores) a.level_sum[l] += v;
    a.overall_sum += p.scorecard.overall;
    ++a.n;
  }
  std::vector<CellStats> cells;
  for (const auto& [dec, judges] : acc) {
    for (auto l : kAllLevels) {
      std::map<std::string, double> means;
      for (const auto& [j, a] : judges) means[j] = a.level_sum.at(l) / a.n;
      cells.push_back(cell_from_judge_means(dec, l, std::move(means)));
    }
    std::map<std::string, double> means;
    for (const auto& [j, a] : judges) means[j] = a.overall_sum / a.n;
    cells.push_back(cell_from_judge_means(dec, std::nullopt, std::move(means)));
  }
  return cells;
}

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman_rho(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman_rho: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("spearman_rho: need at least two items");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double ma = mean(ra);
  const double mb = mean(rb);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

double spearman_rho(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
  std::vector<double> va, vb;
  if (a.size() != b.size()) throw std::invalid_argument("spearman_rho: item sets differ");
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    if (it == b.end()) throw std::invalid_argument("spearman_rho: item '" + k + "' missing from second ranking");
    va.push_back(v);
    vb.push_back(it->second);
  }
  return spearman_rho(va, vb);
}

std::vector<RankAgreement> rank_agreement(const std::vector<CellStats>& cells) {
  std::vector<std::optional<ReadabilityLevel>> levels(kAllLevels.begin(), kAllLevels.end());
  levels.push_back(std::nullopt);
  std::vector<RankAgreement> out;
  for (const auto& level : levels) {
    std::map<std::string, std::map<std::string, double>> by_judge;  // judge -> decompiler -> mean
    for (const auto& c : cells) {
      if (c.level != level) continue;
      for (const auto& [j, m] : c.judge_means) by_judge[j][c.decompiler] = m;
    }
    for (auto ia = by_judge.begin(); ia != by_judge.end(); ++ia) {
      for (auto ib = std::next(ia); ib != by_judge.end(); ++ib) {
        std::map<std::string, double> a, b;
        for (const auto& [dec, m] : ia->second) {
          if (auto it = ib->second.find(dec); it != ib->second.end()) {
            a[dec] = m;
            b[dec] = it->second;
          }
        }
        if (a.size() < 2) continue;
        out.push_back({level, ia->first, ib->first, spearman_rho(a, b)});
      }
    }
  }
  return out;
}

}  // namespace decompeval
