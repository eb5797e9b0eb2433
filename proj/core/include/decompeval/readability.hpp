#pragma once

#include "decompeval/llm.hpp"

#include <json.hpp>

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace decompeval {

enum class ReadabilityLevel {
  LexicalClarity,
  StructuralIntelligibility,
  TypeSystemFidelity,
  SemanticTransparency,
  ContextualCoherence,
};

inline constexpr std::array<ReadabilityLevel, 5> kAllLevels = {
    ReadabilityLevel::LexicalClarity, ReadabilityLevel::StructuralIntelligibility,
    ReadabilityLevel::TypeSystemFidelity, ReadabilityLevel::SemanticTransparency,
    ReadabilityLevel::ContextualCoherence,
};

std::string_view to_string(ReadabilityLevel l);
/// "Lexical Clarity" etc.
std::string_view display_name(ReadabilityLevel l);
std::optional<ReadabilityLevel> readability_level_from_string(std::string_view s);

struct SubDimension {
  std::string key;   // snake_case, the scorecard JSON key
  std::string name;  // human-readable
  ReadabilityLevel level;
  std::string focus;  // question put to the judge
};

struct BandAnchor {
  int low;
  int high;
  std::string description;
};

struct Rubric {
  std::vector<SubDimension> sub_dimensions;  // grouped by level, in level order
  std::vector<BandAnchor> bands;             // descending, covering 1..10

  /// The 5-level, 18-sub-dimension rubric.
  static const Rubric& standard();
  [[nodiscard]] std::vector<std::string> keys() const;
  [[nodiscard]] std::vector<const SubDimension*> of_level(ReadabilityLevel l) const;
};

struct JudgeScorecard {
  std::string judge_id;
  std::map<std::string, int> sub_scores;
  std::map<ReadabilityLevel, double> level_scores;
  double overall = 0.0;
  std::vector<std::string> warnings;
};

void to_json(nlohmann::json& j, const JudgeScorecard& s);
void from_json(const nlohmann::json& j, JudgeScorecard& s);

/// Derives level and overall means. Throws SchemaValidationError when a
/// sub-dimension is missing, unknown, or outside 1..10.
JudgeScorecard make_scorecard(std::string judge_id, std::map<std::string, int> sub_scores,
                              const Rubric& rubric = Rubric::standard());

/// From an extracted `{"scores": {...}}` object. Fractional scores are rounded
/// half-up with a warning; out-of-range scores are rejected.
JudgeScorecard scorecard_from_json(std::string judge_id, const nlohmann::json& object,
                                   const Rubric& rubric = Rubric::standard());

/// Nominal level weights (30/25/20/15/10) for sensitivity runs; the default
/// overall uses equal weights.
std::map<ReadabilityLevel, double> nominal_level_weights();
double weighted_overall(const JudgeScorecard& card, const std::map<ReadabilityLevel, double>& weights);

std::vector<ChatMessage> build_judge_prompt(std::string_view source_code, std::string_view decompiled_code,
                                            const Rubric& rubric = Rubric::standard());

struct JudgeResult {
  std::string judge_id;
  std::optional<JudgeScorecard> scorecard;  // absent = missing judge
  std::string error;
  std::vector<ChatExchange> exchanges;
};

/// One independent conversation per judge. A judge whose reply cannot be
/// extracted and validated within `attempts` tries is reported missing.
std::vector<JudgeResult> score_pair(Gateway& gateway, std::string_view source_code, std::string_view decompiled_code,
                                    const std::vector<ModelConfig>& judges, int attempts = 3,
                                    const Rubric& rubric = Rubric::standard());

double mean(std::span<const double> xs);
/// n-1 denominator; absent for fewer than two values.
std::optional<double> sample_stddev(std::span<const double> xs);

struct ScoredPair {
  std::string decompiler;
  std::string binary_id;
  std::string judge_id;
  JudgeScorecard scorecard;
};

struct CellStats {
  std::string decompiler;
  std::optional<ReadabilityLevel> level;  // absent = overall score
  std::map<std::string, double> judge_means;
  double cross_judge_mean = 0.0;
  std::optional<double> stddev;
  [[nodiscard]] std::size_t n() const { return judge_means.size(); }
};

/// Cross-judge statistics from per-judge means.
CellStats cell_from_judge_means(std::string decompiler, std::optional<ReadabilityLevel> level,
                                std::map<std::string, double> judge_means);

/// One cell per (decompiler, level) plus one overall cell per decompiler, in
/// decompiler-name order. Judge means average over all of that judge's pairs.
std::vector<CellStats> aggregate_cells(const std::vector<ScoredPair>& pairs);

/// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> average_ranks(std::span<const double> xs);

/// Spearman correlation with average ranks for ties. Throws
/// std::invalid_argument for n < 2 or mismatched lengths.
double spearman_rho(std::span<const double> a, std::span<const double> b);
/// Item-keyed form; the item sets must be identical.
double spearman_rho(const std::map<std::string, double>& a, const std::map<std::string, double>& b);

struct RankAgreement {
  std::optional<ReadabilityLevel> level;
  std::string judge_a;
  std::string judge_b;
  double rho = 0.0;
};

/// Pairwise ρ between judges' decompiler rankings, per level, over the
/// decompilers every judge scored.
std::vector<RankAgreement> rank_agreement(const std::vector<CellStats>& cells);

}  // namespace decompeval
