#include "decompeval/readability.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace decompeval;
using nlohmann::json;
using testsupport::TempDir;

namespace {

std::map<std::string, int> uniform(int v) {
  std::map<std::string, int> m;
  for (const auto& k : Rubric::standard().keys()) m[k] = v;
  return m;
}

ModelConfig judge(const std::string& id) {
  ModelConfig m;
  m.model_id = id;
  return m;
}

}  // namespace

TEST_SUITE("readability") {
  TEST_CASE("rubric shape") {
    const auto& r = Rubric::standard();
    CHECK(r.sub_dimensions.size() == 18);
    const std::map<ReadabilityLevel, std::size_t> sizes = {
        {ReadabilityLevel::LexicalClarity, 4},       {ReadabilityLevel::StructuralIntelligibility, 4},
        {ReadabilityLevel::TypeSystemFidelity, 3},   {ReadabilityLevel::SemanticTransparency, 4},
        {ReadabilityLevel::ContextualCoherence, 3}};
    for (const auto& [l, n] : sizes) CHECK(r.of_level(l).size() == n);
    auto keys = r.keys();
    std::sort(keys.begin(), keys.end());
    CHECK(std::adjacent_find(keys.begin(), keys.end()) == keys.end());
    int covered = 0;
    for (const auto& b : r.bands) covered += b.high - b.low + 1;
    CHECK(covered == 10);
    for (auto l : kAllLevels) CHECK(readability_level_from_string(to_string(l)) == l);
  }

  TEST_CASE("scorecard means") {
    auto scores = uniform(6);
    for (const auto* sd : Rubric::standard().of_level(ReadabilityLevel::TypeSystemFidelity)) scores[sd->key] = 9;
    scores["variable_naming"] = 2;  // lexical: (2+6+6+6)/4 = 5
    const auto card = make_scorecard("j", scores);
    CHECK(card.level_scores.at(ReadabilityLevel::TypeSystemFidelity) == doctest::Approx(9));
    CHECK(card.level_scores.at(ReadabilityLevel::LexicalClarity) == doctest::Approx(5));
    CHECK(card.overall == doctest::Approx((5 + 6 + 9 + 6 + 6) / 5.0));
    const auto back = json(card).get<JudgeScorecard>();
    CHECK(back.sub_scores == card.sub_scores);
    CHECK(back.overall == doctest::Approx(card.overall));

    const auto w = nominal_level_weights();
    double total = 0;
    for (const auto& [l, v] : w) total += v;
    CHECK(total == doctest::Approx(1.0));
    CHECK(weighted_overall(make_scorecard("j", uniform(4)), w) == doctest::Approx(4.0));
  }

  TEST_CASE("scorecard validation") {
    auto s = uniform(5);
    s.erase("type_safety");
    CHECK_THROWS_AS(make_scorecard("j", s), SchemaValidationError);
    s = uniform(5);
    s["type_safety"] = 11;
    CHECK_THROWS_AS(make_scorecard("j", s), SchemaValidationError);
    s = uniform(5);
    s["made_up"] = 5;
    CHECK_THROWS_AS(make_scorecard("j", s), SchemaValidationError);

    json obj = {{"scores", uniform(5)}};
    obj["scores"]["type_safety"] = 6.5;
    obj["scores"]["extra_key"] = 3;
    const auto card = scorecard_from_json("j", obj);
    CHECK(card.sub_scores.at("type_safety") == 7);
    CHECK(card.warnings.size() == 2);
    obj["scores"]["type_safety"] = 0;
    CHECK_THROWS_AS(scorecard_from_json("j", obj), SchemaValidationError);
  }

  TEST_CASE("judge prompt is deterministic and carries both programs") {
    const auto a = build_judge_prompt("int f(int x) { return x; }", "int sub_1(int a1) { return a1; }");
    CHECK(a == build_judge_prompt("int f(int x) { return x; }", "int sub_1(int a1) { return a1; }"));
    REQUIRE(a.size() == 2);
    for (const auto& k : Rubric::standard().keys()) CHECK(a[0].content.find(k) != std::string::npos);
    CHECK(testsupport::fenced_block(a[1].content, "ORIGINAL source:") == "int f(int x) { return x; }");
    CHECK(testsupport::fenced_block(a[1].content, "DECOMPILED code:") == "int sub_1(int a1) { return a1; }");
    CHECK_THROWS_AS(build_judge_prompt("  ", "x"), std::invalid_argument);
  }

  TEST_CASE("score_pair retries malformed replies and reports missing judges") {
    TempDir dir;
    auto t = std::make_shared<FunctionTransport>([](const ModelConfig& m, const std::vector<ChatMessage>& msgs) {
      if (m.model_id == "never") return std::string("I refuse.");
      if (m.model_id == "late" && msgs.size() == 2) return std::string("```json\n{\"scores\": {}}\n```");
      return testsupport::heuristic_judgement(m, msgs);
    });
    Gateway g(std::make_shared<ReplayStore>(dir.path()), t);
    const auto results = score_pair(g, "int f(int a) { return a; }", "int f(unsigned a) { return a; }",
                                    {judge("ok"), judge("late"), judge("never")});
    REQUIRE(results.size() == 3);
    CHECK(results[0].scorecard.has_value());
    CHECK(results[0].exchanges.size() == 1);
    CHECK(results[1].scorecard.has_value());
    CHECK(results[1].exchanges.size() == 2);
    CHECK_FALSE(results[2].scorecard.has_value());
    CHECK(results[2].exchanges.size() == 3);
    CHECK_FALSE(results[2].error.empty());
    CHECK(results[0].scorecard->level_scores.at(ReadabilityLevel::TypeSystemFidelity) < 5);
  }

  TEST_CASE("cross-judge statistics") {
    const auto c = cell_from_judge_means("IDA", ReadabilityLevel::ContextualCoherence,
                                         {{"a", 7.00}, {"b", 4.95}, {"c", 5.82}});
    CHECK(c.n() == 3);
    CHECK(c.cross_judge_mean == doctest::Approx(5.9233).epsilon(1e-4));
    REQUIRE(c.stddev.has_value());
    CHECK(*c.stddev == doctest::Approx(1.03).epsilon(0.005));
    CHECK_FALSE(cell_from_judge_means("x", std::nullopt, {{"a", 1.0}}).stddev.has_value());
    const double one[] = {3.0};
    CHECK_FALSE(sample_stddev(one).has_value());
  }

  TEST_CASE("aggregate cells average pairs per judge") {
    std::vector<ScoredPair> pairs = {
        {"A", "b1", "j1", make_scorecard("j1", uniform(4))}, {"A", "b2", "j1", make_scorecard("j1", uniform(6))},
        {"A", "b1", "j2", make_scorecard("j2", uniform(8))}, {"B", "b1", "j1", make_scorecard("j1", uniform(2))},
        {"B", "b1", "j2", make_scorecard("j2", uniform(3))},
    };
    const auto cells = aggregate_cells(pairs);
    CHECK(cells.size() == 12);
    const auto& overall_a = cells[5];
    CHECK(overall_a.decompiler == "A");
    CHECK_FALSE(overall_a.level.has_value());
    CHECK(overall_a.judge_means.at("j1") == doctest::Approx(5));
    CHECK(overall_a.cross_judge_mean == doctest::Approx(6.5));
  }

  TEST_CASE("average ranks share ties") {
    const double xs[] = {10, 20, 20, 5};
    CHECK(average_ranks(xs) == std::vector<double>{2, 3.5, 3.5, 1});
  }

  TEST_CASE("spearman equals the rank-difference formula over all permutations of five") {
    std::vector<double> base = {1, 2, 3, 4, 5};
    std::vector<double> perm = base;
    int n = 0;
    do {
      double d2 = 0;
      for (std::size_t i = 0; i < 5; ++i) d2 += (base[i] - perm[i]) * (base[i] - perm[i]);
      const double oracle = 1.0 - 6.0 * d2 / (5.0 * (25.0 - 1.0));
      CHECK(spearman_rho(base, perm) == doctest::Approx(oracle).epsilon(1e-12));
      ++n;
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(n == 120);
  }

  TEST_CASE("spearman errors and keyed form") {
    const double a[] = {1.0};
    CHECK_THROWS_AS(spearman_rho(a, a), std::invalid_argument);
    const double b[] = {1.0, 2.0};
    const double c[] = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(spearman_rho(b, c), std::invalid_argument);
    CHECK(spearman_rho(std::map<std::string, double>{{"x", 1}, {"y", 2}, {"z", 3}},
                       std::map<std::string, double>{{"x", 30}, {"y", 20}, {"z", 10}}) == doctest::Approx(-1));
    CHECK_THROWS_AS(spearman_rho(std::map<std::string, double>{{"x", 1}, {"y", 2}},
                                 std::map<std::string, double>{{"x", 1}, {"w", 2}}),
                    std::invalid_argument);
  }

  TEST_CASE("rank agreement over decompilers every judge scored") {
    std::vector<CellStats> cells = {
        cell_from_judge_means("A", std::nullopt, {{"j1", 5}, {"j2", 6}}),
        cell_from_judge_means("B", std::nullopt, {{"j1", 4}, {"j2", 3}}),
        cell_from_judge_means("C", std::nullopt, {{"j1", 3}, {"j2", 4}}),
        cell_from_judge_means("D", std::nullopt, {{"j1", 9}}),
    };
    const auto agr = rank_agreement(cells);
    REQUIRE(agr.size() == 1);
    CHECK(agr[0].judge_a == "j1");
    CHECK(agr[0].judge_b == "j2");
    CHECK(agr[0].rho == doctest::Approx(0.5));
  }
}
