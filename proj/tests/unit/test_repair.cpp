#include "decompeval/process.hpp"
#include "decompeval/repair.hpp"
#include "decompeval/util.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace decompeval;
using nlohmann::json;
using testsupport::TempDir;

namespace {

const std::vector<std::string> kFixtures = {"single_error", "no_progress", "oscillating", "two_step", "missing_symbol"};

BuildConfig host_o0() { return {Compiler::GCC, OptLevel::O0, DebugInfo::WithDebug, host_arch()}; }

ModelConfig repair_model() {
  ModelConfig m;
  m.model_id = "scripted-repair";
  return m;
}

struct FixtureRun {
  RepairTrace trace;
  int llm_calls = 0;
};

FixtureRun run_fixture(const std::string& name, Gateway& gateway, const fs::path& work, int budget,
                       std::shared_ptr<std::atomic<int>> calls) {
  const auto dir = testsupport::fixtures() / "repair" / name;
  RepairOptions o;
  o.budget = budget;
  o.work_dir = work;
  o.task_ref = name;
  const int before = calls ? calls->load() : 0;
  auto trace = run_repair(BuildHarness(), gateway, repair_model(), read_text_file(dir / "code.c"), host_o0(), o);
  return {std::move(trace), calls ? calls->load() - before : 0};
}

IterationRecord iter(int index, int errors, std::vector<std::string> sigs = {}) {
  IterationRecord r;
  r.index = index;
  r.snapshot_before.total_errors = errors;
  for (const auto& s : sigs) {
    Diagnostic d;
    d.category = ErrorCategory::SyntaxError;
    d.message = s;
    r.diagnostics.push_back(d);
  }
  return r;
}

}  // namespace

TEST_SUITE("repair") {
  TEST_CASE("edit parsing rejects malformed entries") {
    std::vector<std::string> rejected;
    const auto edits = parse_edit_list(json::parse(R"({"edits": [
      {"kind": "replace_string", "needle": "a", "replacement": "b"},
      {"kind": "edit_code_block", "start_line": 3, "end_line": 2, "replacement": ""},
      {"kind": "edit_code_block", "start_line": 1, "end_line": 2, "replacement": "x"},
      {"kind": "rewrite"},
      {"kind": "replace_string", "needle": "", "replacement": "z"},
      7
    ]})"),
                                       rejected);
    REQUIRE(edits.size() == 2);
    CHECK(edits[0].kind == EditKind::ReplaceString);
    CHECK(edits[1].kind == EditKind::EditCodeBlock);
    CHECK(rejected.size() == 4);
    for (const auto& e : edits) CHECK(json(e).get<EditCommand>() == e);
  }

  TEST_CASE("edits apply in order to the edited text") {
    const std::string code = "int a;\nint b;\nint c;\n";
    EditCommand block{EditKind::EditCodeBlock, 2, 2, "", "long b;\nlong bb;"};
    EditCommand repl{EditKind::ReplaceString, 0, 0, "long bb;", "short bb;"};
    auto r = apply_edits(code, {block, repl});
    CHECK(r.failures.empty());
    CHECK(r.text == "int a;\nlong b;\nshort bb;\nint c;\n");

    EditCommand missing{EditKind::ReplaceString, 0, 0, "nowhere", "x"};
    EditCommand twice{EditKind::ReplaceString, 0, 0, "int", "x"};
    EditCommand range{EditKind::EditCodeBlock, 3, 9, "", "x"};
    r = apply_edits(code, {missing, twice, range, repl});
    CHECK(r.text == code);
    REQUIRE(r.failures.size() == 4);
    CHECK(r.failures[0].index == 0);
    CHECK(r.failures[3].index == 3);

    EditCommand del{EditKind::EditCodeBlock, 1, 3, "", ""};
    CHECK(apply_edits(code, {del}).text.empty());
  }

  TEST_CASE("tier classification") {
    CHECK(classify_outcome(true, true, false) == RepairTier::FS);
    CHECK(classify_outcome(true, false, true) == RepairTier::LF);
    CHECK(classify_outcome(false, std::nullopt, true) == RepairTier::CF);
    CHECK_THROWS_AS(classify_outcome(false, false, true), std::invalid_argument);
    CHECK_THROWS_AS(classify_outcome(true, false, false), std::invalid_argument);
    for (auto t : {RepairTier::FS, RepairTier::LF, RepairTier::CF}) CHECK(tier_from_string(to_string(t)) == t);
  }

  TEST_CASE("stuck and oscillating detection") {
    std::vector<IterationRecord> flat;
    for (int i = 1; i <= 5; ++i) flat.push_back(iter(i, 2));
    CHECK(detect_flags(flat) == std::set<RepairFlag>{RepairFlag::Stuck});
    flat.pop_back();
    CHECK(detect_flags(flat).empty());
    CHECK(detect_flags({iter(1, 3)}).empty());

    std::vector<IterationRecord> osc = {iter(1, 1, {"x"}), iter(2, 1, {"y"}), iter(3, 1, {"x"})};
    CHECK(detect_flags(osc).count(RepairFlag::Oscillating) == 1);
    std::vector<IterationRecord> steady = {iter(1, 2, {"x", "y"}), iter(2, 1, {"x"}), iter(3, 0)};
    CHECK(detect_flags(steady).empty());
  }

  TEST_CASE("effort ratio uses the lowest residual") {
    std::vector<IterationRecord> its = {iter(1, 10), iter(2, 4), iter(3, 1), iter(4, 3)};
    const auto o = summarize(its, 4);
    CHECK(o.tier == RepairTier::CF);
    CHECK(o.initial_errors == 10);
    CHECK(o.min_residual_errors == 1);
    CHECK(o.effort_ratio == doctest::Approx(0.9));
    CHECK_FALSE(o.fs_iteration.has_value());
    CHECK(json(o).get<RepairOutcome>().effort_ratio == doctest::Approx(0.9));
  }

  TEST_CASE("success curve and cap") {
    RepairTrace a, b;
    a.iterations = {iter(1, 2), iter(2, 1)};
    a.outcome.fs_iteration = 2;
    a.outcome.tier = RepairTier::FS;
    b.outcome.tier = RepairTier::CF;
    const auto curve = success_curve({a, b}, 3);
    REQUIRE(curve.size() == 3);
    CHECK(curve[0].second == doctest::Approx(0.0));
    CHECK(curve[1].second == doctest::Approx(0.5));
    CHECK(curve[2].second == doctest::Approx(0.5));
    CHECK(tier_at_cap(a, 1) != RepairTier::FS);
    CHECK(tier_at_cap(a, 2) == RepairTier::FS);
  }

  TEST_CASE("repair prompt is deterministic and windowed") {
    std::string code;
    for (int i = 1; i <= 100; ++i) code += "int v" + std::to_string(i) + ";\n";
    Diagnostic d;
    d.line = 50;
    d.category = ErrorCategory::SyntaxError;
    d.message = "expected ';'";
    const auto p = build_repair_prompt(code, {d}, 5);
    CHECK(p == build_repair_prompt(code, {d}, 5));
    REQUIRE(p.size() == 2);
    CHECK(contains(p[1].content, "SyntaxError"));
    CHECK(contains(p[1].content, "int v45;"));
    CHECK(contains(p[1].content, "int v55;"));
    CHECK_FALSE(contains(p[1].content, "int v44;"));
    CHECK_FALSE(contains(p[1].content, "int v56;"));
    CHECK_FALSE(contains(p[1].content, "/tmp"));
  }

  TEST_CASE("scripted fixtures record then replay with identical outcomes") {
    TempDir dir;
    auto calls = std::make_shared<std::atomic<int>>(0);
    std::map<std::string, RepairTrace> recorded;
    {
      for (const auto& name : kFixtures) {
        auto script = testsupport::load_script(testsupport::fixtures() / "repair" / name / "script.json");
        Gateway live(std::make_shared<ReplayStore>(dir / "replay"), testsupport::scripted_model(script, calls));
        auto run = run_fixture(name, live, dir / "rec" / name, 50, calls);
        const auto expect = json::parse(read_text_file(testsupport::fixtures() / "repair" / name / "expect.json"));
        CAPTURE(name);
        const auto& o = run.trace.outcome;
        CHECK(to_string(o.tier) == expect.at("tier").get<std::string>());
        if (expect.contains("max_iterations")) CHECK(o.iterations_used <= expect.at("max_iterations").get<int>());
        if (expect.contains("iterations")) CHECK(o.iterations_used == expect.at("iterations").get<int>());
        if (expect.contains("effort_ratio")) CHECK(o.effort_ratio == doctest::Approx(expect.at("effort_ratio").get<double>()));
        for (const auto& f : expect.value("flags", json::array())) {
          CHECK(o.flags.count(f == "Stuck" ? RepairFlag::Stuck : RepairFlag::Oscillating) == 1);
        }
        if (expect.contains("llm_calls")) CHECK(run.llm_calls == expect.at("llm_calls").get<int>());
        if (expect.contains("stdout")) {
          REQUIRE(run.trace.binary.has_value());
          CHECK(run_process({run.trace.binary->string()}).stdout_text == expect.at("stdout").get<std::string>());
        }
        CHECK(fs::exists(dir / "rec" / name / "outcome.json"));
        CHECK(fs::exists(dir / "rec" / name / "iter-001" / "diagnostics.json"));
        recorded[name] = std::move(run.trace);
      }
    }

    Gateway offline(std::make_shared<ReplayStore>(dir / "replay"));
    std::map<RepairTier, int> at50, at30, replayed30;
    for (const auto& name : kFixtures) {
      CAPTURE(name);
      auto again = run_fixture(name, offline, dir / "play" / name, 50, nullptr).trace;
      const auto& r = recorded[name];
      CHECK(again.outcome.tier == r.outcome.tier);
      CHECK(again.outcome.iterations_used == r.outcome.iterations_used);
      CHECK(again.outcome.flags == r.outcome.flags);
      CHECK(again.final_code == r.final_code);
      ++at50[again.outcome.tier];
      ++at30[tier_at_cap(again, 30)];
      ++replayed30[run_fixture(name, offline, dir / "cap30" / name, 30, nullptr).trace.outcome.tier];
    }
    CHECK(offline.transport_calls() == 0);
    CHECK(offline.replay_hits() > 0);
    CHECK(at50 == at30);
    CHECK(at50 == replayed30);
    CHECK(at50[RepairTier::FS] == 3);
    CHECK(at50[RepairTier::CF] == 2);
  }

  TEST_CASE("outcome.json holds the full trace") {
    TempDir dir;
    const auto script = testsupport::load_script(testsupport::fixtures() / "repair/single_error/script.json");
    Gateway g(std::make_shared<ReplayStore>(dir / "replay"), testsupport::scripted_model(script));
    const auto run = run_fixture("single_error", g, dir / "w", 50, nullptr);
    const auto back = json::parse(read_text_file(dir / "w/outcome.json")).get<RepairTrace>();
    CHECK(back.iterations.size() == run.trace.iterations.size());
    CHECK(back.outcome.tier == RepairTier::FS);
    CHECK(back.iterations[0].action == "llm");
    CHECK(back.iterations[0].exchange_key.has_value());
    CHECK(back.final_code == run.trace.final_code);
  }

  TEST_CASE("model failures are recorded and the loop continues") {
    TempDir dir;
    Gateway offline(std::make_shared<ReplayStore>(dir / "empty"));
    const auto run = run_fixture("single_error", offline, dir / "w", 3, nullptr);
    CHECK(run.trace.outcome.tier == RepairTier::CF);
    CHECK(run.trace.outcome.iterations_used == 3);
    CHECK(run.trace.iterations[0].action == "llm-failed");
    CHECK_FALSE(run.trace.iterations[0].error.empty());
  }
}
