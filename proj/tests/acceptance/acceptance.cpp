// Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any failure.

#include "decompeval/diagnostics.hpp"
#include "decompeval/functionality.hpp"
#include "decompeval/manifest.hpp"
#include "decompeval/orchestrator.hpp"
#include "decompeval/readability.hpp"
#include "decompeval/repair.hpp"
#include "decompeval/util.hpp"

#include "e2e.hpp"
#include "oracles.hpp"
#include "paper_tables.hpp"
#include "support.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <sstream>

using namespace decompeval;
using nlohmann::json;

namespace {

/// Collects the first few failed expectations of one criterion.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 5) notes_.push_back(what);
  }
  [[nodiscard]] bool ok() const { return failures_ == 0; }
  [[nodiscard]] std::string summary() const {
    std::string s = join(notes_, "; ");
    if (failures_ > 5) s += fmt::format("; {} more", failures_ - 5);
    return s;
  }

 private:
  int failures_ = 0;
  std::vector<std::string> notes_;
};

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol + 1e-12; }

void table_arithmetic(Checker& c) {
  const auto first = cell_from_judge_means("IDA", ReadabilityLevel::LexicalClarity, {{"g", 6.58}, {"q", 5.31}, {"m", 5.78}});
  c.expect(near(first.cross_judge_mean, 5.89, 0.005), fmt::format("IDA lexical mean {}", first.cross_judge_mean));

  int cells = 0;
  for (const auto& p : testsupport::published_readability()) {
    const auto level = kAllLevels[static_cast<std::size_t>(p.level)];
    const auto cell = cell_from_judge_means(p.decompiler, level, {{"g", p.judges[0]}, {"q", p.judges[1]}, {"m", p.judges[2]}});
    // printed judge values are themselves rounded to 0.01
    c.expect(near(cell.cross_judge_mean, p.mean, 0.01), fmt::format("{} mean {:.4f}", p.text, cell.cross_judge_mean));
    c.expect(format_readability_cell(p.mean, {p.judges[0], p.judges[1], p.judges[2]}) == p.text, p.text);
    ++cells;
  }
  c.expect(cells == 25, "readability cell count");

  const auto spread = cell_from_judge_means("IDA", ReadabilityLevel::ContextualCoherence, {{"g", 7.00}, {"q", 4.95}, {"m", 5.82}});
  c.expect(spread.stddev && near(*spread.stddev, 1.03, 0.005), "IDA contextual stddev");

  const auto recomp = render_recompilability(testsupport::published_recomp_groups());
  const auto& ida = recomp.records.at(0).at("FS");
  c.expect(near(ida.at("mean").get<double>(), 414.7, 0.05), "IDA FS mean");
  c.expect(near(ida.at("percent").get<double>(), 64.8, 0.05), "IDA FS percent");
  c.expect(recomp.rows.at(0).at(1) == "414.7 64.8%", "IDA FS cell " + recomp.rows.at(0).at(1));
  const auto& total = recomp.records.back().at("FS");
  c.expect(near(total.at("mean").get<double>(), 1700, 1e-9), "Total FS mean");
  c.expect(near(total.at("percent").get<double>(), 53.1, 0.05), "Total FS percent");
  c.expect(recomp.rows.back().at(1) == "1700 53.1%", "Total FS cell " + recomp.rows.back().at(1));
  for (std::size_t i = 0; i < testsupport::published_recompilability().size(); ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      c.expect(recomp.rows[i][k + 1] == testsupport::published_recompilability()[i].cells[k], recomp.rows[i][k + 1]);
    }
  }

  const auto func = render_functionality(testsupport::published_functionality_groups(), "glm");
  const auto& ft = func.records.back();
  const double exact_pct = 100.0 * ft.at("ExactStdout").get<double>() / ft.at("tasks").get<double>();
  c.expect(ft.at("ExactStdout") == 24 && ft.at("tasks") == 1945, "functionality Total counts");
  c.expect(near(exact_pct, 1.2, 0.05), fmt::format("functionality Total exact {:.3f}%", exact_pct));
  c.expect(func.rows.back().at(1) == "24/1945 (1.2%)", "functionality Total cell " + func.rows.back().at(1));
}

void matrix_property(Checker& c) {
  std::vector<DimensionSourceFile> files;
  for (auto d : kAllDimensions) files.push_back({d, std::string(slug(d)) + ".c", {}, {}});
  const auto m = expand_matrix(files, BuildAxes::defaults());
  std::set<std::string> ids;
  for (const auto& e : m.entries) ids.insert(e.binary_id());
  c.expect(m.entries.size() == 640 && ids.size() == 640, fmt::format("{} entries, {} unique", m.entries.size(), ids.size()));

  std::mt19937_64 rng(20261017);
  auto subset = [&](auto all) {
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(std::uniform_int_distribution<std::size_t>(1, all.size())(rng));
    return all;
  };
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<DimensionSourceFile> fs_(files.begin(),
                                         files.begin() + std::uniform_int_distribution<long>(1, 8)(rng));
    BuildAxes axes{subset(std::vector{Compiler::GCC, Compiler::Clang}),
                   subset(std::vector{OptLevel::O0, OptLevel::O1, OptLevel::O2, OptLevel::O3, OptLevel::Os}),
                   subset(std::vector{DebugInfo::WithDebug, DebugInfo::Stripped}),
                   subset(std::vector{Arch::x86, Arch::x64, Arch::ARM32, Arch::ARM64})};
    const auto mm = expand_matrix(fs_, axes);
    std::set<std::tuple<Dimension, BuildConfig>> seen;
    for (const auto& e : mm.entries) seen.insert({e.file.dimension, e.config});
    std::size_t expected = fs_.size() * axes.compilers.size() * axes.optimizations.size() * axes.debug.size() *
                           axes.architectures.size();
    bool full = seen.size() == expected && mm.entries.size() == expected;
    for (const auto& f : fs_)
      for (auto cc : axes.compilers)
        for (auto o : axes.optimizations)
          for (auto d : axes.debug)
            for (auto a : axes.architectures) full = full && seen.count({f.dimension, BuildConfig{cc, o, d, a}}) == 1;
    c.expect(full, fmt::format("trial {} is not the full product", trial));
  }
}

void diagnostics_oracle(Checker& c) {
  const auto dir = testsupport::fixtures() / "diagnostics";
  std::set<ErrorCategory> seen;
  bool link = false;
  int captures = 0;
  for (const auto& l : json::parse(read_text_file(dir / "labels.json"))) {
    ++captures;
    const auto file = l.at("stderr").get<std::string>();
    const auto phase = l.at("phase") == "link" ? Phase::Link : Phase::Compile;
    link = link || phase == Phase::Link;
    const auto diags =
        parse_diagnostics(read_text_file(dir / file), phase, *compiler_from_string(l.at("compiler").get<std::string>()));
    const auto& expected = l.at("expected");
    if (diags.size() != expected.size()) {
      c.expect(false, fmt::format("{}: {} diagnostics, expected {}", file, diags.size(), expected.size()));
      continue;
    }
    for (std::size_t i = 0; i < diags.size(); ++i) {
      const auto& e = expected[i];
      seen.insert(diags[i].category);
      c.expect(to_string(diags[i].category) == e.at("category").get<std::string>(),
               fmt::format("{}#{} category {}", file, i, to_string(diags[i].category)));
      const std::optional<int> line = e.at("line").is_null() ? std::nullopt : std::optional(e.at("line").get<int>());
      c.expect(diags[i].line == line, fmt::format("{}#{} line", file, i));
    }
  }
  c.expect(captures >= 20, fmt::format("only {} captures", captures));
  c.expect(link, "no link-phase capture");
  for (auto cat : kAllCategories) {
    if (cat != ErrorCategory::Uncategorized) c.expect(seen.count(cat) == 1, "unseen " + std::string(to_string(cat)));
  }
  const std::set<ErrorCategory> six = {ErrorCategory::ConflictingTypes, ErrorCategory::IncompatiblePointerType,
                                       ErrorCategory::UnknownType,      ErrorCategory::IncompleteType,
                                       ErrorCategory::VoidValueError,   ErrorCategory::MemberAccessError};
  for (auto cat : kAllCategories) {
    c.expect(type_related(cat) == (six.count(cat) == 1), "type_related " + std::string(to_string(cat)));
  }
}

void verdict_partition(Checker& c) {
  std::mt19937_64 rng(7);
  std::set<ProgramCategory> seen;
  for (int i = 0; i < 10000; ++i) {
    const auto in = testsupport::random_observations(rng);
    const auto v = classify_program(in.orig, in.rec, in.crashed);
    int matched = 0;
    const auto ref = testsupport::reference_category(in.orig, in.rec, in.crashed, &matched);
    c.expect(v.category == ref && v.matched == matched, fmt::format("input {} disagrees with the reference", i));
    c.expect(testsupport::verdict_invariants_partition(v, in.rec.empty()), fmt::format("input {} not a partition", i));
    seen.insert(v.category);
  }
  c.expect(seen.size() == 4, "not every category produced");
}

void similarity_oracle(Checker& c) {
  const auto seqs = testsupport::all_sequences(3, 8);
  c.expect(seqs.size() == 9841, "sequence count");
  std::size_t pairs = 0, bad = 0;
  testsupport::brute_lcs_all_pairs(seqs, [&](std::size_t a, std::size_t b, std::size_t lcs) {
    ++pairs;
    const auto& sa = seqs[a];
    const auto& sb = seqs[b];
    const double expected = sa.empty() && sb.empty()
                                ? 1.0
                                : static_cast<double>(lcs) / static_cast<double>(std::max(sa.size(), sb.size()));
    if (seq_similarity(sa, sb) != expected) ++bad;
  });
  c.expect(pairs == seqs.size() * seqs.size(), "pair count");
  c.expect(bad == 0, fmt::format("{} pairs differ from the LCS oracle", bad));

  std::vector<double> base = {1, 2, 3, 4, 5}, perm = base;
  int n = 0;
  do {
    ++n;
    const double got = spearman_rho(base, perm);
    c.expect(near(got, testsupport::rank_formula_rho(base, perm), 1e-12), "spearman permutation " + std::to_string(n));
  } while (std::next_permutation(perm.begin(), perm.end()));
  c.expect(n == 120, "permutation count");
}

void repair_replay(Checker& c) {
  testsupport::TempDir dir("acc-repair");
  const std::vector<std::string> names = {"single_error", "no_progress", "oscillating", "two_step", "missing_symbol"};
  const BuildConfig cfg{Compiler::GCC, OptLevel::O0, DebugInfo::WithDebug, host_arch()};
  ModelConfig model;
  model.model_id = "scripted-repair";
  auto run = [&](Gateway& g, const std::string& name, int budget, const std::string& tag) {
    RepairOptions o;
    o.budget = budget;
    o.work_dir = dir / tag / name;
    o.task_ref = name;
    return run_repair(BuildHarness(), g, model,
                      read_text_file(testsupport::fixtures() / "repair" / name / "code.c"), cfg, o);
  };

  // Record once through the scripted model, then evaluate purely from the replay store.
  for (const auto& name : names) {
    Gateway rec(std::make_shared<ReplayStore>(dir / "replay"),
                testsupport::scripted_model(testsupport::load_script(testsupport::fixtures() / "repair" / name / "script.json")));
    run(rec, name, 50, "record");
  }
  Gateway offline(std::make_shared<ReplayStore>(dir / "replay"));
  std::map<std::string, RepairTrace> traces;
  std::map<RepairTier, int> at50, at30, cap30;
  for (const auto& name : names) {
    traces[name] = run(offline, name, 50, "b50");
    ++at50[traces[name].outcome.tier];
    ++at30[tier_at_cap(traces[name], 30)];
    ++cap30[run(offline, name, 30, "b30").outcome.tier];
  }
  const auto& single = traces["single_error"].outcome;
  c.expect(single.tier == RepairTier::FS && single.iterations_used <= 2,
           fmt::format("single_error {} after {}", to_string(single.tier), single.iterations_used));
  c.expect(near(single.effort_ratio, 1.0, 1e-12), "single_error effort ratio");
  const auto& stuck = traces["no_progress"].outcome;
  c.expect(stuck.tier == RepairTier::CF && stuck.iterations_used == 50, "no_progress not CF at 50");
  c.expect(stuck.flags.count(RepairFlag::Stuck) == 1, "no_progress not Stuck");
  c.expect(traces["oscillating"].outcome.flags.count(RepairFlag::Oscillating) == 1, "oscillating not flagged");
  c.expect(at50 == at30 && at50 == cap30, "tier counts differ between caps 50 and 30");
  for (const auto& [name, t] : traces) {
    if (t.outcome.fs_iteration) c.expect(*t.outcome.fs_iteration < 30, name + " succeeds late");
  }
  c.expect(offline.transport_calls() == 0, "offline gateway used a transport");
  c.expect(offline.replay_hits() > 0, "no replay hits");
}

void end_to_end(Checker& c) {
  testsupport::E2ESetup setup;
  const auto first = setup.run();
  for (const auto& f : first.failures) c.expect(false, f.task_id + " " + f.stage + ": " + f.error);
  const auto root = setup.run_dir();
  const auto manifest = load_manifest(setup.config.manifest_path);
  c.expect(manifest.cases.size() >= 16, "seed corpus too small");
  c.expect(first.binaries == 32, fmt::format("{} binaries", first.binaries));

  int cf_tasks = 0;
  for (const auto& e : fs::directory_iterator(root / "binaries")) {
    const auto id = e.path().filename().string();
    if (id.rfind("control_flow_", 0) != 0) continue;
    ++cf_tasks;
    auto verdict = [&](const std::string& adapter) {
      return json::parse(read_text_file(root / "tasks" / task_id_for(id, adapter) / "verdicts.json"))
          .at("by_repair_model")
          .at("fixer")
          .get<TaskVerdict>();
    };
    const auto f = verdict("faithful");
    const auto d = verdict("drifted");
    c.expect(f.program.category == ProgramCategory::ExactStdout, id + " faithful program not exact");
    c.expect(f.per_case.at("CF-L3-01").category == ProgramCategory::ExactStdout, id + " faithful nested_if_deep not exact");
    c.expect(d.per_case.at("CF-L3-01").category == ProgramCategory::Fail, id + " drifted nested_if_deep not Fail");
  }
  c.expect(cf_tasks == 4, "control-flow binaries missing");

  double tsf_f = NAN, tsf_d = NAN;
  const auto readability = json::parse(read_text_file(root / "reports/readability.json"));
  for (const auto& r : readability.at("records")) {
    if (r.at("level") != "TypeSystemFidelity") continue;
    (r.at("decompiler") == "faithful" ? tsf_f : tsf_d) = r.at("mean").get<double>();
  }
  c.expect(tsf_d < tsf_f, fmt::format("type-system fidelity drifted {} vs faithful {}", tsf_d, tsf_f));

  const auto reports = testsupport::snapshot_tree(root / "reports");
  const auto again = setup.run(/*replay_only=*/true);
  c.expect(again.transport_calls == 0, "replay run made model calls");
  c.expect(testsupport::snapshot_tree(root / "reports") == reports, "replay run changed the reports");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Checker&)>>> criteria = {
      {"table-arithmetic", table_arithmetic},   {"matrix-property", matrix_property},
      {"diagnostics-oracle", diagnostics_oracle}, {"verdict-partition", verdict_partition},
      {"similarity-oracle", similarity_oracle}, {"repair-replay", repair_replay},
      {"end-to-end", end_to_end},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Checker c;
    const auto start = std::chrono::steady_clock::now();
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.ok()) {
      fmt::print("PASS {} ({:.2f}s)\n", name, secs);
    } else {
      ++failed;
      fmt::print("FAIL {} ({:.2f}s): {}\n", name, secs, c.summary());
    }
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
