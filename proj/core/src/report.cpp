#include "decompeval/orchestrator.hpp"

#include "decompeval/util.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numeric>

namespace decompeval {

using nlohmann::json;

namespace {

constexpr std::string_view kMissing = "–";

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string grouped(double value, int decimals) {
  std::string s = fmt::format("{:.{}f}", value, decimals);
  const auto dot = s.find('.');
  std::size_t end = dot == std::string::npos ? s.size() : dot;
  const std::size_t begin = s[0] == '-' ? 1 : 0;
  for (std::size_t i = end; i > begin + 3; i -= 3) s.insert(i - 3, ",");
  return s;
}

std::string two(double v) { return fmt::format("{:.2f}", v); }

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string ReportTable::to_csv() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_field(cells[i]);
    }
    out += '\n';
  };
  line(columns);
  for (const auto& r : rows) line(r);
  return out;
}

json ReportTable::to_json() const {
  return json{{"id", id}, {"title", title}, {"columns", columns}, {"rows", rows}, {"records", records}};
}

std::string format_compact(double value) {
  std::string s = fmt::format("{:.1f}", value);
  if (s.size() > 2 && s.compare(s.size() - 2, 2, ".0") == 0) s.resize(s.size() - 2);
  if (s == "-0") s = "0";
  return s;
}

std::string format_mean_percent(double mean, double denominator) {
  if (denominator <= 0) throw std::invalid_argument("format_mean_percent: denominator must be positive");
  return format_compact(mean) + " " + format_compact(100.0 * mean / denominator) + "%";
}

std::string format_count_fraction(long count, long total) {
  const double pct = total > 0 ? 100.0 * static_cast<double>(count) / static_cast<double>(total) : 0.0;
  return fmt::format("{}/{} ({:.1f}%)", count, total, pct);
}

std::string format_rate(double rate) { return fmt::format("{:.1f}%", 100.0 * rate); }

std::string format_readability_cell(double mean, const std::vector<std::optional<double>>& judge_means) {
  std::vector<std::string> parts;
  for (const auto& m : judge_means) parts.push_back(m ? two(*m) : std::string(kMissing));
  return two(mean) + " (" + join(parts, "/") + ")";
}

ReportTable render_recompilability(const std::vector<RecompGroup>& groups) {
  ReportTable t;
  t.id = "recompilability";
  t.title = "Recompilability overview";
  t.columns = {"Decompiler", "FS", "LF", "CF", "FS counts", "LF counts", "CF counts", "Tasks"};
  if (groups.empty()) return t;

  std::set<std::string> models;
  for (const auto& [m, c] : groups.front().by_model) models.insert(m);
  if (models.empty()) throw std::invalid_argument("render_recompilability: group without repair models");
  for (const auto& g : groups) {
    if (!counts_for_recompilability(g.unit)) {
      throw std::invalid_argument("render_recompilability: " + g.decompiler + " is function-granularity");
    }
    std::set<std::string> ms;
    for (const auto& [m, c] : g.by_model) {
      ms.insert(m);
      if (c.total() != g.denominator) {
        throw std::invalid_argument(fmt::format("render_recompilability: {} / {} has {} outcomes, denominator {}",
                                                g.decompiler, m, c.total(), g.denominator));
      }
    }
    if (ms != models) throw std::invalid_argument("render_recompilability: groups disagree on repair models");
    if (g.denominator <= 0) throw std::invalid_argument("render_recompilability: empty group " + g.decompiler);
  }

  auto add_row = [&](const std::string& name, const std::map<std::string, TierCounts>& by_model, int denominator) {
    const double n = static_cast<double>(by_model.size());
    std::vector<std::string> row{name};
    json rec{{"decompiler", name}, {"denominator", denominator}, {"models", json::object()}};
    std::array<std::vector<std::string>, 3> counts;
    std::array<double, 3> sums{0, 0, 0};
    for (const auto& [m, c] : by_model) {
      const std::array<int, 3> v{c.fs, c.lf, c.cf};
      for (int i = 0; i < 3; ++i) {
        sums[i] += v[i];
        counts[i].push_back(std::to_string(v[i]));
      }
      rec["models"][m] = {{"FS", c.fs}, {"LF", c.lf}, {"CF", c.cf}};
    }
    const char* names[] = {"FS", "LF", "CF"};
    for (int i = 0; i < 3; ++i) {
      row.push_back(format_mean_percent(sums[i] / n, denominator));
      rec[names[i]] = {{"mean", sums[i] / n}, {"percent", 100.0 * sums[i] / n / denominator}};
    }
    for (int i = 0; i < 3; ++i) row.push_back(join(counts[i], "/"));
    row.push_back(std::to_string(denominator));
    t.rows.push_back(std::move(row));
    t.records.push_back(std::move(rec));
  };

  std::map<std::string, TierCounts> total;
  int total_denominator = 0;
  for (const auto& g : groups) {
    add_row(g.decompiler, g.by_model, g.denominator);
    total_denominator += g.denominator;
    for (const auto& [m, c] : g.by_model) {
      total[m].fs += c.fs;
      total[m].lf += c.lf;
      total[m].cf += c.cf;
    }
  }
  add_row("Total", total, total_denominator);
  return t;
}

ReportTable render_functionality(const std::vector<FunctionalityGroup>& groups, const std::string& repair_model) {
  ReportTable t;
  t.id = repair_model.empty() ? "functionality" : "functionality_" + sanitize_filename(repair_model);
  t.title = repair_model.empty() ? "Functionality evaluation overview"
                                 : "Functionality evaluation overview (" + repair_model + ")";
  t.columns = {"Decompiler",          "Exact Stdout", "Partial",           "Fail",      "Unsupported",
               "Function Evidence", "I/O Match",    "Instruction Evidence", "Similarity"};

  struct Acc {
    long n = 0;
    std::map<ProgramCategory, long> cats;
    long fn_evidence = 0;
    long io_matched = 0;
    long io_total = 0;
    long ins_evidence = 0;
    double similarity_sum = 0.0;
  };
  auto add = [](Acc& a, const TaskVerdict& v) {
    ++a.n;
    ++a.cats[v.program.category];
    if (v.function_level && v.function_level->io.evidence_available) {
      ++a.fn_evidence;
      a.io_matched += v.function_level->io.matched;
      a.io_total += v.function_level->io.total;
    }
    if (v.instruction_level && v.instruction_level->evidence_available) {
      ++a.ins_evidence;
      a.similarity_sum += v.instruction_level->similarity;
    }
  };
  auto emit = [&](const std::string& name, const Acc& a) {
    std::vector<std::string> row{name};
    json rec{{"decompiler", name}, {"tasks", a.n}};
    for (auto c : {ProgramCategory::ExactStdout, ProgramCategory::Partial, ProgramCategory::Fail,
                   ProgramCategory::Unsupported}) {
      const long k = a.cats.count(c) ? a.cats.at(c) : 0;
      row.push_back(format_count_fraction(k, a.n));
      rec[std::string(to_string(c))] = k;
    }
    row.push_back(format_count_fraction(a.fn_evidence, a.n));
    const bool has_io = a.io_total > 0;
    const double io = has_io ? static_cast<double>(a.io_matched) / static_cast<double>(a.io_total) : 0.0;
    row.push_back(has_io ? format_rate(io) : std::string(kMissing));
    row.push_back(format_count_fraction(a.ins_evidence, a.n));
    const bool has_sim = a.ins_evidence > 0;
    const double sim = has_sim ? a.similarity_sum / static_cast<double>(a.ins_evidence) : 0.0;
    row.push_back(has_sim ? format_rate(sim) : std::string(kMissing));
    rec["function_evidence"] = a.fn_evidence;
    rec["io_matched"] = a.io_matched;
    rec["io_total"] = a.io_total;
    rec["io_match_rate"] = has_io ? json(io) : json(nullptr);
    rec["instruction_evidence"] = a.ins_evidence;
    rec["similarity"] = has_sim ? json(sim) : json(nullptr);
    if (!repair_model.empty()) rec["denominator_source"] = "FS tasks of repair model " + repair_model;
    t.rows.push_back(std::move(row));
    t.records.push_back(std::move(rec));
  };

  Acc total;
  bool any = false;
  for (const auto& g : groups) {
    if (g.verdicts.empty()) continue;
    if (!counts_for_recompilability(g.unit)) {
      throw std::invalid_argument("render_functionality: " + g.decompiler + " is function-granularity");
    }
    Acc a;
    for (const auto& v : g.verdicts) {
      add(a, v);
      add(total, v);
    }
    emit(g.decompiler, a);
    any = true;
  }
  if (any) emit("Total", total);
  return t;
}

ReportTable render_readability(const std::vector<CellStats>& cells, const std::vector<std::string>& judge_order) {
  ReportTable t;
  t.id = "readability";
  t.title = "Readability overview";
  t.columns = {"Decompiler"};
  for (auto l : kAllLevels) t.columns.emplace_back(display_name(l));
  t.columns.emplace_back("Overall");

  std::vector<std::string> decompilers;
  for (const auto& c : cells) {
    if (std::find(decompilers.begin(), decompilers.end(), c.decompiler) == decompilers.end()) {
      decompilers.push_back(c.decompiler);
    }
  }
  std::vector<std::optional<ReadabilityLevel>> levels(kAllLevels.begin(), kAllLevels.end());
  levels.push_back(std::nullopt);
  for (const auto& d : decompilers) {
    std::vector<std::string> row{d};
    for (const auto& level : levels) {
      auto it = std::find_if(cells.begin(), cells.end(),
                             [&](const CellStats& c) { return c.decompiler == d && c.level == level; });
      if (it == cells.end() || it->judge_means.empty()) {
        row.emplace_back(kMissing);
        continue;
      }
      std::vector<std::optional<double>> per_judge;
      for (const auto& j : judge_order) {
        auto m = it->judge_means.find(j);
        per_judge.push_back(m == it->judge_means.end() ? std::nullopt : std::optional(m->second));
      }
      row.push_back(format_readability_cell(it->cross_judge_mean, per_judge));
      json jm = json::object();
      for (const auto& [k, v] : it->judge_means) jm[k] = v;
      t.records.push_back({{"decompiler", d},
                           {"level", level ? json(to_string(*level)) : json("overall")},
                           {"mean", it->cross_judge_mean},
                           {"judge_means", jm},
                           {"stddev", nullable(it->stddev)}});
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

ReportTable render_readability_spread(const std::vector<CellStats>& cells) {
  ReportTable t;
  t.id = "readability_spread";
  t.title = "Cross-judge standard deviation";
  t.columns = {"Decompiler", "Level", "Judges", "Stddev"};
  for (const auto& c : cells) {
    const std::string level = c.level ? std::string(display_name(*c.level)) : "Overall";
    t.rows.push_back({c.decompiler, level, std::to_string(c.n()), c.stddev ? two(*c.stddev) : std::string(kMissing)});
    t.records.push_back({{"decompiler", c.decompiler}, {"level", level}, {"judges", c.n()}, {"stddev", nullable(c.stddev)}});
  }
  return t;
}

ReportTable render_rank_agreement(const std::vector<RankAgreement>& rows) {
  ReportTable t;
  t.id = "readability_rank_agreement";
  t.title = "Pairwise Spearman rank agreement between judges";
  t.columns = {"Level", "Judge A", "Judge B", "rho"};
  for (const auto& r : rows) {
    const std::string level = r.level ? std::string(display_name(*r.level)) : "Overall";
    const bool defined = std::isfinite(r.rho);
    t.rows.push_back({level, r.judge_a, r.judge_b, defined ? fmt::format("{:.3f}", r.rho) : std::string(kMissing)});
    t.records.push_back({{"level", level},
                         {"judge_a", r.judge_a},
                         {"judge_b", r.judge_b},
                         {"rho", defined ? json(r.rho) : json(nullptr)}});
  }
  return t;
}

ReportTable render_effort(const std::map<std::string, std::vector<RepairOutcome>>& outcomes) {
  ReportTable t;
  t.id = "repair_effort";
  t.title = "Effective repair effort inside failure cases";
  t.columns = {"Decompiler", "Tier", "Tasks", "Initial errors", "Removed", "Effort ratio"};
  for (const auto& [decompiler, list] : outcomes) {
    for (auto tier : {RepairTier::LF, RepairTier::CF}) {
      long tasks = 0, initial = 0, removed = 0;
      for (const auto& o : list) {
        if (o.tier != tier) continue;
        ++tasks;
        initial += o.initial_errors;
        removed += o.initial_errors - o.min_residual_errors;
      }
      if (initial <= 0) continue;
      const double ratio = static_cast<double>(removed) / static_cast<double>(initial);
      t.rows.push_back({decompiler, std::string(to_string(tier)), std::to_string(tasks), std::to_string(initial),
                        std::to_string(removed), fmt::format("{:.3f}", ratio)});
      t.records.push_back({{"decompiler", decompiler},
                           {"tier", to_string(tier)},
                           {"tasks", tasks},
                           {"initial", initial},
                           {"removed", removed},
                           {"effort_ratio", ratio}});
    }
  }
  return t;
}

ReportTable render_efficiency(const std::vector<EfficiencyRow>& rows) {
  ReportTable t;
  t.id = "efficiency";
  t.title = "Efficiency summary";
  t.columns = {"LLM", "Stage", "Token (M)", "Avg. Token (K)", "Med. Token (K)", "Avg. Time (s)", "Med Time (s)"};
  for (const auto& r : rows) {
    json rec{{"model", r.model}, {"stage", r.stage}};
    if (r.tokens) {
      const auto& u = *r.tokens;
      t.rows.push_back({r.model, r.stage, grouped(static_cast<double>(u.total_tokens) / 1e6, 1),
                        grouped(u.avg_tokens / 1e3, 1), grouped(static_cast<double>(u.median_tokens) / 1e3, 1),
                        grouped(u.avg_time_s, 1), grouped(u.median_time_s, 1)});
      rec.update({{"tasks", u.tasks},
                  {"total_tokens", u.total_tokens},
                  {"avg_tokens", u.avg_tokens},
                  {"median_tokens", u.median_tokens},
                  {"avg_time_s", u.avg_time_s},
                  {"median_time_s", u.median_time_s}});
    } else {
      std::vector<double> s = r.task_seconds;
      std::sort(s.begin(), s.end());
      const double avg = s.empty() ? 0.0 : std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
      const double med = s.empty() ? 0.0 : s[(s.size() - 1) / 2];
      t.rows.push_back({r.model, r.stage, "-", "-", "-", grouped(avg, 1), grouped(med, 1)});
      rec.update({{"tasks", s.size()}, {"avg_time_s", avg}, {"median_time_s", med}});
    }
    t.records.push_back(std::move(rec));
  }
  return t;
}

ReportTable render_success_curve(const std::map<std::string, std::vector<RepairTrace>>& traces_by_model, int budget) {
  ReportTable t;
  t.id = "repair_success_curve";
  t.title = "Cumulative full-success share by iteration";
  t.columns = {"Iteration"};
  std::vector<std::vector<std::pair<int, double>>> curves;
  for (const auto& [model, traces] : traces_by_model) {
    t.columns.push_back(model);
    curves.push_back(success_curve(traces, budget));
  }
  for (int k = 1; k <= budget; ++k) {
    std::vector<std::string> row{std::to_string(k)};
    json rec{{"iteration", k}};
    std::size_t i = 0;
    for (const auto& [model, traces] : traces_by_model) {
      const double v = curves[i++][static_cast<std::size_t>(k - 1)].second;
      row.push_back(format_rate(v));
      rec[model] = v;
    }
    t.rows.push_back(std::move(row));
    t.records.push_back(std::move(rec));
  }
  return t;
}

ReportTable render_error_categories(const std::vector<Diagnostic>& corpus) {
  ReportTable t;
  t.id = "error_categories";
  t.title = "Initial compile error categories";
  t.columns = {"Category", "Share"};
  if (corpus.empty()) return t;
  const auto shares = category_shares(corpus);
  for (auto c : kAllCategories) {
    const double v = shares.count(c) ? shares.at(c) : 0.0;
    t.rows.push_back({std::string(to_string(c)), format_rate(v)});
    t.records.push_back({{"category", to_string(c)}, {"share", v}, {"type_related", type_related(c)}});
  }
  const double tr = type_related_share(shares);
  t.rows.push_back({"Type-related", format_rate(tr)});
  t.records.push_back({{"category", "type-related"}, {"share", tr}});
  return t;
}

ReportTable render_driver_coverage(const std::map<Dimension, double>& coverage) {
  ReportTable t;
  t.id = "driver_coverage";
  t.title = "Driver coverage of expected observations";
  t.columns = {"Dimension", "Coverage"};
  for (const auto& [d, v] : coverage) {
    t.rows.push_back({std::string(to_string(d)), format_rate(v)});
    t.records.push_back({{"dimension", to_string(d)}, {"coverage", v}});
  }
  return t;
}

namespace {

json read_json(const fs::path& p) { return json::parse(read_text_file(p)); }

std::vector<UsageRecord> usage_of(const json& exchanges) {
  std::vector<UsageRecord> out;
  for (const auto& e : exchanges) out.push_back(e.get<ChatExchange>().usage);
  return out;
}

}  // namespace

std::vector<ReportTable> render_run(const fs::path& run_dir, const RunConfig& config) {
  struct TaskData {
    std::string id;
    std::string decompiler;
    AdapterUnit unit = AdapterUnit::WholeProgram;
    fs::path dir;
  };
  std::vector<TaskData> tasks;
  if (fs::exists(run_dir / "tasks")) {
    for (const auto& e : fs::directory_iterator(run_dir / "tasks")) {
      if (!fs::exists(e.path() / "task.json")) continue;
      const auto j = read_json(e.path() / "task.json");
      TaskData t;
      t.id = j.at("task_id").get<std::string>();
      t.decompiler = j.at("decompiler").get<std::string>();
      t.unit = j.at("unit").get<std::string>() == "function" ? AdapterUnit::FunctionGranularity
                                                             : AdapterUnit::WholeProgram;
      t.dir = e.path();
      tasks.push_back(std::move(t));
    }
  }
  std::sort(tasks.begin(), tasks.end(), [](const TaskData& a, const TaskData& b) { return a.id < b.id; });

  std::vector<std::string> decompilers;
  std::map<std::string, AdapterUnit> units;
  for (const auto& a : config.adapters) {
    decompilers.push_back(a.name);
    units[a.name] = a.unit;
  }
  std::vector<std::string> judge_ids;
  for (const auto& j : config.judges) judge_ids.push_back(j.model_id);

  std::vector<ScoredPair> pairs;
  std::map<std::string, std::vector<std::vector<UsageRecord>>> judge_usage;
  std::map<std::string, std::map<std::string, std::optional<RepairTrace>>> traces;  // task -> model -> trace
  std::map<std::string, std::vector<RepairTrace>> traces_by_model;
  std::map<std::string, std::vector<std::vector<UsageRecord>>> repair_usage;
  std::map<std::string, std::vector<double>> run_seconds;
  std::map<std::string, json> verdicts;
  std::vector<Diagnostic> initial_diagnostics;

  for (const auto& t : tasks) {
    for (const auto& judge : config.judges) {
      const auto p = t.dir / "readability" / (sanitize_filename(judge.model_id) + ".json");
      if (!fs::exists(p)) continue;
      const auto j = read_json(p);
      judge_usage[judge.model_id].push_back(usage_of(j.value("exchanges", json::array())));
      if (!j.at("scorecard").is_null()) {
        pairs.push_back({t.decompiler, t.id, judge.model_id, j.at("scorecard").get<JudgeScorecard>()});
      }
    }
    if (!counts_for_recompilability(t.unit)) continue;
    for (const auto& m : config.repair_models) {
      const auto slug = sanitize_filename(m.model_id);
      const auto p = t.dir / "repair" / slug / "outcome.json";
      if (!fs::exists(p)) {
        traces[t.id][m.model_id] = std::nullopt;
        continue;
      }
      auto trace = read_json(p).get<RepairTrace>();
      repair_usage[m.model_id].push_back(trace.usage);
      if (!trace.iterations.empty()) {
        for (const auto& d : trace.iterations.front().diagnostics) {
          if (d.severity == Severity::Error) initial_diagnostics.push_back(d);
        }
      }
      traces_by_model[m.model_id].push_back(trace);
      traces[t.id][m.model_id] = std::move(trace);
      const auto run = t.dir / "traces" / ("recomp." + slug + ".run.json");
      if (fs::exists(run)) {
        run_seconds[m.model_id].push_back(read_json(run).value("duration_ms", 0.0) / 1000.0);
      }
    }
    if (fs::exists(t.dir / "verdicts.json")) verdicts[t.id] = read_json(t.dir / "verdicts.json");
  }

  std::vector<ReportTable> out;

  // Readability.
  if (!pairs.empty()) {
    auto cells = aggregate_cells(pairs);
    std::stable_sort(cells.begin(), cells.end(), [&](const CellStats& a, const CellStats& b) {
      auto pos = [&](const std::string& d) { return std::find(decompilers.begin(), decompilers.end(), d); };
      return pos(a.decompiler) < pos(b.decompiler);
    });
    out.push_back(render_readability(cells, judge_ids));
    out.push_back(render_readability_spread(cells));
    if (judge_ids.size() > 1) out.push_back(render_rank_agreement(rank_agreement(cells)));
  }

  // Recompilability. A task counts only when every repair model has an outcome.
  std::vector<RecompGroup> groups;
  json excluded = json::array();
  std::map<std::string, std::vector<RepairOutcome>> effort;
  for (const auto& d : decompilers) {
    if (!counts_for_recompilability(units[d])) continue;
    RecompGroup g;
    g.decompiler = d;
    for (const auto& m : config.repair_models) g.by_model[m.model_id];
    for (const auto& t : tasks) {
      if (t.decompiler != d || !traces.count(t.id)) continue;
      const auto& per_model = traces.at(t.id);
      const bool complete = std::all_of(per_model.begin(), per_model.end(), [](const auto& kv) { return kv.second.has_value(); });
      if (!complete) {
        excluded.push_back(t.id);
        continue;
      }
      ++g.denominator;
      for (const auto& [m, tr] : per_model) {
        auto& c = g.by_model[m];
        switch (tr->outcome.tier) {
          case RepairTier::FS: ++c.fs; break;
          case RepairTier::LF: ++c.lf; break;
          case RepairTier::CF: ++c.cf; break;
        }
        effort[d].push_back(tr->outcome);
      }
    }
    if (g.denominator > 0) groups.push_back(std::move(g));
  }
  if (!groups.empty()) {
    auto table = render_recompilability(groups);
    table.records.push_back({{"excluded_incomplete_tasks", excluded}});
    out.push_back(std::move(table));
    out.push_back(render_effort(effort));
    out.push_back(render_success_curve(traces_by_model, config.budget));
  }
  if (!initial_diagnostics.empty()) out.push_back(render_error_categories(initial_diagnostics));

  // Functionality, one table per repair model over its FS tasks.
  for (const auto& m : config.repair_models) {
    std::vector<FunctionalityGroup> fgroups;
    for (const auto& d : decompilers) {
      if (!counts_for_recompilability(units[d])) continue;
      FunctionalityGroup g{d, units[d], {}};
      for (const auto& t : tasks) {
        if (t.decompiler != d || !verdicts.count(t.id)) continue;
        const auto& by = verdicts.at(t.id).at("by_repair_model");
        if (by.contains(m.model_id)) g.verdicts.push_back(by.at(m.model_id).get<TaskVerdict>());
      }
      fgroups.push_back(std::move(g));
    }
    auto table = render_functionality(fgroups, m.model_id);
    if (!table.rows.empty()) out.push_back(std::move(table));
  }

  // Efficiency.
  std::vector<EfficiencyRow> eff;
  std::vector<std::string> models = judge_ids;
  for (const auto& m : config.repair_models) {
    if (std::find(models.begin(), models.end(), m.model_id) == models.end()) models.push_back(m.model_id);
  }
  for (const auto& m : models) {
    if (judge_usage.count(m)) eff.push_back({m, "Readability", aggregate_usage(judge_usage.at(m)), {}});
    if (repair_usage.count(m)) eff.push_back({m, "Recompilability", aggregate_usage(repair_usage.at(m)), {}});
    if (run_seconds.count(m)) eff.push_back({m, "Functionality", std::nullopt, run_seconds.at(m)});
  }
  if (!eff.empty()) out.push_back(render_efficiency(eff));

  // Driver coverage from the original runs.
  if (fs::exists(config.manifest_path) && fs::exists(run_dir / "binaries")) {
    std::vector<fs::path> outs;
    for (const auto& e : fs::directory_iterator(run_dir / "binaries")) {
      if (fs::exists(e.path() / "orig.stdout")) outs.push_back(e.path() / "orig.stdout");
    }
    std::sort(outs.begin(), outs.end());
    if (!outs.empty()) {
      std::vector<Observation> obs;
      for (const auto& p : outs) {
        auto o = parse_observations(read_text_file(p));
        obs.insert(obs.end(), o.begin(), o.end());
      }
      out.push_back(render_driver_coverage(driver_coverage(obs, load_manifest(config.manifest_path))));
    }
  }
  return out;
}

void write_tables(const std::vector<ReportTable>& tables, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& t : tables) {
    write_text_file(dir / (t.id + ".csv"), t.to_csv());
    write_text_file(dir / (t.id + ".json"), t.to_json().dump(2) + "\n");
  }
}

}  // namespace decompeval
