#include "decompeval/repair.hpp"

#include "decompeval/util.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <regex>

namespace decompeval {

using nlohmann::json;
namespace fs = std::filesystem;

void to_json(json& j, const EditCommand& e) {
  if (e.kind == EditKind::EditCodeBlock) {
    j = json{{"kind", "edit_code_block"},
             {"start_line", e.start_line},
             {"end_line", e.end_line},
             {"replacement", e.replacement}};
  } else {
    j = json{{"kind", "replace_string"}, {"needle", e.needle}, {"replacement", e.replacement}};
  }
}

void from_json(const json& j, EditCommand& e) {
  if (!j.is_object()) throw std::invalid_argument("edit is not an object");
  if (!j.contains("kind") || !j["kind"].is_string()) throw std::invalid_argument("edit lacks a string 'kind'");
  const auto kind = j["kind"].get<std::string>();
  if (!j.contains("replacement") || !j["replacement"].is_string()) {
    throw std::invalid_argument("edit lacks a string 'replacement'");
  }
  e = EditCommand{};
  e.replacement = j["replacement"].get<std::string>();
  if (kind == "edit_code_block") {
    if (!j.contains("start_line") || !j["start_line"].is_number_integer() || !j.contains("end_line") ||
        !j["end_line"].is_number_integer()) {
      throw std::invalid_argument("edit_code_block needs integer start_line and end_line");
    }
    e.kind = EditKind::EditCodeBlock;
    e.start_line = j["start_line"].get<int>();
    e.end_line = j["end_line"].get<int>();
    if (e.start_line < 1) throw std::invalid_argument("edit_code_block start_line must be >= 1");
    if (e.start_line > e.end_line) throw std::invalid_argument("edit_code_block start_line > end_line");
  } else if (kind == "replace_string") {
    if (!j.contains("needle") || !j["needle"].is_string()) throw std::invalid_argument("replace_string needs 'needle'");
    e.kind = EditKind::ReplaceString;
    e.needle = j["needle"].get<std::string>();
    if (e.needle.empty()) throw std::invalid_argument("replace_string needle must not be empty");
  } else {
    throw std::invalid_argument("unknown edit kind '" + kind + "'");
  }
}

namespace {

struct Lines {
  std::vector<std::string> lines;
  bool trailing_newline = false;

  static Lines of(std::string_view text) {
    Lines l;
    l.trailing_newline = !text.empty() && text.back() == '\n';
    std::size_t start = 0;
    while (start < text.size()) {
      auto nl = text.find('\n', start);
      if (nl == std::string_view::npos) {
        l.lines.emplace_back(text.substr(start));
        break;
      }
      l.lines.emplace_back(text.substr(start, nl - start));
      start = nl + 1;
    }
    return l;
  }

  [[nodiscard]] std::string str() const {
    std::string out = join(lines, "\n");
    if (trailing_newline && !lines.empty()) out += '\n';
    return out;
  }
};

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

ApplyResult apply_edits(std::string_view text, const std::vector<EditCommand>& edits) {
  ApplyResult r{std::string(text), {}};
  for (std::size_t i = 0; i < edits.size(); ++i) {
    const auto& e = edits[i];
    if (e.kind == EditKind::EditCodeBlock) {
      auto l = Lines::of(r.text);
      const int n = static_cast<int>(l.lines.size());
      if (e.start_line < 1 || e.end_line < e.start_line || e.end_line > n) {
        r.failures.push_back({i, fmt::format("line range {}-{} outside 1-{}", e.start_line, e.end_line, n)});
        continue;
      }
      auto repl = Lines::of(e.replacement).lines;
      l.lines.erase(l.lines.begin() + (e.start_line - 1), l.lines.begin() + e.end_line);
      l.lines.insert(l.lines.begin() + (e.start_line - 1), repl.begin(), repl.end());
      if (l.lines.empty()) l.trailing_newline = false;
      r.text = l.str();
    } else {
      if (e.needle.empty()) {
        r.failures.push_back({i, "empty needle"});
        continue;
      }
      const auto count = count_occurrences(r.text, e.needle);
      if (count != 1) {
        r.failures.push_back({i, count == 0 ? "needle not found" : fmt::format("needle occurs {} times", count)});
        continue;
      }
      r.text.replace(r.text.find(e.needle), e.needle.size(), e.replacement);
    }
  }
  return r;
}

std::string_view to_string(RepairTier t) {
  switch (t) {
    case RepairTier::FS: return "FS";
    case RepairTier::LF: return "LF";
    case RepairTier::CF: return "CF";
  }
  return "?";
}

std::optional<RepairTier> tier_from_string(std::string_view s) {
  if (s == "FS") return RepairTier::FS;
  if (s == "LF") return RepairTier::LF;
  if (s == "CF") return RepairTier::CF;
  return std::nullopt;
}

RepairTier classify_outcome(bool compile_ok, std::optional<bool> link_ok, bool budget_exhausted) {
  if (!compile_ok && link_ok) throw std::invalid_argument("link status given for a failed compile");
  if (compile_ok && link_ok.value_or(false)) return RepairTier::FS;
  if (!budget_exhausted) throw std::invalid_argument("no linkable binary yet and budget not exhausted");
  return compile_ok ? RepairTier::LF : RepairTier::CF;
}

std::string_view to_string(RepairFlag f) { return f == RepairFlag::Oscillating ? "Oscillating" : "Stuck"; }

std::string error_signature(const Diagnostic& d) {
  static const std::regex flag_re(R"(\s*\[-W[^\]]*\]$)");
  static const std::regex ws_re(R"(\s+)");
  std::string msg = std::regex_replace(d.message, flag_re, "");
  msg = std::regex_replace(trim(msg), ws_re, " ");
  return fmt::format("{}|{}|{}", to_string(d.category), d.line ? *d.line : 0, msg);
}

std::set<RepairFlag> detect_flags(const std::vector<IterationRecord>& iterations, int stuck_window) {
  std::set<RepairFlag> flags;
  if (iterations.size() < 2) return flags;

  int run = 1;
  for (std::size_t i = 1; i < iterations.size(); ++i) {
    const int prev = iterations[i - 1].snapshot_before.total_errors;
    const int cur = iterations[i].snapshot_before.total_errors;
    run = (cur == prev && cur > 0) ? run + 1 : 1;
    if (run >= stuck_window) flags.insert(RepairFlag::Stuck);
  }

  // signature -> 0 unseen, 1 seen, 2 seen then vanished
  std::map<std::string, int> state;
  for (const auto& it : iterations) {
    std::set<std::string> present;
    for (const auto& d : it.diagnostics) {
      if (d.severity == Severity::Error) present.insert(error_signature(d));
    }
    for (auto& [sig, st] : state) {
      if (st == 1 && !present.count(sig)) st = 2;
    }
    for (const auto& sig : present) {
      auto& st = state[sig];
      if (st == 2) flags.insert(RepairFlag::Oscillating);
      st = 1;
    }
  }
  return flags;
}

RepairOutcome summarize(const std::vector<IterationRecord>& iterations, int budget, int stuck_window) {
  if (iterations.empty()) throw std::invalid_argument("summarize: no iterations");
  RepairOutcome o;
  o.budget = budget;
  o.iterations_used = static_cast<int>(iterations.size());
  const auto& last = iterations.back();
  o.initial_errors = iterations.front().snapshot_before.total_errors;
  o.min_residual_errors = o.initial_errors;
  for (const auto& it : iterations) {
    o.min_residual_errors = std::min({o.min_residual_errors, it.snapshot_before.total_errors});
  }
  if (last.compile_ok && last.link_ok.value_or(false)) {
    o.tier = RepairTier::FS;
    o.fs_iteration = last.index;
    o.min_residual_errors = 0;
    o.effort_ratio = 1.0;
  } else {
    o.tier = classify_outcome(last.compile_ok, last.link_ok, true);
    o.effort_ratio = o.initial_errors > 0 ? static_cast<double>(o.initial_errors - o.min_residual_errors) /
                                                static_cast<double>(o.initial_errors)
                                          : 0.0;
  }
  o.flags = detect_flags(iterations, stuck_window);
  return o;
}

RepairTier tier_at_cap(const RepairTrace& trace, int cap) {
  if (cap < 1) throw std::invalid_argument("cap must be >= 1");
  if (trace.outcome.fs_iteration && *trace.outcome.fs_iteration <= cap) return RepairTier::FS;
  if (static_cast<std::size_t>(cap) >= trace.iterations.size()) return trace.outcome.tier;
  const auto& it = trace.iterations[static_cast<std::size_t>(cap) - 1];
  return it.compile_ok ? RepairTier::LF : RepairTier::CF;
}

std::vector<std::pair<int, double>> success_curve(const std::vector<RepairTrace>& traces, int budget) {
  std::vector<std::pair<int, double>> curve;
  for (int k = 1; k <= budget; ++k) {
    std::size_t fs = 0;
    for (const auto& t : traces) {
      if (t.outcome.fs_iteration && *t.outcome.fs_iteration <= k) ++fs;
    }
    curve.emplace_back(k, traces.empty() ? 0.0 : static_cast<double>(fs) / static_cast<double>(traces.size()));
  }
  return curve;
}

// JSON

namespace {

json opt_json(const std::optional<bool>& b) { return b ? json(*b) : json(nullptr); }

}  // namespace

void to_json(json& j, const IterationRecord& r) {
  json failures = json::array();
  for (const auto& f : r.apply_failures) failures.push_back({{"index", f.index}, {"reason", f.reason}});
  j = json{{"index", r.index},
           {"compile_ok", r.compile_ok},
           {"link_ok", opt_json(r.link_ok)},
           {"diagnostics", r.diagnostics},
           {"snapshot_before", r.snapshot_before},
           {"action", r.action},
           {"edits", r.edits},
           {"rejected_edits", r.rejected_edits},
           {"apply_failures", failures},
           {"stubbed_symbols", r.stubbed_symbols},
           {"snapshot_after", r.snapshot_after},
           {"exchange_key", r.exchange_key ? json(*r.exchange_key) : json(nullptr)},
           {"error", r.error}};
}

void from_json(const json& j, IterationRecord& r) {
  r.index = j.at("index").get<int>();
  r.compile_ok = j.at("compile_ok").get<bool>();
  r.link_ok = j.at("link_ok").is_null() ? std::nullopt : std::optional(j["link_ok"].get<bool>());
  r.diagnostics = j.at("diagnostics").get<std::vector<Diagnostic>>();
  r.snapshot_before = j.at("snapshot_before").get<ErrorSnapshot>();
  r.action = j.at("action").get<std::string>();
  r.edits = j.at("edits").get<std::vector<EditCommand>>();
  r.rejected_edits = j.at("rejected_edits").get<std::vector<std::string>>();
  r.apply_failures.clear();
  for (const auto& f : j.at("apply_failures")) {
    r.apply_failures.push_back({f.at("index").get<std::size_t>(), f.at("reason").get<std::string>()});
  }
  r.stubbed_symbols = j.at("stubbed_symbols").get<std::vector<std::string>>();
  r.snapshot_after = j.at("snapshot_after").get<ErrorSnapshot>();
  r.exchange_key = j.at("exchange_key").is_null() ? std::nullopt
                                                   : std::optional(j["exchange_key"].get<std::string>());
  r.error = j.value("error", std::string());
}

void to_json(json& j, const RepairOutcome& o) {
  json flags = json::array();
  for (auto f : o.flags) flags.push_back(to_string(f));
  j = json{{"tier", to_string(o.tier)},
           {"iterations_used", o.iterations_used},
           {"fs_iteration", o.fs_iteration ? json(*o.fs_iteration) : json(nullptr)},
           {"initial_errors", o.initial_errors},
           {"min_residual_errors", o.min_residual_errors},
           {"effort_ratio", o.effort_ratio},
           {"flags", flags},
           {"budget", o.budget}};
}

void from_json(const json& j, RepairOutcome& o) {
  o.tier = tier_from_string(j.at("tier").get<std::string>()).value_or(RepairTier::CF);
  o.iterations_used = j.at("iterations_used").get<int>();
  o.fs_iteration = j.at("fs_iteration").is_null() ? std::nullopt : std::optional(j["fs_iteration"].get<int>());
  o.initial_errors = j.at("initial_errors").get<int>();
  o.min_residual_errors = j.at("min_residual_errors").get<int>();
  o.effort_ratio = j.at("effort_ratio").get<double>();
  o.flags.clear();
  for (const auto& f : j.at("flags")) {
    o.flags.insert(f.get<std::string>() == "Oscillating" ? RepairFlag::Oscillating : RepairFlag::Stuck);
  }
  o.budget = j.value("budget", 0);
}

void to_json(json& j, const RepairTrace& t) {
  json stubs = json::array();
  for (const auto& p : t.stub_files) stubs.push_back(p.string());
  json usage = json::array();
  for (const auto& u : t.usage) {
    usage.push_back({{"prompt_tokens", u.prompt_tokens},
                     {"completion_tokens", u.completion_tokens},
                     {"wall_time_ms", u.wall_time_ms}});
  }
  j = json{{"task_ref", t.task_ref},
           {"outcome", t.outcome},
           {"iterations", t.iterations},
           {"stub_files", stubs},
           {"warnings", t.warnings},
           {"usage", usage},
           {"final_code", t.final_code},
           {"binary", t.binary ? json(t.binary->string()) : json(nullptr)}};
}

void from_json(const json& j, RepairTrace& t) {
  t.task_ref = j.at("task_ref").get<std::string>();
  t.outcome = j.at("outcome").get<RepairOutcome>();
  t.iterations = j.at("iterations").get<std::vector<IterationRecord>>();
  t.stub_files.clear();
  for (const auto& s : j.at("stub_files")) t.stub_files.emplace_back(s.get<std::string>());
  t.warnings = j.at("warnings").get<std::vector<std::string>>();
  t.usage.clear();
  for (const auto& u : j.value("usage", json::array())) {
    t.usage.push_back({u.at("prompt_tokens").get<std::int64_t>(), u.at("completion_tokens").get<std::int64_t>(),
                       u.at("wall_time_ms").get<std::int64_t>()});
  }
  t.final_code = j.value("final_code", std::string());
  t.binary = j.at("binary").is_null() ? std::nullopt : std::optional(fs::path(j["binary"].get<std::string>()));
}

// Prompt and loop.

std::vector<ChatMessage> build_repair_prompt(std::string_view code, const std::vector<Diagnostic>& diags,
                                             int window_radius) {
  std::string sys =
      "You repair C/C++ code produced by a decompiler so that it compiles and links with its original build "
      "flags. Keep the program's behaviour; change only what the diagnostics require.\n"
      "Reply with one ```json block of the form {\"edits\": [...]}. Each edit is either\n"
      "  {\"kind\": \"edit_code_block\", \"start_line\": A, \"end_line\": B, \"replacement\": \"...\"}\n"
      "which replaces lines A..B (1-based, inclusive, numbered as shown) with the replacement text, or\n"
      "  {\"kind\": \"replace_string\", \"needle\": \"...\", \"replacement\": \"...\"}\n"
      "where the needle must occur exactly once in the file. Edits apply in order, each to the result of the "
      "previous one.\n";

  json stack = json::array();
  for (const auto& d : diags) {
    json e = {{"phase", to_string(d.phase)},
              {"severity", to_string(d.severity)},
              {"category", to_string(d.category)},
              {"message", d.message}};
    if (d.line) e["line"] = *d.line;
    if (d.column) e["column"] = *d.column;
    stack.push_back(std::move(e));
  }

  const auto lines = Lines::of(code).lines;
  const int n = static_cast<int>(lines.size());
  int focus = 1;
  auto first = std::find_if(diags.begin(), diags.end(),
                            [](const Diagnostic& d) { return d.severity == Severity::Error && d.line; });
  if (first != diags.end()) {
    focus = *first->line;
  } else if (auto syms = undefined_symbols(diags); !syms.empty()) {
    std::string name = syms.front().substr(0, syms.front().find('('));
    if (auto p = name.rfind("::"); p != std::string::npos) name = name.substr(p + 2);
    for (int i = 0; i < n; ++i) {
      if (contains(lines[static_cast<std::size_t>(i)], name)) {
        focus = i + 1;
        break;
      }
    }
  }
  const int lo = std::max(1, focus - window_radius);
  const int hi = std::max(lo, std::min(n, focus + window_radius));
  const int width = static_cast<int>(std::to_string(std::max(n, 1)).size());

  std::string user = "Diagnostics:\n```json\n" + stack.dump(2) + "\n```\n\n";
  user += fmt::format("Code, lines {}-{} of {} (the `N| ` prefix is not part of the code):\n```\n", lo, hi, n);
  for (int i = lo; i <= hi && i <= n; ++i) {
    user += fmt::format("{:>{}}| {}\n", i, width, lines[static_cast<std::size_t>(i - 1)]);
  }
  user += "```\n";
  return {{"system", sys}, {"user", user}};
}

std::vector<EditCommand> parse_edit_list(const json& object, std::vector<std::string>& rejected) {
  std::vector<EditCommand> edits;
  const auto& list = object.at("edits");
  for (std::size_t i = 0; i < list.size(); ++i) {
    try {
      edits.push_back(list[i].get<EditCommand>());
    } catch (const std::exception& e) {
      rejected.push_back(fmt::format("edit {}: {}", i, e.what()));
    }
  }
  return edits;
}

RepairTrace run_repair(const BuildHarness& harness, Gateway& gateway, const ModelConfig& model,
                       std::string_view decompiled_source, const BuildConfig& config, const RepairOptions& options) {
  if (trim(decompiled_source).empty()) throw std::invalid_argument("run_repair: empty source");
  if (options.budget < 1) throw std::invalid_argument("run_repair: budget must be >= 1");
  if (options.work_dir.empty()) throw std::invalid_argument("run_repair: work_dir required");

  RepairTrace trace;
  trace.task_ref = options.task_ref;
  const std::string ext = options.language == SourceLanguage::Cxx ? ".cpp" : ".c";
  fs::create_directories(options.work_dir);

  std::string code(decompiled_source);
  if (options.rename_runtime) {
    std::vector<std::string> renamed;
    code = rename_runtime_definitions(code, &renamed);
    for (const auto& r : renamed) {
      trace.warnings.push_back("renamed runtime definition " + r + " to " + std::string(kReservedPrefix) + r);
    }
  }

  std::string stub_text;
  std::set<std::string> stubbed;
  const fs::path stub_path = options.work_dir / "stubs" / ("stubs" + ext);

  for (int k = 1; k <= options.budget; ++k) {
    const fs::path dir = options.work_dir / fmt::format("iter-{:03}", k);
    fs::create_directories(dir);
    const fs::path code_path = dir / ("code" + ext);
    write_text_file(code_path, code);

    CompileInvocation inv;
    inv.source_paths = {code_path};
    if (!stub_text.empty()) inv.source_paths.push_back(stub_path);
    inv.config = config;
    inv.output_path = dir / "binary";
    inv.extra_flags = options.extra_flags;
    const CompileResult res = harness.build(inv);

    IterationRecord rec;
    rec.index = k;
    rec.compile_ok = res.compile_ok;
    rec.link_ok = res.link_ok;
    rec.diagnostics = diagnostics_for(res, config.compiler);
    rec.snapshot_before = snapshot(rec.diagnostics);
    rec.snapshot_after = rec.snapshot_before;
    rec.action = "none";
    write_text_file(dir / "diagnostics.json", json(rec.diagnostics).dump(2) + "\n");
    if (!trace.iterations.empty()) trace.iterations.back().snapshot_after = rec.snapshot_before;

    if (res.produced_binary()) {
      trace.binary = options.work_dir / "binary";
      fs::copy_file(inv.output_path, *trace.binary, fs::copy_options::overwrite_existing);
      write_text_file(dir / "edits.json", json{{"action", rec.action}, {"edits", json::array()}}.dump(2) + "\n");
      trace.iterations.push_back(std::move(rec));
      break;
    }
    if (k == options.budget) {
      write_text_file(dir / "edits.json", json{{"action", rec.action}, {"edits", json::array()}}.dump(2) + "\n");
      trace.iterations.push_back(std::move(rec));
      break;
    }

    bool repaired = false;
    if (res.compile_ok) {
      std::vector<std::string> missing;
      for (const auto& s : undefined_symbols(rec.diagnostics)) {
        if (!stubbed.count(s)) missing.push_back(s);
      }
      if (!missing.empty()) {
        auto stubs = generate_stubs(missing, code, options.language);
        for (const auto& w : stubs.warnings) trace.warnings.push_back(w);
        for (const auto& s : missing) stubbed.insert(s);
        if (!stubs.stubbed.empty()) {
          stub_text += stubs.text;
          write_text_file(stub_path, stub_text);
          if (trace.stub_files.empty()) trace.stub_files.push_back(stub_path);
          rec.action = "stubs";
          rec.stubbed_symbols = stubs.stubbed;
          repaired = true;
        }
      }
    }

    if (!repaired) {
      const auto messages = build_repair_prompt(code, rec.diagnostics, options.window_radius);
      try {
        const auto ex = gateway.complete(model, messages);
        rec.exchange_key = ex.key;
        trace.usage.push_back(ex.usage);
        try {
          const auto obj = extract_json(ex.response_text, kRepairEditsSchema);
          rec.edits = parse_edit_list(obj, rec.rejected_edits);
          auto applied = apply_edits(code, rec.edits);
          code = std::move(applied.text);
          rec.apply_failures = std::move(applied.failures);
          rec.action = "llm";
        } catch (const std::exception& e) {
          rec.action = "llm-unusable";
          rec.error = e.what();
        }
      } catch (const std::exception& e) {
        rec.action = "llm-failed";
        rec.error = e.what();
      }
    }

    json failures = json::array();
    for (const auto& f : rec.apply_failures) failures.push_back({{"index", f.index}, {"reason", f.reason}});
    write_text_file(dir / "edits.json", json{{"action", rec.action},
                                             {"edits", rec.edits},
                                             {"rejected", rec.rejected_edits},
                                             {"apply_failures", failures},
                                             {"stubbed", rec.stubbed_symbols},
                                             {"error", rec.error}}
                                                .dump(2) + "\n");
    trace.iterations.push_back(std::move(rec));
  }

  trace.final_code = code;
  trace.outcome = summarize(trace.iterations, options.budget, options.stuck_window);
  write_text_file(options.work_dir / "outcome.json", json(trace).dump(2) + "\n");
  return trace;
}

}  // namespace decompeval
