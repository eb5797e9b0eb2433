#include "decompeval/orchestrator.hpp"

#include "decompeval/process.hpp"
#include "decompeval/util.hpp"

#include <fmt/format.h>

#include <mutex>

namespace decompeval {

using nlohmann::json;

std::string_view to_string(Backend b) { return b == Backend::LocalHost ? "local" : "remote"; }

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Build: return "build";
    case Stage::Decompile: return "decompile";
    case Stage::Readability: return "readability";
    case Stage::Repair: return "repair";
    case Stage::Trace: return "trace";
    case Stage::Diff: return "diff";
    case Stage::Report: return "report";
  }
  return "?";
}

std::optional<Stage> stage_from_string(std::string_view s) {
  for (auto st : kAllStages) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

std::string task_id_for(const std::string& binary_id, const std::string& decompiler) {
  return binary_id + "_" + decompiler;
}

void RunConfig::validate() const {
  std::vector<std::string> problems;
  if (manifest_path.empty()) problems.emplace_back("manifest path is empty");
  if (adapters.empty()) problems.emplace_back("at least one decompiler adapter is required");
  if (judges.empty()) problems.emplace_back("at least one judge model is required");
  if (repair_models.empty()) problems.emplace_back("at least one repair model is required");
  if (budget < 1) problems.emplace_back("budget must be >= 1");
  if (window_radius < 0) problems.emplace_back("window radius must be >= 0");
  if (output_root.empty()) problems.emplace_back("output root is empty");
  if (jobs < 1) problems.emplace_back("jobs must be >= 1");
  if (backend == Backend::RemoteExec && !contains(remote_template, "{binary}")) {
    problems.emplace_back("remote backend needs a template containing {binary}");
  }
  if (!tracer_template.empty() &&
      (!contains(tracer_template, "{binary}") || !contains(tracer_template, "{output}"))) {
    problems.emplace_back("tracer template must contain {binary} and {output}");
  }
  std::set<std::string> names;
  for (const auto& a : adapters) {
    if (!names.insert(a.name).second) problems.push_back("duplicate adapter " + a.name);
  }
  for (const auto* models : {&judges, &repair_models}) {
    std::set<std::string> ids;
    for (const auto& m : *models) {
      try {
        m.validate();
      } catch (const std::exception& e) {
        problems.emplace_back(e.what());
      }
      if (!ids.insert(m.model_id).second) problems.push_back("duplicate model " + m.model_id);
    }
  }
  if (!problems.empty()) throw ValidationError("invalid run config: " + join(problems, "; "));
}

fs::path RunConfig::effective_replay_dir() const {
  return replay_dir.empty() ? output_root / "replay" : replay_dir;
}

namespace {

json axes_to_json(const BuildAxes& a) {
  json j;
  for (auto c : a.compilers) j["compilers"].push_back(to_string(c));
  for (auto o : a.optimizations) j["optimizations"].push_back(to_string(o));
  for (auto d : a.debug) j["debug"].push_back(to_string(d));
  for (auto x : a.architectures) j["architectures"].push_back(to_string(x));
  return j;
}

template <typename T, typename Parse>
std::vector<T> parse_axis(const json& j, const char* key, Parse parse) {
  std::vector<T> out;
  for (const auto& v : j.at(key)) {
    const auto s = v.get<std::string>();
    auto parsed = parse(s);
    if (!parsed) throw ValidationError(fmt::format("axes.{}: unknown value '{}'", key, s));
    out.push_back(*parsed);
  }
  return out;
}

BuildAxes axes_from_json(const json& j) {
  BuildAxes a;
  a.compilers = parse_axis<Compiler>(j, "compilers", compiler_from_string);
  a.optimizations = parse_axis<OptLevel>(j, "optimizations", opt_from_string);
  a.debug = parse_axis<DebugInfo>(j, "debug", debug_from_string);
  a.architectures = parse_axis<Arch>(j, "architectures", arch_from_string);
  return a;
}

fs::path resolve_against(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

}  // namespace

void to_json(json& j, const RunConfig& c) {
  j = json{{"manifest", c.manifest_path.string()},
           {"adapters", c.adapters},
           {"judges", c.judges},
           {"repair_models", c.repair_models},
           {"budget", c.budget},
           {"window_radius", c.window_radius},
           {"backend", to_string(c.backend)},
           {"remote_template", c.remote_template},
           {"tracer_template", c.tracer_template},
           {"output_root", c.output_root.string()},
           {"jobs", c.jobs},
           {"replay_dir", c.replay_dir.string()},
           {"replay_only", c.replay_only},
           {"run_timeout_ms", c.run_timeout.count()}};
  if (c.axes) j["axes"] = axes_to_json(*c.axes);
}

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  RunConfig c;
  c.manifest_path = resolve_against(base_dir, j.at("manifest").get<std::string>());
  for (const auto& a : j.value("adapters", json::array())) {
    auto adapter = a.get<DecompilerAdapter>();
    adapter.directory = resolve_against(base_dir, adapter.directory);
    c.adapters.push_back(std::move(adapter));
  }
  c.judges = j.value("judges", json::array()).get<std::vector<ModelConfig>>();
  c.repair_models = j.value("repair_models", json::array()).get<std::vector<ModelConfig>>();
  c.budget = j.value("budget", 50);
  c.window_radius = j.value("window_radius", 20);
  const auto backend = j.value("backend", std::string("local"));
  if (backend == "local") {
    c.backend = Backend::LocalHost;
  } else if (backend == "remote") {
    c.backend = Backend::RemoteExec;
  } else {
    throw ValidationError("unknown backend '" + backend + "'");
  }
  c.remote_template = j.value("remote_template", std::string());
  c.tracer_template = j.value("tracer_template", std::string());
  c.output_root = resolve_against(base_dir, j.value("output_root", std::string("runs/default")));
  c.jobs = j.value("jobs", 1u);
  const auto replay = j.value("replay_dir", std::string());
  if (!replay.empty()) c.replay_dir = resolve_against(base_dir, replay);
  c.replay_only = j.value("replay_only", false);
  c.run_timeout = std::chrono::milliseconds(j.value("run_timeout_ms", 10000));
  if (j.contains("axes")) c.axes = axes_from_json(j["axes"]);
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  const auto j = json::parse(read_text_file(path));
  return run_config_from_json(j, path.parent_path());
}

namespace {

json build_record_json(const BuildRecord& r) {
  json j{{"binary_id", r.entry.binary_id()},
         {"config", r.entry.config},
         {"source", r.entry.file.path},
         {"status", to_string(r.status)},
         {"error", r.error}};
  if (r.result) j["result"] = *r.result;
  return j;
}

std::string source_ext(SourceLanguage lang) { return lang == SourceLanguage::Cxx ? ".cpp" : ".c"; }

json run_json(const ProcessResult& r) {
  return json{{"spawned", r.spawned},
              {"exit_code", r.exit_code},
              {"signal", r.term_signal},
              {"timed_out", r.timed_out},
              {"crashed", r.crashed()},
              {"duration_ms", r.duration_ms}};
}

struct Task {
  std::string id;
  std::string binary_id;
  const DecompilerAdapter* adapter = nullptr;
  MatrixEntry entry;
  SourceLanguage language = SourceLanguage::C;
  fs::path binary;
  fs::path dir;

  [[nodiscard]] fs::path decompiled() const { return dir / ("decompiled" + source_ext(language)); }
};

class Pipeline {
 public:
  Pipeline(const RunConfig& config, const PipelineOptions& options) : config_(config), options_(options) {}

  RunSummary run() {
    for (const auto& a : config_.adapters) a.validate();
    config_.validate();

    manifest_ = load_manifest(config_.manifest_path);
    if (auto problems = validate_manifest(manifest_); !problems.empty()) {
      throw ValidationError("invalid manifest: " + join(problems, "; "));
    }
    matrix_ = expand_matrix(manifest_.files, config_.axes.value_or(manifest_.axes));

    root_ = config_.output_root;
    fs::create_directories(root_);
    summary_.run_dir = root_;
    json run{{"config", config_},
             {"manifest_sha256", sha256_hex(manifest_canonical_text(manifest_))},
             {"matrix_size", matrix_.entries.size()}};
    write_text_file(root_ / "run.json", run.dump(2) + "\n");

    if (options_.harness == nullptr) {
      own_harness_ = std::make_unique<BuildHarness>();
      harness_ = own_harness_.get();
    } else {
      harness_ = options_.harness;
    }
    auto store = std::make_shared<ReplayStore>(config_.effective_replay_dir());
    std::shared_ptr<ChatTransport> transport = options_.transport;
    if (config_.replay_only) {
      transport = nullptr;
    } else if (!transport) {
      transport = std::make_shared<HttpTransport>();
    }
    gateway_ = std::make_unique<Gateway>(store, transport);

    if (wants(Stage::Build)) stage_build();
    collect_tasks();
    if (wants(Stage::Decompile)) per_task(Stage::Decompile, [this](const Task& t) { decompile(t); });
    if (wants(Stage::Readability)) per_task(Stage::Readability, [this](const Task& t) { readability(t); });
    if (wants(Stage::Repair)) per_task(Stage::Repair, [this](const Task& t) { repair(t); });
    if (wants(Stage::Trace)) {
      trace_originals();
      per_task(Stage::Trace, [this](const Task& t) { trace(t); });
    }
    if (wants(Stage::Diff)) per_task(Stage::Diff, [this](const Task& t) { diff(t); });
    if (wants(Stage::Report)) {
      auto tables = render_run(root_, config_);
      write_tables(tables, root_ / "reports");
      for (const auto& t : tables) summary_.tables.push_back(t.id);
    }
    summary_.transport_calls = gateway_->transport_calls();
    summary_.replay_hits = gateway_->replay_hits();
    return summary_;
  }

 private:
  bool wants(Stage s) const { return options_.stages.count(s) > 0; }

  fs::path binary_dir(const std::string& id) const { return root_ / "binaries" / id; }

  void stage_build() {
    BuildMatrix todo;
    for (const auto& e : matrix_.entries) {
      if (!fs::exists(binary_dir(e.binary_id()) / "build.json")) todo.entries.push_back(e);
    }
    if (todo.entries.empty()) return;
    const auto records = build_matrix(*harness_, manifest_, todo, root_ / "binaries", config_.jobs);
    for (const auto& r : records) {
      const auto id = r.entry.binary_id();
      // Configuration and harness errors are not results; leave them unrecorded so a resume retries.
      if (r.status == BuildStatus::ConfigurationError || r.status == BuildStatus::HarnessError) {
        record_failure(id, Stage::Build, r.error);
        write_text_file(binary_dir(id) / "build.error.json", build_record_json(r).dump(2) + "\n");
        continue;
      }
      fs::remove(binary_dir(id) / "build.error.json");
      write_text_file(binary_dir(id) / "build.json", build_record_json(r).dump(2) + "\n");
      if (r.status != BuildStatus::Built) record_failure(id, Stage::Build, std::string(to_string(r.status)));
    }
  }

  void collect_tasks() {
    for (const auto& e : matrix_.entries) {
      const auto id = e.binary_id();
      const auto build_json = binary_dir(id) / "build.json";
      if (!fs::exists(build_json)) continue;
      const auto j = json::parse(read_text_file(build_json));
      if (j.at("status").get<std::string>() != to_string(BuildStatus::Built)) continue;
      ++summary_.binaries;
      binaries_.push_back(e);
      for (const auto& a : config_.adapters) {
        Task t;
        t.binary_id = id;
        t.id = task_id_for(id, a.name);
        t.adapter = &a;
        t.entry = e;
        t.language = language_of(e.file.path);
        t.binary = binary_dir(id) / "binary";
        t.dir = root_ / "tasks" / t.id;
        tasks_.push_back(std::move(t));
      }
    }
    summary_.tasks = tasks_.size();
  }

  void per_task(Stage stage, const std::function<void(const Task&)>& fn) {
    parallel_for(tasks_.size(), config_.jobs, [&](std::size_t i) {
      const Task& t = tasks_[i];
      try {
        fn(t);
        clear_error(t, stage);
      } catch (const std::exception& e) {
        record_failure(t.id, stage, e.what());
        set_error(t, stage, e.what());
      }
    });
  }

  void record_failure(const std::string& id, Stage stage, const std::string& error) {
    std::lock_guard lock(mu_);
    summary_.failures.push_back({id, std::string(to_string(stage)), error});
  }

  // errors.json is only touched by the worker that owns the task.
  void set_error(const Task& t, Stage stage, const std::string& error) {
    const auto path = t.dir / "errors.json";
    json j = fs::exists(path) ? json::parse(read_text_file(path)) : json::object();
    j[std::string(to_string(stage))] = error;
    write_text_file(path, j.dump(2) + "\n");
  }

  void clear_error(const Task& t, Stage stage) {
    const auto path = t.dir / "errors.json";
    if (!fs::exists(path)) return;
    json j = json::parse(read_text_file(path));
    if (j.erase(std::string(to_string(stage))) == 0) return;
    if (j.empty()) {
      fs::remove(path);
    } else {
      write_text_file(path, j.dump(2) + "\n");
    }
  }

  void decompile(const Task& t) {
    const auto task_json = t.dir / "task.json";
    if (!fs::exists(task_json)) {
      const json j{{"task_id", t.id},
                   {"binary_id", t.binary_id},
                   {"decompiler", t.adapter->name},
                   {"unit", to_string(t.adapter->unit)},
                   {"config", t.entry.config},
                   {"dimension", to_string(t.entry.file.dimension)},
                   {"source", t.entry.file.path},
                   {"language", t.language == SourceLanguage::Cxx ? "c++" : "c"}};
      write_text_file(task_json, j.dump(2) + "\n");
    }
    if (fs::exists(t.decompiled())) return;
    t.adapter->decompile(t.binary, t.binary_id, t.decompiled());
  }

  std::string original_source(const Task& t) const { return read_text_file(manifest_.resolve(t.entry.file.path)); }

  void readability(const Task& t) {
    if (!fs::exists(t.decompiled())) return;
    std::vector<ModelConfig> pending;
    for (const auto& j : config_.judges) {
      if (!fs::exists(t.dir / "readability" / (sanitize_filename(j.model_id) + ".json"))) pending.push_back(j);
    }
    if (pending.empty()) return;
    const auto results = score_pair(*gateway_, original_source(t), read_text_file(t.decompiled()), pending);
    for (const auto& r : results) {
      json j{{"judge_id", r.judge_id},
             {"scorecard", r.scorecard ? json(*r.scorecard) : json(nullptr)},
             {"error", r.error},
             {"exchanges", r.exchanges}};
      write_text_file(t.dir / "readability" / (sanitize_filename(r.judge_id) + ".json"), j.dump(2) + "\n");
    }
  }

  void repair(const Task& t) {
    if (!counts_for_recompilability(t.adapter->unit) || !fs::exists(t.decompiled())) return;
    const auto code = read_text_file(t.decompiled());
    std::vector<std::string> errors;
    for (const auto& m : config_.repair_models) {
      const auto work = t.dir / "repair" / sanitize_filename(m.model_id);
      if (fs::exists(work / "outcome.json")) continue;
      RepairOptions opts;
      opts.budget = config_.budget;
      opts.window_radius = config_.window_radius;
      opts.language = t.language;
      opts.extra_flags = t.entry.file.extra_flags;
      opts.work_dir = work;
      opts.task_ref = t.id;
      try {
        run_repair(*harness_, *gateway_, m, code, t.entry.config, opts);
      } catch (const std::exception& e) {
        errors.push_back(m.model_id + ": " + e.what());
      }
    }
    if (!errors.empty()) throw std::runtime_error(join(errors, "; "));
  }

  ProcessResult execute(const fs::path& binary) const {
    std::vector<std::string> argv;
    if (config_.backend == Backend::RemoteExec) {
      for (auto part : split_command(config_.remote_template)) {
        if (auto pos = part.find("{binary}"); pos != std::string::npos) part.replace(pos, 8, binary.string());
        argv.push_back(part);
      }
    } else {
      argv.push_back(fs::absolute(binary).string());
    }
    ProcessOptions opts;
    opts.timeout = config_.run_timeout;
    opts.working_directory = binary.parent_path();
    return run_process(argv, opts);
  }

  void run_tracer(const fs::path& binary, const fs::path& output) const {
    std::vector<std::string> argv;
    for (auto part : split_command(config_.tracer_template)) {
      for (const auto& [key, value] : {std::pair<std::string, std::string>{"{binary}", fs::absolute(binary).string()},
                                       {"{output}", output.string()}}) {
        if (auto pos = part.find(key); pos != std::string::npos) part.replace(pos, key.size(), value);
      }
      argv.push_back(part);
    }
    ProcessOptions opts;
    opts.timeout = config_.run_timeout * 10;
    const auto r = run_process(argv, opts);
    if (!r.spawned || r.timed_out || !fs::exists(output)) {
      throw std::runtime_error("tracer failed on " + binary.string() + ": " + trim(r.stderr_text));
    }
  }

  void trace_originals() {
    parallel_for(binaries_.size(), config_.jobs, [&](std::size_t i) {
      const auto id = binaries_[i].binary_id();
      const auto dir = binary_dir(id);
      try {
        if (!fs::exists(dir / "orig.stdout")) {
          const auto r = execute(dir / "binary");
          if (!r.spawned) throw std::runtime_error("cannot execute " + (dir / "binary").string());
          write_text_file(dir / "orig.run.json", run_json(r).dump(2) + "\n");
          write_text_file(dir / "orig.stdout", r.stdout_text);
        }
        if (!config_.tracer_template.empty() && !fs::exists(dir / "orig.jsonl")) {
          run_tracer(dir / "binary", dir / "orig.jsonl");
        }
      } catch (const std::exception& e) {
        record_failure(id, Stage::Trace, e.what());
      }
    });
  }

  void trace(const Task& t) {
    if (!counts_for_recompilability(t.adapter->unit)) return;
    const auto bdir = binary_dir(t.binary_id);
    const auto tdir = t.dir / "traces";
    if (fs::exists(bdir / "orig.stdout") && !fs::exists(tdir / "orig.stdout")) {
      fs::create_directories(tdir);
      fs::copy_file(bdir / "orig.stdout", tdir / "orig.stdout", fs::copy_options::overwrite_existing);
      fs::copy_file(bdir / "orig.run.json", tdir / "orig.run.json", fs::copy_options::overwrite_existing);
    }
    if (fs::exists(bdir / "orig.jsonl") && !fs::exists(tdir / "orig.jsonl")) {
      fs::create_directories(tdir);
      fs::copy_file(bdir / "orig.jsonl", tdir / "orig.jsonl", fs::copy_options::overwrite_existing);
    }
    for (const auto& m : config_.repair_models) {
      const auto slug = sanitize_filename(m.model_id);
      const auto binary = t.dir / "repair" / slug / "binary";
      if (!fs::exists(binary)) continue;
      const auto out = tdir / ("recomp." + slug + ".stdout");
      if (!fs::exists(out)) {
        const auto r = execute(binary);
        if (!r.spawned) throw std::runtime_error("cannot execute " + binary.string());
        write_text_file(tdir / ("recomp." + slug + ".run.json"), run_json(r).dump(2) + "\n");
        write_text_file(out, r.stdout_text);
      }
      const auto wire = tdir / ("recomp." + slug + ".jsonl");
      if (!config_.tracer_template.empty() && !fs::exists(wire)) run_tracer(binary, wire);
    }
  }

  void diff(const Task& t) {
    if (!counts_for_recompilability(t.adapter->unit)) return;
    const auto path = t.dir / "verdicts.json";
    if (fs::exists(path)) return;
    const auto tdir = t.dir / "traces";
    json by_model = json::object();
    for (const auto& m : config_.repair_models) {
      const auto slug = sanitize_filename(m.model_id);
      const auto outcome_path = t.dir / "repair" / slug / "outcome.json";
      if (!fs::exists(outcome_path)) continue;
      const auto outcome = json::parse(read_text_file(outcome_path)).at("outcome").get<RepairOutcome>();
      if (outcome.tier != RepairTier::FS) continue;
      by_model[m.model_id] = evaluate_one(t, tdir, slug);
    }
    if (by_model.empty()) return;
    write_text_file(path, json{{"by_repair_model", by_model}}.dump(2) + "\n");
  }

  json evaluate_one(const Task& t, const fs::path& tdir, const std::string& slug) const {
    const auto orig_out = tdir / "orig.stdout";
    const auto rec_out = tdir / ("recomp." + slug + ".stdout");
    if (!fs::exists(orig_out) || !fs::exists(rec_out)) {
      TaskVerdict v;
      v.program.category = ProgramCategory::Unsupported;
      v.note = fs::exists(orig_out) ? "recompiled run missing" : "original run missing";
      return v;
    }
    TaskInputs in;
    in.arch = t.entry.config.architecture;
    in.orig_stdout = read_text_file(orig_out);
    in.rec_stdout = read_text_file(rec_out);
    const auto run = json::parse(read_text_file(tdir / ("recomp." + slug + ".run.json")));
    in.rec_crashed = run.value("crashed", false);
    std::string note;
    const auto orig_wire = tdir / "orig.jsonl";
    const auto rec_wire = tdir / ("recomp." + slug + ".jsonl");
    if (fs::exists(orig_wire) && fs::exists(rec_wire)) {
      try {
        in.orig_trace = parse_wire(read_text_file(orig_wire));
        in.rec_trace = parse_wire(read_text_file(rec_wire));
      } catch (const StreamCorruptionError& e) {
        in.orig_trace.reset();
        in.rec_trace.reset();
        note = std::string("trace unusable: ") + e.what();
      }
    }
    auto v = evaluate_task(in);
    if (!note.empty()) v.note = v.note.empty() ? note : v.note + "; " + note;
    return v;
  }

  RunConfig config_;
  PipelineOptions options_;
  Manifest manifest_;
  BuildMatrix matrix_;
  fs::path root_;
  std::unique_ptr<BuildHarness> own_harness_;
  BuildHarness* harness_ = nullptr;
  std::unique_ptr<Gateway> gateway_;
  std::vector<MatrixEntry> binaries_;
  std::vector<Task> tasks_;
  RunSummary summary_;
  std::mutex mu_;
};

}  // namespace

RunSummary run_pipeline(const RunConfig& config, const PipelineOptions& options) {
  return Pipeline(config, options).run();
}

}  // namespace decompeval
