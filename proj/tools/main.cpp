#include "decompeval/orchestrator.hpp"
#include "decompeval/util.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>

using namespace decompeval;

namespace {

struct Globals {
  std::string config;
  std::string manifest;
  std::string out;
  unsigned jobs = 0;
  std::string replay;
  bool replay_only = false;
  std::vector<std::string> adapters;  // name=directory
  std::vector<std::string> judges;
  std::string endpoint;
  std::string api_key_env = "DECOMPEVAL_API_KEY";
};

struct RepairFlags {
  int budget = 0;
  std::vector<std::string> llms;
  int window_radius = -1;
};

ModelConfig model_named(const std::string& id, const Globals& g) {
  ModelConfig m;
  m.model_id = id;
  m.endpoint = g.endpoint;
  m.auth_env = g.api_key_env;
  return m;
}

RunConfig make_config(const Globals& g, const RepairFlags& r) {
  RunConfig c;
  if (!g.config.empty()) c = load_run_config(g.config);
  if (!g.manifest.empty()) c.manifest_path = g.manifest;
  if (!g.out.empty()) c.output_root = g.out;
  if (c.output_root.empty()) c.output_root = "runs/default";
  if (g.jobs > 0) c.jobs = g.jobs;
  if (!g.replay.empty()) c.replay_dir = g.replay;
  if (g.replay_only) c.replay_only = true;
  for (const auto& spec : g.adapters) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw ValidationError("--adapter expects name=directory, got " + spec);
    DecompilerAdapter a;
    a.name = spec.substr(0, eq);
    a.directory = spec.substr(eq + 1);
    c.adapters.push_back(a);
  }
  for (const auto& j : g.judges) c.judges.push_back(model_named(j, g));
  if (r.budget > 0) c.budget = r.budget;
  if (r.window_radius >= 0) c.window_radius = r.window_radius;
  if (!r.llms.empty()) {
    // --llm selects configured repair models by id, or adds new ones.
    std::vector<ModelConfig> chosen;
    for (const auto& id : r.llms) {
      auto it = std::find_if(c.repair_models.begin(), c.repair_models.end(),
                             [&](const ModelConfig& m) { return m.model_id == id; });
      chosen.push_back(it != c.repair_models.end() ? *it : model_named(id, g));
    }
    c.repair_models = std::move(chosen);
  }
  return c;
}

int run_stages(const Globals& g, const RepairFlags& r, std::set<Stage> stages) {
  const auto config = make_config(g, r);
  PipelineOptions opts;
  opts.stages = std::move(stages);
  const auto summary = run_pipeline(config, opts);
  fmt::print("run directory: {}\n", summary.run_dir.string());
  fmt::print("binaries: {}  tasks: {}  llm calls: {}  replay hits: {}\n", summary.binaries, summary.tasks,
             summary.transport_calls, summary.replay_hits);
  for (const auto& f : summary.failures) fmt::print("failed [{}] {}: {}\n", f.stage, f.task_id, f.error);
  for (const auto& t : summary.tables) fmt::print("table: {}\n", (summary.run_dir / "reports" / (t + ".csv")).string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decompiler evaluation: readability, recompilability and functionality"};
  app.require_subcommand(1);
  Globals g;
  RepairFlags r;
  app.add_option("--config", g.config, "Run configuration (JSON)");
  app.add_option("--manifest", g.manifest, "Benchmark manifest");
  app.add_option("--out", g.out, "Run directory");
  app.add_option("--jobs,-j", g.jobs, "Parallel tasks");
  app.add_option("--replay", g.replay, "LLM record/replay directory");
  app.add_flag("--replay-only", g.replay_only, "Never contact a model; replay misses fail");
  app.add_option("--adapter", g.adapters, "Directory adapter as name=directory (repeatable)");
  app.add_option("--judge", g.judges, "Judge model id (repeatable)");
  app.add_option("--endpoint", g.endpoint, "Chat-completions base URL for models given on the command line");
  app.add_option("--api-key-env", g.api_key_env, "Environment variable holding the API key");

  struct Sub {
    const char* name;
    const char* help;
    std::set<Stage> stages;
  };
  const std::vector<Sub> subs = {
      {"build", "Compile the benchmark matrix", {Stage::Build}},
      {"decompile", "Collect decompiler output per binary", {Stage::Decompile}},
      {"readability", "Score decompiled code with the judges", {Stage::Readability}},
      {"repair", "Run the compile-and-repair loop", {Stage::Repair}},
      {"trace", "Run original and recompiled binaries", {Stage::Trace}},
      {"diff", "Compare runs and assign verdicts", {Stage::Diff}},
      {"report", "Render report tables from the run directory", {Stage::Report}},
      {"run", "All stages in order", {kAllStages.begin(), kAllStages.end()}},
  };
  std::vector<CLI::App*> commands;
  for (const auto& s : subs) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    if (std::string(s.name) == "repair" || std::string(s.name) == "run") {
      cmd->add_option("--budget", r.budget, "Maximum compile iterations per task");
      cmd->add_option("--llm", r.llms, "Repair model id (repeatable)");
      cmd->add_option("--window-radius", r.window_radius, "Lines of code shown around the first error");
    }
    commands.push_back(cmd);
  }

  CLI11_PARSE(app, argc, argv);
  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (commands[i]->parsed()) return run_stages(g, r, subs[i].stages);
    }
  } catch (const std::exception& e) {
    std::cerr << "decompeval: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
