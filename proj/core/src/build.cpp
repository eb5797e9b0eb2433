#include "decompeval/build.hpp"

#include "decompeval/process.hpp"
#include "decompeval/util.hpp"

#include <algorithm>
#include <atomic>
#include <unistd.h>

namespace decompeval {

namespace fs = std::filesystem;
using nlohmann::json;

SourceLanguage language_of(const fs::path& source) {
  const auto ext = source.extension().string();
  if (ext == ".cc" || ext == ".cpp" || ext == ".cxx" || ext == ".C" || ext == ".c++") return SourceLanguage::Cxx;
  return SourceLanguage::C;
}

ToolchainTable ToolchainTable::defaults() {
  ToolchainTable t;
  const Arch host = host_arch();
  auto gcc_for = [&](Arch a) -> ToolchainEntry {
    switch (a) {
      case Arch::x86:
        if (host == Arch::x86 || host == Arch::x64) return {"gcc", "g++", {"-m32"}};
        return {"i686-linux-gnu-gcc", "i686-linux-gnu-g++", {"-m32"}};
      case Arch::x64:
        if (host == Arch::x64) return {"gcc", "g++", {"-m64"}};
        return {"x86_64-linux-gnu-gcc", "x86_64-linux-gnu-g++", {"-m64"}};
      case Arch::ARM32:
        if (host == Arch::ARM32) return {"gcc", "g++", {"-marm"}};
        return {"arm-linux-gnueabihf-gcc", "arm-linux-gnueabihf-g++", {"-marm"}};
      case Arch::ARM64:
        if (host == Arch::ARM64) return {"gcc", "g++", {"-march=armv8-a"}};
        return {"aarch64-linux-gnu-gcc", "aarch64-linux-gnu-g++", {"-march=armv8-a"}};
    }
    return {};
  };
  auto clang_for = [](Arch a) -> ToolchainEntry {
    switch (a) {
      case Arch::x86: return {"clang", "clang++", {"--target=i686-linux-gnu"}};
      case Arch::x64: return {"clang", "clang++", {"--target=x86_64-linux-gnu"}};
      case Arch::ARM32: return {"clang", "clang++", {"--target=arm-linux-gnueabihf"}};
      case Arch::ARM64: return {"clang", "clang++", {"--target=aarch64-linux-gnu"}};
    }
    return {};
  };
  for (Arch a : {Arch::x86, Arch::x64, Arch::ARM32, Arch::ARM64}) {
    for (Compiler c : {Compiler::GCC, Compiler::Clang}) {
      ToolchainEntry e = c == Compiler::GCC ? gcc_for(a) : clang_for(a);
      const std::string prefix = "DECOMPEVAL_" + std::string(to_string(c)) + "_" + std::string(to_string(a));
      std::string upper;
      for (char ch : prefix) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
      if (auto v = env_or_empty((upper + "_CC").c_str()); !v.empty()) e.c_driver = v;
      if (auto v = env_or_empty((upper + "_CXX").c_str()); !v.empty()) e.cxx_driver = v;
      t.set(c, a, std::move(e));
    }
  }
  return t;
}

const ToolchainEntry& ToolchainTable::entry(Compiler c, Arch a) const { return entries_.at({c, a}); }

void ToolchainTable::set(Compiler c, Arch a, ToolchainEntry e) { entries_[{c, a}] = std::move(e); }

std::vector<std::string> flags_for(const BuildConfig& config, const ToolchainTable& table) {
  std::vector<std::string> flags;
  flags.push_back("-" + std::string(to_string(config.optimization)));
  flags.emplace_back(config.debug == DebugInfo::WithDebug ? "-g" : "-s");
  const auto& e = table.entry(config.compiler, config.architecture);
  flags.insert(flags.end(), e.arch_flags.begin(), e.arch_flags.end());
  if (config.compiler == Compiler::GCC) {
    flags.emplace_back("-fno-diagnostics-show-caret");
  } else {
    flags.emplace_back("-fno-caret-diagnostics");
  }
  flags.emplace_back("-fdiagnostics-color=never");
  return flags;
}

void to_json(json& j, const CompileResult& r) {
  j = json{{"compile_ok", r.compile_ok},
           {"link_ok", r.link_ok ? json(*r.link_ok) : json(nullptr)},
           {"raw_stderr", r.raw_stderr},
           {"exit_code", r.exit_code},
           {"duration_ms", r.duration_ms},
           {"commands", r.commands}};
}

void from_json(const json& j, CompileResult& r) {
  r.compile_ok = j.at("compile_ok").get<bool>();
  if (j.at("link_ok").is_null()) {
    r.link_ok.reset();
  } else {
    r.link_ok = j.at("link_ok").get<bool>();
  }
  r.raw_stderr = j.at("raw_stderr").get<std::string>();
  r.exit_code = j.at("exit_code").get<int>();
  r.duration_ms = j.at("duration_ms").get<std::int64_t>();
  r.commands = j.value("commands", std::vector<std::vector<std::string>>{});
}

BuildHarness::BuildHarness(ToolchainTable table, std::chrono::milliseconds timeout)
    : table_(std::move(table)), timeout_(timeout) {}

const std::string& BuildHarness::driver_for(const CompileInvocation& inv) const {
  const auto& e = table_.entry(inv.config.compiler, inv.config.architecture);
  const bool cxx = std::any_of(inv.source_paths.begin(), inv.source_paths.end(),
                               [](const fs::path& p) { return language_of(p) == SourceLanguage::Cxx; });
  return cxx ? e.cxx_driver : e.c_driver;
}

std::vector<std::vector<std::string>> BuildHarness::commands_for(const CompileInvocation& inv) const {
  if (inv.source_paths.empty()) throw std::invalid_argument("CompileInvocation without sources");
  const std::string& driver = driver_for(inv);
  std::vector<std::string> base{driver};
  auto flags = flags_for(inv.config, table_);
  base.insert(base.end(), flags.begin(), flags.end());
  base.insert(base.end(), inv.extra_flags.begin(), inv.extra_flags.end());

  std::vector<std::vector<std::string>> cmds;
  std::vector<std::string> objects;
  for (std::size_t i = 0; i < inv.source_paths.size(); ++i) {
    fs::path obj = inv.output_path;
    obj += "." + std::to_string(i) + "." + inv.source_paths[i].stem().string() + ".o";
    auto cmd = base;
    cmd.insert(cmd.end(), {"-c", inv.source_paths[i].string(), "-o", obj.string()});
    cmds.push_back(std::move(cmd));
    objects.push_back(obj.string());
  }
  if (inv.phase_mode == PhaseMode::CompileAndLink) {
    auto cmd = base;
    cmd.insert(cmd.end(), objects.begin(), objects.end());
    cmd.insert(cmd.end(), {"-o", inv.output_path.string()});
    cmds.push_back(std::move(cmd));
  }
  return cmds;
}

void BuildHarness::ensure_toolchain(Compiler c, Arch a, SourceLanguage lang) const {
  const auto key = std::make_tuple(c, a, lang);
  {
    std::lock_guard lock(probe_mu_);
    if (auto it = probe_cache_.find(key); it != probe_cache_.end()) {
      if (!it->second.empty()) throw ConfigurationError(it->second);
      return;
    }
  }
  const auto& e = table_.entry(c, a);
  const std::string& driver = lang == SourceLanguage::Cxx ? e.cxx_driver : e.c_driver;
  std::string problem;
  if (!find_executable(driver)) {
    problem = "toolchain driver '" + driver + "' for " + std::string(to_string(c)) + "/" +
              std::string(to_string(a)) + " not found";
  } else {
    static std::atomic<unsigned> counter{0};
    const fs::path dir = fs::temp_directory_path() /
                         ("decompeval-probe-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::create_directories(dir);
    const fs::path src = dir / (lang == SourceLanguage::Cxx ? "probe.cpp" : "probe.c");
    write_text_file(src, "int main(void) { return 0; }\n");
    std::vector<std::string> argv{driver};
    argv.insert(argv.end(), e.arch_flags.begin(), e.arch_flags.end());
    argv.insert(argv.end(), {src.string(), "-o", (dir / "probe").string()});
    ProcessOptions opts;
    opts.timeout = timeout_;
    const auto r = run_process(argv, opts);
    if (!r.exited_ok()) {
      auto first_line = split_lines(r.stderr_text);
      problem = "toolchain " + driver + " " + join(e.arch_flags, " ") + " cannot build for " +
                std::string(to_string(a)) + (first_line.empty() ? "" : ": " + first_line.front());
    }
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::lock_guard lock(probe_mu_);
  probe_cache_[key] = problem;
  if (!problem.empty()) throw ConfigurationError(problem);
}

CompileResult BuildHarness::build(const CompileInvocation& inv) const {
  if (inv.source_paths.empty()) throw std::invalid_argument("CompileInvocation without sources");
  const auto lang = std::any_of(inv.source_paths.begin(), inv.source_paths.end(),
                                [](const fs::path& p) { return language_of(p) == SourceLanguage::Cxx; })
                        ? SourceLanguage::Cxx
                        : SourceLanguage::C;
  ensure_toolchain(inv.config.compiler, inv.config.architecture, lang);

  if (inv.output_path.has_parent_path()) fs::create_directories(inv.output_path.parent_path());
  std::error_code ec;
  fs::remove(inv.output_path, ec);

  CompileResult result;
  result.commands = commands_for(inv);
  ProcessOptions opts;
  opts.timeout = timeout_;

  auto run = [&](const std::vector<std::string>& cmd) {
    auto r = run_process(cmd, opts);
    result.duration_ms += r.duration_ms;
    if (!r.spawned) throw ConfigurationError("cannot run " + cmd.front() + ": " + r.stderr_text);
    if (r.timed_out) throw HarnessError("timeout after " + std::to_string(timeout_.count()) + " ms: " + cmd.front());
    return r;
  };

  const std::size_t n_compile = inv.source_paths.size();
  result.compile_ok = true;
  std::string compile_stderr;
  for (std::size_t i = 0; i < n_compile; ++i) {
    auto r = run(result.commands[i]);
    compile_stderr += r.stderr_text;
    if (!r.exited_ok()) {
      result.compile_ok = false;
      if (result.exit_code == 0) result.exit_code = r.term_signal ? 128 + r.term_signal : r.exit_code;
    }
  }
  result.raw_stderr = compile_stderr;
  if (!result.compile_ok || inv.phase_mode == PhaseMode::CompileOnly) return result;

  auto r = run(result.commands.back());
  result.link_ok = r.exited_ok();
  if (!*result.link_ok) {
    result.exit_code = r.term_signal ? 128 + r.term_signal : r.exit_code;
    result.raw_stderr = r.stderr_text;
  } else if (!r.stderr_text.empty()) {
    result.raw_stderr += r.stderr_text;
  }
  return result;
}

std::string_view to_string(BuildStatus s) {
  switch (s) {
    case BuildStatus::Built: return "built";
    case BuildStatus::CompileFailed: return "compile-failed";
    case BuildStatus::LinkFailed: return "link-failed";
    case BuildStatus::ConfigurationError: return "configuration-error";
    case BuildStatus::HarnessError: return "harness-error";
  }
  return "?";
}

std::vector<BuildRecord> build_matrix(const BuildHarness& harness, const Manifest& manifest, const BuildMatrix& matrix,
                                      const fs::path& out_dir, unsigned jobs) {
  std::vector<BuildRecord> records(matrix.entries.size());
  parallel_for(matrix.entries.size(), jobs, [&](std::size_t i) {
    const auto& entry = matrix.entries[i];
    BuildRecord rec;
    rec.entry = entry;
    rec.binary_path = out_dir / entry.binary_id() / "binary";
    CompileInvocation inv;
    inv.source_paths = {manifest.resolve(entry.file.path)};
    inv.config = entry.config;
    inv.output_path = rec.binary_path;
    inv.extra_flags = entry.file.extra_flags;
    try {
      rec.result = harness.build(inv);
      if (!rec.result->compile_ok) {
        rec.status = BuildStatus::CompileFailed;
      } else if (!rec.result->link_ok.value_or(false)) {
        rec.status = BuildStatus::LinkFailed;
      } else {
        rec.status = BuildStatus::Built;
      }
    } catch (const ConfigurationError& e) {
      rec.status = BuildStatus::ConfigurationError;
      rec.error = e.what();
    } catch (const HarnessError& e) {
      rec.status = BuildStatus::HarnessError;
      rec.error = e.what();
    }
    records[i] = std::move(rec);
  });
  return records;
}

}  // namespace decompeval
