#include "decompeval/orchestrator.hpp"

#include "decompeval/process.hpp"
#include "decompeval/util.hpp"

#include <fmt/format.h>

#include <regex>

namespace decompeval {

using nlohmann::json;

std::string_view to_string(AdapterMode m) {
  return m == AdapterMode::ExternalCommand ? "external-command" : "directory";
}

std::string_view to_string(AdapterUnit u) {
  return u == AdapterUnit::WholeProgram ? "whole-program" : "function";
}

namespace {

std::string substitute(std::string text, const std::map<std::string, std::string>& vars) {
  for (const auto& [k, v] : vars) {
    const std::string pattern = "{" + k + "}";
    for (auto pos = text.find(pattern); pos != std::string::npos; pos = text.find(pattern, pos + v.size())) {
      text.replace(pos, pattern.size(), v);
    }
  }
  return text;
}

}  // namespace

void DecompilerAdapter::validate() const {
  static const std::regex name_re(R"([A-Za-z0-9][A-Za-z0-9.+-]*)");
  if (!std::regex_match(name, name_re)) {
    throw ConfigurationError(fmt::format("adapter name '{}' must be alphanumeric (no '_' or '/')", name));
  }
  if (mode == AdapterMode::DirectoryOfOutputs) {
    if (directory.empty() || !fs::is_directory(directory)) {
      throw ConfigurationError(fmt::format("adapter {}: output directory '{}' does not exist", name,
                                           directory.string()));
    }
    return;
  }
  const auto argv = split_command(command);
  if (argv.empty()) throw ConfigurationError(fmt::format("adapter {}: empty command", name));
  if (!contains(command, "{output}")) {
    throw ConfigurationError(fmt::format("adapter {}: command must reference {{output}}", name));
  }
  if (!find_executable(argv.front())) {
    throw ConfigurationError(fmt::format("adapter {}: '{}' not found", name, argv.front()));
  }
}

void DecompilerAdapter::decompile(const fs::path& binary, const std::string& binary_id, const fs::path& output) const {
  if (mode == AdapterMode::DirectoryOfOutputs) {
    for (const char* ext : {".c", ".cpp", ".cc"}) {
      const auto candidate = directory / (binary_id + ext);
      if (fs::exists(candidate)) {
        write_text_file(output, read_text_file(candidate));
        return;
      }
    }
    throw std::runtime_error(fmt::format("adapter {}: no output for {} in {}", name, binary_id, directory.string()));
  }
  const std::map<std::string, std::string> vars = {
      {"binary", binary.string()}, {"output", output.string()}, {"binary_id", binary_id}};
  std::vector<std::string> argv;
  for (const auto& part : split_command(command)) argv.push_back(substitute(part, vars));
  if (output.has_parent_path()) fs::create_directories(output.parent_path());
  ProcessOptions opts;
  opts.timeout = timeout;
  const auto r = run_process(argv, opts);
  if (!r.spawned) throw std::runtime_error(fmt::format("adapter {}: cannot run {}", name, argv.front()));
  if (r.timed_out) throw std::runtime_error(fmt::format("adapter {}: timed out on {}", name, binary_id));
  if (!r.exited_ok() || !fs::exists(output)) {
    throw std::runtime_error(fmt::format("adapter {}: failed on {} (exit {}): {}", name, binary_id, r.exit_code,
                                         trim(r.stderr_text)));
  }
}

void to_json(json& j, const DecompilerAdapter& a) {
  j = json{{"name", a.name},
           {"mode", to_string(a.mode)},
           {"unit", to_string(a.unit)},
           {"timeout_s", a.timeout.count()}};
  if (a.mode == AdapterMode::DirectoryOfOutputs) {
    j["directory"] = a.directory.string();
  } else {
    j["command"] = a.command;
  }
}

void from_json(const json& j, DecompilerAdapter& a) {
  a.name = j.at("name").get<std::string>();
  const auto mode = j.value("mode", std::string("directory"));
  if (mode == "directory") {
    a.mode = AdapterMode::DirectoryOfOutputs;
  } else if (mode == "external-command") {
    a.mode = AdapterMode::ExternalCommand;
  } else {
    throw ValidationError(fmt::format("adapter {}: unknown mode '{}'", a.name, mode));
  }
  const auto unit = j.value("unit", std::string("whole-program"));
  if (unit == "whole-program") {
    a.unit = AdapterUnit::WholeProgram;
  } else if (unit == "function") {
    a.unit = AdapterUnit::FunctionGranularity;
  } else {
    throw ValidationError(fmt::format("adapter {}: unknown unit '{}'", a.name, unit));
  }
  a.directory = j.value("directory", std::string());
  a.command = j.value("command", std::string());
  a.timeout = std::chrono::seconds(j.value("timeout_s", 600));
}

}  // namespace decompeval
