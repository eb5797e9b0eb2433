#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace decompeval {

struct ProcessOptions {
  std::chrono::milliseconds timeout{std::chrono::seconds(120)};
  std::optional<std::filesystem::path> working_directory;
  std::string stdin_text;
};

struct ProcessResult {
  bool spawned = false;      // false when execvp failed (e.g. ENOENT)
  int exit_code = -1;        // valid when exited normally
  int term_signal = 0;       // non-zero when killed by a signal
  bool timed_out = false;
  std::string stdout_text;
  std::string stderr_text;
  std::int64_t duration_ms = 0;

  [[nodiscard]] bool exited_ok() const { return spawned && !timed_out && term_signal == 0 && exit_code == 0; }
  /// Abnormal termination: killed by a signal or by the timeout.
  [[nodiscard]] bool crashed() const { return spawned && (timed_out || term_signal != 0); }
};

/// Runs argv[0] (PATH lookup) with captured stdout/stderr. The child is put in
/// its own process group and the whole group is killed on timeout.
ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& options = {});

/// Resolves an executable name against PATH; absolute/relative paths are
/// checked directly.
std::optional<std::filesystem::path> find_executable(std::string_view name);

/// Splits a command template on whitespace, honouring single and double quotes.
std::vector<std::string> split_command(std::string_view command);

}  // namespace decompeval
