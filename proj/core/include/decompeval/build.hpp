#pragma once

#include "decompeval/manifest.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace decompeval {

/// The toolchain for a configuration cannot be resolved on this host. Distinct
/// from a compile failure: nothing was compiled.
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The harness itself misbehaved (timeout, spawn failure).
class HarnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SourceLanguage { C, Cxx };
/// By extension: .cc/.cpp/.cxx/.C are C++, everything else C.
SourceLanguage language_of(const std::filesystem::path& source);

/// Per (compiler, architecture) driver and target-selection flags. Kept as
/// data so cross toolchains can be swapped without touching code.
struct ToolchainEntry {
  std::string c_driver;
  std::string cxx_driver;
  std::vector<std::string> arch_flags;
};

class ToolchainTable {
 public:
  /// Host gcc/clang plus the usual Debian cross prefixes. Environment
  /// overrides: DECOMPEVAL_<COMPILER>_<ARCH>_CC / _CXX (e.g. DECOMPEVAL_GCC_ARM64_CC).
  static ToolchainTable defaults();

  [[nodiscard]] const ToolchainEntry& entry(Compiler c, Arch a) const;
  void set(Compiler c, Arch a, ToolchainEntry e);

 private:
  std::map<std::pair<Compiler, Arch>, ToolchainEntry> entries_;
};

/// Pure mapping from a configuration to compiler flags: exactly one -O flag,
/// -g iff WithDebug (-s otherwise), the architecture flags, and the flags that
/// pin diagnostics to plain text without caret context.
std::vector<std::string> flags_for(const BuildConfig& config, const ToolchainTable& table = ToolchainTable::defaults());

enum class PhaseMode { CompileOnly, CompileAndLink };

struct CompileInvocation {
  std::vector<std::filesystem::path> source_paths;
  BuildConfig config;
  std::filesystem::path output_path;
  std::vector<std::string> extra_flags;
  PhaseMode phase_mode = PhaseMode::CompileAndLink;
};

struct CompileResult {
  bool compile_ok = false;
  std::optional<bool> link_ok;  // absent when compile failed or CompileOnly
  std::string raw_stderr;       // compile-phase stderr, or link-phase stderr once compile passed
  int exit_code = 0;
  std::int64_t duration_ms = 0;
  std::vector<std::vector<std::string>> commands;

  [[nodiscard]] bool produced_binary() const { return compile_ok && link_ok.value_or(false); }
};

void to_json(nlohmann::json& j, const CompileResult& r);
void from_json(const nlohmann::json& j, CompileResult& r);

class BuildHarness {
 public:
  explicit BuildHarness(ToolchainTable table = ToolchainTable::defaults(),
                        std::chrono::milliseconds timeout = std::chrono::seconds(120));

  /// Compiles each source with `-c` into objects next to output_path, then
  /// links (CompileAndLink). Throws ConfigurationError when the toolchain for
  /// inv.config is unusable, HarnessError on timeout.
  CompileResult build(const CompileInvocation& inv) const;

  /// The exact argv lists build() would run, for recording and comparison.
  std::vector<std::vector<std::string>> commands_for(const CompileInvocation& inv) const;

  /// Checks once per (compiler, arch, language) that the driver can compile
  /// and link a trivial program; the answer is cached.
  void ensure_toolchain(Compiler c, Arch a, SourceLanguage lang) const;

  [[nodiscard]] const ToolchainTable& table() const { return table_; }
  [[nodiscard]] std::chrono::milliseconds timeout() const { return timeout_; }

 private:
  const std::string& driver_for(const CompileInvocation& inv) const;

  ToolchainTable table_;
  std::chrono::milliseconds timeout_;
  mutable std::mutex probe_mu_;
  mutable std::map<std::tuple<Compiler, Arch, SourceLanguage>, std::string> probe_cache_;  // "" = usable
};

enum class BuildStatus { Built, CompileFailed, LinkFailed, ConfigurationError, HarnessError };
std::string_view to_string(BuildStatus s);

struct BuildRecord {
  MatrixEntry entry;
  BuildStatus status = BuildStatus::Built;
  std::optional<CompileResult> result;
  std::string error;
  std::filesystem::path binary_path;
};

/// One record per matrix entry, in entry order, whatever order the workers
/// finish in. Per-entry failures are recorded, never thrown.
std::vector<BuildRecord> build_matrix(const BuildHarness& harness, const Manifest& manifest, const BuildMatrix& matrix,
                                      const std::filesystem::path& out_dir, unsigned jobs = 1);

}  // namespace decompeval
