#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace decompeval {

namespace fs = std::filesystem;

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

std::string base64_encode(std::string_view bytes);
/// Throws std::invalid_argument on malformed input.
std::string base64_decode(std::string_view text);

std::string read_text_file(const fs::path& path);
/// Writes through a temporary sibling and renames, so readers never observe
/// a half-written file.
void write_text_file(const fs::path& path, std::string_view content);

/// Replaces characters outside [A-Za-z0-9._-] with '_'.
std::string sanitize_filename(std::string_view name);

std::vector<std::string> split_lines(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string trim(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);
bool contains(std::string_view haystack, std::string_view needle);
std::string to_lower(std::string_view s);

/// Runs `fn(i)` for i in [0, n) on at most `jobs` threads. The first exception
/// thrown by any invocation is rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

/// Value of an environment variable, or empty when unset.
std::string env_or_empty(const char* name);

}  // namespace decompeval
