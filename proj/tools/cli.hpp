#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ravenx::cli {

/// Entry point of the `ravenx` tool; returns the process exit code.
int run(const std::vector<std::string>& args);

/// 64-bit FNV-1a of the file contents, as 16 hex digits.
std::string fnv1a_file(const std::filesystem::path& path);

}  // namespace ravenx::cli
