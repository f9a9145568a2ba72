#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace hypobench {

/// Writes `bytes` to a sibling temporary file and renames it over `path`,
/// creating parent directories. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// Reads a whole file. Throws IoError if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

}  // namespace hypobench
