#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace shapr::io {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_exact(double value);

/// Decimal text with the given number of significant digits.
std::string format_sig(double value, int digits);

/// Rounds a value to the given number of significant digits (what format_sig + parse yields).
double round_sig(double value, int digits);

/// Strict full-string parse; returns false on any trailing garbage or non-finite result.
bool parse_double(std::string_view text, double& out);
bool parse_u64(std::string_view text, unsigned long long& out);

std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

std::string read_file(const std::filesystem::path& path);

/// Writes to a temporary sibling file and renames it over `path`, so readers never
/// observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace shapr::io
