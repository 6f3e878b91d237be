#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chromaeeg::io {

std::string read_file(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: truncate + write, throws Io on failure.
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);
/// Fixed-point with the given number of decimals (report tables).
std::string format_fixed(double value, int decimals);

std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

/// Splits one CSV line on commas. No quoting: none of our formats need it.
std::vector<std::string_view> split_csv(std::string_view line);
/// Splits text into lines, accepting LF or CRLF, skipping a trailing empty line.
std::vector<std::string_view> split_lines(std::string_view text);

std::string_view trim(std::string_view s);

}  // namespace chromaeeg::io
