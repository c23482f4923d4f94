// io.hpp - locale-independent number formatting, CSV helpers, checksums

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace spinbath {

// Shortest-round-trip-or-17-significant-digit decimal form of x,
// locale-independent (std::to_chars).
std::string format_double(double x);

// Strict double parse of an entire token; throws ConfigError on junk.
double parse_double(std::string_view token, std::string_view context);

// FNV-1a 64-bit over a byte buffer, hex string form.
std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

void write_file(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// Splits on a delimiter, keeping empty fields.
std::vector<std::string> split(std::string_view line, char delim);

std::string trim(std::string_view s);

}  // namespace spinbath
