#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace treeqa::text {

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
bool starts_with_icase(std::string_view s, std::string_view prefix);

std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Truncates to at most `max_bytes` without cutting a UTF-8 sequence in half.
std::string truncate_utf8(std::string_view s, std::size_t max_bytes);

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace treeqa::text
