#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace watt {

// Replaces `path` by writing a sibling temp file and renaming it over.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

// Non-empty lines of a text file; a missing file yields no lines.
std::vector<std::string> read_lines(const std::filesystem::path& path);

} // namespace watt
