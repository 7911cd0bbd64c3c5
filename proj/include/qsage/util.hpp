#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace qsage {

std::string sha256_hex(std::string_view data);

std::string read_text_file(const std::filesystem::path &path);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path &path, std::string_view content);

/// Keeps the last `max_chars` characters, prefixing a marker when cut.
std::string truncate_tail(std::string_view text, std::size_t max_chars);

} // namespace qsage
