#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace srmpc {

// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);
// Throws InvalidArgument when the file is missing or not valid JSON.
nlohmann::json read_json_file(const std::filesystem::path& path);

// 64-bit FNV-1a of the text, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace srmpc
