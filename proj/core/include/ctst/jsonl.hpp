#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ctst::io {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path);
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Writes to a sibling temp file and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// One compact object per line, LF terminated. Keys are sorted (nlohmann default).
std::string to_jsonl(const std::vector<json>& rows);
std::vector<json> parse_jsonl(std::string_view content, const std::string& source_name);
std::vector<json> read_jsonl(const std::filesystem::path& path);

}  // namespace ctst::io
