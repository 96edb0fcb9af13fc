#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctst::text {

// Index of the first invalid byte, or nullopt when `s` is well-formed UTF-8.
std::optional<std::size_t> find_invalid_utf8(std::string_view s);

// Number of code points; `s` must be valid UTF-8.
std::size_t codepoint_length(std::string_view s);

// Byte offset of the code point at `cp_index` (== s.size() for one past the end).
std::size_t byte_offset_of(std::string_view s, std::size_t cp_index);

std::string_view trim(std::string_view s);
std::string trim_copy(std::string_view s);

std::vector<std::string> split(std::string_view s, std::string_view delimiter);

// 64-bit FNV-1a. Stable across platforms; used for deterministic mock output.
std::uint64_t fnv1a(std::string_view s);

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view s);

std::string to_lower(std::string_view s);

// Fixed-precision rendering ("%.Nf"), locale independent.
std::string format_fixed(double v, int decimals);

}  // namespace ctst::text
