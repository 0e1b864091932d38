#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace market::text {

inline constexpr char32_t kInvalidCodePoint = 0xFFFFFFFF;

// Decodes one UTF-8 sequence at `pos`, advancing it. Malformed or overlong
// input yields kInvalidCodePoint and consumes a single byte.
char32_t decode_utf8(std::string_view s, std::size_t& pos);
void append_utf8(std::string& out, char32_t cp);

bool is_valid_utf8(std::string_view s);
// Number of code points, or nullopt on malformed input.
std::optional<std::size_t> utf8_length(std::string_view s);

// Simple case mapping for Latin, Greek, Cyrillic and fullwidth Latin.
char32_t to_lower(char32_t c) noexcept;
// Lowercases valid sequences; malformed bytes pass through untouched.
std::string lower(std::string_view s);

std::string trim(std::string_view s);
std::string ascii_lower(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);

}  // namespace market::text
