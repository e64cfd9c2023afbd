#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace ocrbench {

/// Decodes UTF-8 into code points. Invalid sequences become U+FFFD.
std::u32string to_u32(std::string_view utf8);

std::string to_utf8(std::u32string_view text);

void append_utf8(std::string& out, char32_t cp);

/// Number of code points in a UTF-8 string (invalid bytes count as one each).
std::size_t count_code_points(std::string_view utf8);

/// Simple (1:1) lowercase mapping; keeps code point offsets stable.
std::u32string lowercase(std::u32string_view text);

/// Replaces invalid UTF-8 sequences with U+FFFD.
std::string sanitize_utf8(std::string_view bytes);

std::string to_nfc(std::string_view utf8);
bool is_nfc(std::string_view utf8);

bool is_alphanumeric(char32_t cp);
bool is_white_space(char32_t cp);
bool is_line_break(char32_t cp);
bool has_emoji_presentation(char32_t cp);

}  // namespace ocrbench
