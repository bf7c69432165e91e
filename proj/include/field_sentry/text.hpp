#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small ASCII/UTF-8 string helpers shared across modules.
namespace field_sentry::text {

char ascii_lower(char c);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool icontains(std::string_view haystack, std::string_view needle);
bool starts_with_icase(std::string_view s, std::string_view prefix);
bool is_space(char c);
std::string_view trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
std::vector<std::string_view> split_whitespace(std::string_view s);

// Replaces ill-formed sequences with U+FFFD.
std::string sanitize_utf8(std::string_view bytes);
bool is_valid_utf8(std::string_view s);
// Number of code points, counting each ill-formed byte as one.
std::size_t utf8_length(std::string_view s);
// Largest position <= pos that does not split a code point.
std::size_t utf8_floor(std::string_view s, std::size_t pos);

void append_utf8(std::string& out, char32_t cp);

}  // namespace field_sentry::text
