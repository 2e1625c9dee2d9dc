#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lwf {

enum class Language { En, Zh };

std::string_view to_string(Language lang);
Language parse_language(std::string_view s);

/// Decodes the next code point starting at `pos` and advances it. Malformed
/// sequences yield U+FFFD and consume a single byte.
char32_t next_codepoint(std::string_view s, std::size_t& pos);

bool is_cjk(char32_t cp);
bool is_latin_letter(char32_t cp);

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
std::string join(std::span<const std::string> parts, std::string_view sep);
bool starts_with_icase(std::string_view s, std::string_view prefix);

/// Replaces every occurrence of `placeholder` in `tmpl`. Substituted text is
/// never rescanned, so values containing other placeholders stay literal.
std::string substitute(std::string_view tmpl,
                       std::span<const std::pair<std::string_view, std::string_view>> values);

}  // namespace lwf
