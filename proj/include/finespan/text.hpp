#pragma once

// UTF-8 helpers shared by the tokenizer, the annotators and the evaluators.
// Only the Latin ranges that occur in Portuguese text get case and accent
// folding; everything else passes through unchanged.

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>

namespace finespan::text {

/// Decodes the code point starting at byte `pos` and advances `pos` past it.
/// Invalid sequences decode as U+FFFD and consume one byte.
char32_t next_code_point(std::string_view s, std::size_t& pos);

/// Code point ending just before byte `pos`; U+0000 when `pos` is 0.
char32_t previous_code_point(std::string_view s, std::size_t pos);

std::u32string to_u32(std::string_view s);
std::string to_utf8(std::u32string_view s);
void append_utf8(std::string& out, char32_t cp);

bool is_space(char c);
bool is_punct(char32_t cp);
bool is_digit(char32_t cp);
bool is_letter(char32_t cp);
inline bool is_alnum(char32_t cp) { return is_letter(cp) || is_digit(cp); }

/// True when the string is non-empty and every code point is punctuation.
bool is_all_punct(std::string_view s);

char32_t to_lower(char32_t cp);
char32_t strip_accent(char32_t cp);

std::string lower(std::string_view s);
/// Lowercase plus accent stripping.
std::string fold(std::string_view s);

/// Trims ASCII whitespace on both ends.
std::string_view trim(std::string_view s);

/// Byte range [first, second) of `token` left after removing leading and
/// trailing punctuation. `%` and `$` are kept since they belong to
/// percentages and currency amounts. Returns {0, 0} for all-punctuation
/// tokens.
std::pair<std::size_t, std::size_t> core_range(std::string_view token);

/// True when byte offset `pos` sits on a word edge: the code points on
/// either side are not both alphanumeric.
bool at_word_boundary(std::string_view s, std::size_t pos);

}  // namespace finespan::text
