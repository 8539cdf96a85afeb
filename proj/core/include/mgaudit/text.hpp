#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mgaudit::text {

/// Canonical key for lemmas and list entries: surrounding whitespace trimmed,
/// NFC-composed, lowercased, typographic apostrophes folded to '\''.
std::string normalize_lemma(std::string_view s);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

struct CodePoint {
  char32_t value;
  std::size_t begin;  // byte offset
  std::size_t end;
};

/// Decodes UTF-8; malformed bytes decode to U+FFFD covering one byte.
std::vector<CodePoint> decode_utf8(std::string_view s);

bool is_letter(char32_t c);
bool is_upper(char32_t c);
bool is_lower(char32_t c);
bool is_alnum(char32_t c);

struct WordToken {
  std::string lower;  // lowercased, NFC
  std::size_t begin;  // byte span in the source text
  std::size_t end;
};

/// Maximal runs of letters and digits. Apostrophes, hyphens, punctuation and
/// whitespace all separate tokens, so "quelqu'un" yields {"quelqu", "un"}.
std::vector<WordToken> word_tokens(std::string_view s);

/// Just the lowercased strings of word_tokens().
std::vector<std::string> word_strings(std::string_view s);

}  // namespace mgaudit::text
