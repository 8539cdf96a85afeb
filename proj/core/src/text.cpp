#include "mgaudit/text.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "mgaudit/common.hpp"

namespace mgaudit::text {

namespace {

const icu::Normalizer2& nfc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || n == nullptr) throw Error("ICU NFC normalizer unavailable");
  return *n;
}

std::string nfc_lower(std::string_view s) {
  auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString normalized = nfc().normalize(u, status);
  if (U_FAILURE(status)) throw DataError("NFC normalization failed");
  normalized.toLower(icu::Locale::getFrench());
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

bool is_space_byte(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space_byte(s[b])) ++b;
  while (e > b && is_space_byte(s[e - 1])) --e;
  // U+00A0 no-break space is common in French typography.
  while (e - b >= 2 && s.substr(b, 2) == "\xC2\xA0") b += 2;
  while (e - b >= 2 && s.substr(e - 2, 2) == "\xC2\xA0") e -= 2;
  return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) { return nfc_lower(s); }

std::string normalize_lemma(std::string_view s) {
  std::string lowered = nfc_lower(trim(s));
  std::string out;
  out.reserve(lowered.size());
  for (std::size_t i = 0; i < lowered.size();) {
    // U+2019 RIGHT SINGLE QUOTATION MARK and U+02BC MODIFIER LETTER APOSTROPHE
    if (lowered.compare(i, 3, "\xE2\x80\x99") == 0) {
      out.push_back('\'');
      i += 3;
    } else if (lowered.compare(i, 2, "\xCA\xBC") == 0) {
      out.push_back('\'');
      i += 2;
    } else {
      out.push_back(lowered[i++]);
    }
  }
  return out;
}

std::vector<CodePoint> decode_utf8(std::string_view s) {
  std::vector<CodePoint> out;
  out.reserve(s.size());
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  const auto length = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < length) {
    int32_t start = i;
    UChar32 c = 0;
    U8_NEXT(bytes, i, length, c);
    if (c < 0) {
      c = 0xFFFD;
      i = start + 1;
    }
    out.push_back({static_cast<char32_t>(c), static_cast<std::size_t>(start),
                   static_cast<std::size_t>(i)});
  }
  return out;
}

bool is_letter(char32_t c) { return u_isalpha(static_cast<UChar32>(c)) != 0; }
bool is_upper(char32_t c) { return u_isupper(static_cast<UChar32>(c)) != 0; }
bool is_lower(char32_t c) { return u_islower(static_cast<UChar32>(c)) != 0; }
bool is_alnum(char32_t c) {
  return u_isalpha(static_cast<UChar32>(c)) || u_isdigit(static_cast<UChar32>(c)) ||
         u_getIntPropertyValue(static_cast<UChar32>(c), UCHAR_GENERAL_CATEGORY) ==
             U_NON_SPACING_MARK;
}

std::vector<WordToken> word_tokens(std::string_view s) {
  std::vector<WordToken> tokens;
  auto cps = decode_utf8(s);
  std::size_t i = 0;
  while (i < cps.size()) {
    if (!is_alnum(cps[i].value)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < cps.size() && is_alnum(cps[j].value)) ++j;
    std::size_t begin = cps[i].begin;
    std::size_t end = cps[j - 1].end;
    tokens.push_back({nfc_lower(s.substr(begin, end - begin)), begin, end});
    i = j;
  }
  return tokens;
}

std::vector<std::string> word_strings(std::string_view s) {
  std::vector<std::string> out;
  for (auto& t : word_tokens(s)) out.push_back(std::move(t.lower));
  return out;
}

}  // namespace mgaudit::text
