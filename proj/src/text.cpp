#include "finespan/text.hpp"

namespace finespan::text {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

int sequence_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 0;
}

}  // namespace

char32_t next_code_point(std::string_view s, std::size_t& pos) {
  const auto lead = static_cast<unsigned char>(s[pos]);
  const int len = sequence_length(lead);
  if (len == 0 || pos + len > s.size()) {
    ++pos;
    return kReplacement;
  }
  if (len == 1) {
    ++pos;
    return lead;
  }
  char32_t cp = lead & (0x7F >> len);
  for (int i = 1; i < len; ++i) {
    const auto cont = static_cast<unsigned char>(s[pos + i]);
    if ((cont & 0xC0) != 0x80) {
      ++pos;
      return kReplacement;
    }
    cp = (cp << 6) | (cont & 0x3F);
  }
  pos += len;
  return cp;
}

char32_t previous_code_point(std::string_view s, std::size_t pos) {
  if (pos == 0) return 0;
  std::size_t start = pos - 1;
  while (start > 0 && pos - start < 4 &&
         (static_cast<unsigned char>(s[start]) & 0xC0) == 0x80)
    --start;
  std::size_t cursor = start;
  const char32_t cp = next_code_point(s, cursor);
  return cursor == pos ? cp : kReplacement;
}

std::u32string to_u32(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t pos = 0; pos < s.size();) out.push_back(next_code_point(s, pos));
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string to_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) append_utf8(out, cp);
  return out;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_punct(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  switch (cp) {
    case 0x00A1:  // ¡
    case 0x00A7:  // §
    case 0x00AB:  // «
    case 0x00B7:  // ·
    case 0x00BB:  // »
    case 0x00BF:  // ¿
      return true;
    default:
      break;
  }
  // General Punctuation block: dashes, quotes, ellipsis, bullets.
  return cp >= 0x2010 && cp <= 0x2027;
}

bool is_digit(char32_t cp) { return cp >= '0' && cp <= '9'; }

bool is_letter(char32_t cp) {
  if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  if (cp == 0x00AA || cp == 0x00BA) return true;  // ª º
  if (cp >= 0x00C0 && cp <= 0x024F) return cp != 0x00D7 && cp != 0x00F7;
  // Greek, Cyrillic and beyond: treat as letters so they never split words.
  return cp >= 0x0370 && !(cp >= 0x2000 && cp <= 0x2BFF);
}

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 32;
  // Latin Extended-A alternates upper/lower in pairs.
  if (cp >= 0x0100 && cp <= 0x017F && cp % 2 == 0 && cp != 0x0130) return cp + 1;
  return cp;
}

char32_t strip_accent(char32_t cp) {
  if (cp < 0x00C0 || cp > 0x00FF) return cp;
  static constexpr char kBase[] =
      "AAAAAAACEEEEIIII"  // C0-CF
      "DNOOOOO*OUUUUYTs"  // D0-DF
      "aaaaaaaceeeeiiii"  // E0-EF
      "dnooooo/ouuuuyty";  // F0-FF
  const char base = kBase[cp - 0x00C0];
  if (base == '*' || base == '/' || base == 'T' || base == 't' || base == 's') return cp;
  return static_cast<char32_t>(base);
}

std::string lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t pos = 0; pos < s.size();) append_utf8(out, to_lower(next_code_point(s, pos)));
  return out;
}

std::string fold(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t pos = 0; pos < s.size();)
    append_utf8(out, strip_accent(to_lower(next_code_point(s, pos))));
  return out;
}

bool is_all_punct(std::string_view s) {
  if (s.empty()) return false;
  for (std::size_t pos = 0; pos < s.size();)
    if (!is_punct(next_code_point(s, pos))) return false;
  return true;
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::pair<std::size_t, std::size_t> core_range(std::string_view token) {
  const auto strippable = [](char32_t cp) { return is_punct(cp) && cp != '%' && cp != '$'; };
  std::size_t begin = 0;
  while (begin < token.size()) {
    std::size_t next = begin;
    if (!strippable(next_code_point(token, next))) break;
    begin = next;
  }
  std::size_t end = token.size();
  while (end > begin) {
    const char32_t cp = previous_code_point(token, end);
    if (!strippable(cp)) break;
    std::size_t width = 1;
    while (width < end && (static_cast<unsigned char>(token[end - width]) & 0xC0) == 0x80) ++width;
    end -= width;
  }
  if (begin >= end) return {0, 0};
  return {begin, end};
}

bool at_word_boundary(std::string_view s, std::size_t pos) {
  if (pos == 0 || pos >= s.size()) return true;
  std::size_t cursor = pos;
  const char32_t after = next_code_point(s, cursor);
  return !(is_alnum(previous_code_point(s, pos)) && is_alnum(after));
}

}  // namespace finespan::text
