#include "triage/text.hpp"

#include <cctype>

namespace triage::text {
namespace {

struct Decoded {
  char32_t code_point;
  std::size_t length;
};

// Malformed sequences decode as a single byte with code point >= 0x80 so
// they are treated as letters rather than silently dropped.
Decoded decode(std::string_view s, std::size_t pos) {
  const auto lead = static_cast<unsigned char>(s[pos]);
  if (lead < 0x80) return {lead, 1};
  std::size_t length = 0;
  char32_t cp = 0;
  if ((lead & 0xE0) == 0xC0) {
    length = 2;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    length = 3;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    length = 4;
    cp = lead & 0x07;
  } else {
    return {0xFFFD, 1};
  }
  if (pos + length > s.size()) return {0xFFFD, 1};
  for (std::size_t i = 1; i < length; ++i) {
    const auto cont = static_cast<unsigned char>(s[pos + i]);
    if ((cont & 0xC0) != 0x80) return {0xFFFD, 1};
    cp = (cp << 6) | (cont & 0x3F);
  }
  return {cp, length};
}

bool is_apostrophe(char32_t cp) { return cp == U'\'' || cp == U'’'; }

template <typename Emit>
void scan_words(std::string_view s, bool join_apostrophes, Emit&& emit) {
  std::string current;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const Decoded d = decode(s, pos);
    if (is_letter(d.code_point)) {
      for (std::size_t i = 0; i < d.length; ++i) {
        current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[pos + i]))));
      }
      pos += d.length;
      continue;
    }
    if (join_apostrophes && is_apostrophe(d.code_point) && !current.empty() &&
        pos + d.length < s.size() && is_letter(decode(s, pos + d.length).code_point)) {
      current.append(s.substr(pos, d.length));
      pos += d.length;
      continue;
    }
    if (!current.empty()) {
      emit(std::move(current));
      current.clear();
    }
    pos += d.length;
  }
  if (!current.empty()) emit(std::move(current));
}

}  // namespace

bool is_letter(char32_t cp) {
  if (cp < 0x80) return (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z');
  if (cp >= 0x80 && cp <= 0xBF) return false;  // Latin-1 controls and punctuation
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x206F) return false;  // General Punctuation
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
  if (cp == 0xFEFF) return false;
  return true;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool has_internal_whitespace(std::string_view s) {
  for (char c : trim(s)) {
    if (std::isspace(static_cast<unsigned char>(c))) return true;
  }
  return false;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  scan_words(s, true, [&](std::string&& w) { out.push_back(std::move(w)); });
  return out;
}

std::vector<std::string> tokens(std::string_view s, std::size_t min_length) {
  std::vector<std::string> out;
  scan_words(s, false, [&](std::string&& w) {
    if (w.size() >= min_length) out.push_back(std::move(w));
  });
  return out;
}

std::vector<std::string> split(std::string_view s, char delimiter) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = s.find(delimiter, start);
    if (end == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, end - start));
    start = end + 1;
  }
}

}  // namespace triage::text
