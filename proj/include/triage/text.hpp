#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace triage::text {

/// A "letter" is an ASCII letter or any non-ASCII code point outside the
/// Latin-1 and General Punctuation blocks. Invalid UTF-8 bytes count as letters.
bool is_letter(char32_t code_point);

/// Lowercases ASCII letters only; other bytes are copied through.
std::string to_lower(std::string_view s);

std::string_view trim(std::string_view s);

bool has_internal_whitespace(std::string_view s);

/// Lowercased words for rule matching. A word is a maximal run of letters;
/// an apostrophe (' or U+2019) between two letters stays inside the word.
std::vector<std::string> words(std::string_view s);

/// Lowercased tokens for featurization and dictionary scoring: split on every
/// non-letter (apostrophes included), drop tokens shorter than min_length.
std::vector<std::string> tokens(std::string_view s, std::size_t min_length);

/// Token rule used by the classifier featurizers.
inline std::vector<std::string> feature_tokens(std::string_view s) { return tokens(s, 2); }

std::vector<std::string> split(std::string_view s, char delimiter);

}  // namespace triage::text
