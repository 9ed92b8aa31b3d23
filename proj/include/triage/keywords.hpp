#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace triage {

/// A named set of lowercase terms. A term is a literal word or a stem with a
/// trailing '*' that matches any word beginning with the stem. Matching is
/// whole-word and case-insensitive over text::words().
class KeywordSet {
 public:
  KeywordSet() = default;

  /// Normalizes (trim, lowercase, dedupe) and validates every term.
  /// Throws DataError on an empty term, internal whitespace or a non-terminal '*'.
  KeywordSet(std::string name, const std::vector<std::string>& terms);

  const std::string& name() const { return name_; }
  const std::set<std::string>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  bool contains(std::string_view term) const { return terms_.count(std::string(term)) != 0; }

  /// Matched terms in order of first occurrence in the text; each term once.
  std::vector<std::string> match(std::string_view text) const;
  std::vector<std::string> match_words(const std::vector<std::string>& words) const;
  bool matches_word(std::string_view word) const;

  KeywordSet united(const KeywordSet& other, std::string name) const;

 private:
  void index_term(const std::string& term);

  std::string name_;
  std::set<std::string> terms_;
  std::unordered_set<std::string> literals_;
  std::unordered_set<std::string> stems_;
  std::size_t max_stem_ = 0;
};

/// Normalizes one term; returns an error message instead of throwing so
/// loaders can attach line numbers. Empty string on success.
std::string validate_term(std::string& term);

/// One entry per line, '#' comments, blank lines skipped.
KeywordSet load_keyword_set(const std::filesystem::path& path);
KeywordSet parse_keyword_set(std::string_view contents, std::string name);
void write_keyword_set(const std::filesystem::path& path, const KeywordSet& set,
                       std::string_view header_comment = {});

}  // namespace triage
