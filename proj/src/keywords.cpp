#include "triage/keywords.hpp"

#include <fstream>
#include <sstream>

#include "triage/error.hpp"
#include "triage/text.hpp"

namespace triage {

std::string validate_term(std::string& term) {
  term = text::to_lower(text::trim(term));
  if (term.empty()) return "empty entry";
  if (text::has_internal_whitespace(term)) return "entry '" + term + "' contains whitespace";
  const auto star = term.find('*');
  if (star != std::string::npos && star != term.size() - 1) {
    return "entry '" + term + "' has a non-terminal '*'";
  }
  if (term == "*") return "entry '*' has an empty stem";
  return {};
}

KeywordSet::KeywordSet(std::string name, const std::vector<std::string>& terms)
    : name_(std::move(name)) {
  for (std::string term : terms) {
    if (auto message = validate_term(term); !message.empty()) {
      throw DataError("keyword set '" + name_ + "': " + message);
    }
    if (terms_.insert(term).second) index_term(term);
  }
}

void KeywordSet::index_term(const std::string& term) {
  if (term.back() == '*') {
    std::string stem = term.substr(0, term.size() - 1);
    max_stem_ = std::max(max_stem_, stem.size());
    stems_.insert(std::move(stem));
  } else {
    literals_.insert(term);
  }
}

bool KeywordSet::matches_word(std::string_view word) const {
  if (literals_.count(std::string(word))) return true;
  const std::size_t longest = std::min(max_stem_, word.size());
  for (std::size_t k = 1; k <= longest; ++k) {
    if (stems_.count(std::string(word.substr(0, k)))) return true;
  }
  return false;
}

std::vector<std::string> KeywordSet::match_words(const std::vector<std::string>& words) const {
  std::vector<std::string> matched;
  std::unordered_set<std::string> seen;
  auto add = [&](std::string term) {
    if (seen.insert(term).second) matched.push_back(std::move(term));
  };
  for (const std::string& word : words) {
    if (literals_.count(word)) add(word);
    const std::size_t longest = std::min(max_stem_, word.size());
    for (std::size_t k = 1; k <= longest; ++k) {
      std::string stem = word.substr(0, k);
      if (stems_.count(stem)) add(stem + '*');
    }
  }
  return matched;
}

std::vector<std::string> KeywordSet::match(std::string_view text) const {
  return match_words(text::words(text));
}

KeywordSet KeywordSet::united(const KeywordSet& other, std::string name) const {
  std::vector<std::string> all(terms_.begin(), terms_.end());
  all.insert(all.end(), other.terms_.begin(), other.terms_.end());
  return KeywordSet(std::move(name), all);
}

KeywordSet parse_keyword_set(std::string_view contents, std::string name) {
  std::vector<std::string> terms;
  std::size_t line_number = 0;
  for (std::string line : text::split(contents, '\n')) {
    ++line_number;
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    std::string term(trimmed);
    if (auto message = validate_term(term); !message.empty()) {
      throw DataError(name + ":" + std::to_string(line_number) + ": " + message);
    }
    terms.push_back(std::move(term));
  }
  if (terms.empty()) throw DataError(name + ": empty keyword set");
  return KeywordSet(std::move(name), terms);
}

KeywordSet load_keyword_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open keyword file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_keyword_set(buffer.str(), path.stem().string());
}

void write_keyword_set(const std::filesystem::path& path, const KeywordSet& set,
                       std::string_view header_comment) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write keyword file " + path.string());
  if (!header_comment.empty()) {
    for (const auto& line : text::split(header_comment, '\n')) out << "# " << line << '\n';
  }
  for (const auto& term : set.terms()) out << term << '\n';
}

}  // namespace triage
