#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "triage/keywords.hpp"
#include "triage/labels.hpp"

namespace triage {

/// Named word categories in the open "[category]" section format.
class PsychoDictionary {
 public:
  PsychoDictionary() = default;
  PsychoDictionary(std::string name, std::map<std::string, KeywordSet> categories);

  const std::string& name() const { return name_; }
  const std::map<std::string, KeywordSet>& categories() const { return categories_; }
  std::vector<std::string> category_names() const;

 private:
  std::string name_;
  std::map<std::string, KeywordSet> categories_;
};

/// "[category]" headers, one entry per line, '#' comments. Duplicate entries
/// are merged; a malformed header or an entry outside any section throws
/// DataError with the line number.
PsychoDictionary parse_dictionary(std::string_view contents, std::string name);
PsychoDictionary load_dictionary(const std::filesystem::path& path);

/// Category names the reports expect; dictionaries may add more.
const std::vector<std::string>& standard_psycho_categories();

/// Tokens for scoring: lowercase, split on non-letters, no length filter.
std::vector<std::string> psycho_tokens(std::string_view sentence);

struct SentenceScores {
  std::map<std::string, double> percent;  // 100 * hits / tokens
  std::size_t tokens = 0;
  bool empty = false;  // no tokens; every score is 0
};

SentenceScores score_sentence(std::string_view sentence, const PsychoDictionary& dictionary);

struct ReportCell {
  double mean = 0.0;  // NaN when n == 0
  std::size_t n = 0;
};

/// Labeled text to score; `labels` picks the sentence categories it counts toward.
struct ScoredInput {
  std::string text;
  LabelVector labels;
};

struct PsychoReport {
  std::vector<std::string> dictionary_categories;
  std::array<std::map<std::string, ReportCell>, kCategoryCount> rows;
  std::array<std::size_t, kCategoryCount> sentences{};
  std::string label_source;  // "gold" or "model"

  /// tone_pos - tone_neg. A simple proxy, not the LIWC tone composite.
  double tone_proxy(Category c) const;
};

PsychoReport category_report(std::span<const ScoredInput> sentences, const PsychoDictionary& dictionary,
                             std::string label_source = "gold");

/// Matrix of means: header "category,<dict categories...>,tone_proxy_nonliwc,n"; NA for empty rows.
std::string report_csv(const PsychoReport& report);
nlohmann::json report_json(const PsychoReport& report);

}  // namespace triage
