#include "triage/psycho.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "triage/error.hpp"
#include "triage/text.hpp"

namespace triage {

PsychoDictionary::PsychoDictionary(std::string name, std::map<std::string, KeywordSet> categories)
    : name_(std::move(name)), categories_(std::move(categories)) {}

std::vector<std::string> PsychoDictionary::category_names() const {
  std::vector<std::string> names;
  for (const auto& [name, set] : categories_) names.push_back(name);
  return names;
}

PsychoDictionary parse_dictionary(std::string_view contents, std::string name) {
  std::map<std::string, std::vector<std::string>> sections;
  std::string current;
  std::size_t line_number = 0;
  auto fail = [&](const std::string& message) {
    throw DataError(name + ":" + std::to_string(line_number) + ": " + message);
  };
  for (const std::string& raw : text::split(contents, '\n')) {
    ++line_number;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) fail("malformed section header");
      const std::string section = text::to_lower(text::trim(line.substr(1, line.size() - 2)));
      if (section.empty() || text::has_internal_whitespace(section) ||
          section.find_first_of("[]") != std::string::npos) {
        fail("malformed section header");
      }
      current = section;
      sections[current];
      continue;
    }
    if (current.empty()) fail("entry outside any [category] section");
    std::string term(line);
    if (auto message = validate_term(term); !message.empty()) fail(message);
    sections[current].push_back(std::move(term));
  }
  if (sections.empty()) throw DataError(name + ": dictionary has no categories");
  std::map<std::string, KeywordSet> categories;
  for (auto& [section, terms] : sections) {
    if (terms.empty()) throw DataError(name + ": category [" + section + "] is empty");
    categories.emplace(section, KeywordSet(section, terms));
  }
  return PsychoDictionary(std::move(name), std::move(categories));
}

PsychoDictionary load_dictionary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_dictionary(buffer.str(), path.stem().string());
}

const std::vector<std::string>& standard_psycho_categories() {
  static const std::vector<std::string> names{"tone_pos", "tone_neg", "emotion", "swear",
                                              "emo_pos",  "emo_anx",  "emo_anger", "emo_sad"};
  return names;
}

std::vector<std::string> psycho_tokens(std::string_view sentence) { return text::tokens(sentence, 1); }

SentenceScores score_sentence(std::string_view sentence, const PsychoDictionary& dictionary) {
  SentenceScores scores;
  const auto tokens = psycho_tokens(sentence);
  scores.tokens = tokens.size();
  scores.empty = tokens.empty();
  for (const auto& [category, set] : dictionary.categories()) {
    std::size_t hits = 0;
    for (const auto& token : tokens) hits += set.matches_word(token) ? 1 : 0;
    scores.percent[category] =
        tokens.empty() ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(tokens.size());
  }
  return scores;
}

double PsychoReport::tone_proxy(Category c) const {
  const auto& row = rows[static_cast<std::size_t>(c)];
  const auto pos = row.find("tone_pos");
  const auto neg = row.find("tone_neg");
  if (pos == row.end() || neg == row.end()) return std::numeric_limits<double>::quiet_NaN();
  return pos->second.mean - neg->second.mean;
}

PsychoReport category_report(std::span<const ScoredInput> sentences, const PsychoDictionary& dictionary,
                             std::string label_source) {
  PsychoReport report;
  report.dictionary_categories = dictionary.category_names();
  report.label_source = std::move(label_source);
  std::array<std::map<std::string, double>, kCategoryCount> sums;
  for (const auto& input : sentences) {
    if (!input.labels.any()) continue;
    const auto scores = score_sentence(input.text, dictionary);
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      if (!input.labels[c]) continue;
      ++report.sentences[c];
      for (const auto& [category, percent] : scores.percent) sums[c][category] += percent;
    }
  }
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    for (const auto& category : report.dictionary_categories) {
      ReportCell cell;
      cell.n = report.sentences[c];
      cell.mean = cell.n == 0 ? std::numeric_limits<double>::quiet_NaN()
                              : sums[c][category] / static_cast<double>(cell.n);
      report.rows[c][category] = cell;
    }
  }
  return report;
}

std::string report_csv(const PsychoReport& report) {
  std::ostringstream out;
  out << std::setprecision(6) << std::fixed;
  out << "category";
  for (const auto& name : report.dictionary_categories) out << ',' << name;
  out << ",tone_proxy_nonliwc,n\n";
  for (Category c : kCategories) {
    const auto index = static_cast<std::size_t>(c);
    out << to_string(c);
    for (const auto& name : report.dictionary_categories) {
      const auto& cell = report.rows[index].at(name);
      if (cell.n == 0) out << ",NA";
      else out << ',' << cell.mean;
    }
    const double tone = report.tone_proxy(c);
    if (std::isnan(tone)) out << ",NA";
    else out << ',' << tone;
    out << ',' << report.sentences[index] << '\n';
  }
  return out.str();
}

nlohmann::json report_json(const PsychoReport& report) {
  nlohmann::json rows = nlohmann::json::object();
  for (Category c : kCategories) {
    const auto index = static_cast<std::size_t>(c);
    nlohmann::json row = nlohmann::json::object();
    for (const auto& name : report.dictionary_categories) {
      const auto& cell = report.rows[index].at(name);
      row[name] = {{"mean", cell.n == 0 ? nlohmann::json(nullptr) : nlohmann::json(cell.mean)},
                   {"n", cell.n}};
    }
    const double tone = report.tone_proxy(c);
    row["tone_proxy_nonliwc"] = std::isnan(tone) ? nlohmann::json(nullptr) : nlohmann::json(tone);
    rows[std::string(to_string(c))] = row;
  }
  return {{"label_source", report.label_source}, {"categories", report.dictionary_categories}, {"rows", rows}};
}

}  // namespace triage
