#include "triage/lexicons.hpp"

#include <fstream>
#include <sstream>

#include "triage/error.hpp"
#include "triage/text.hpp"

namespace triage {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

bool parse_emotion(std::string_view name, Emotion& out) {
  if (name == "anger") out = Emotion::kAnger;
  else if (name == "disgust") out = Emotion::kDisgust;
  else if (name == "fear") out = Emotion::kFear;
  else if (name == "sadness") out = Emotion::kSadness;
  else return false;
  return true;
}

}  // namespace

std::string_view to_string(Emotion emotion) {
  switch (emotion) {
    case Emotion::kAnger:
      return "anger";
    case Emotion::kDisgust:
      return "disgust";
    case Emotion::kFear:
      return "fear";
    case Emotion::kSadness:
      return "sadness";
  }
  return "unknown";
}

std::string_view to_string(CandidateSource source) {
  switch (source) {
    case CandidateSource::kHarassmentKeyword:
      return "harassment_kw";
    case CandidateSource::kEmotionLexicon:
      return "emotion_lex";
    case CandidateSource::kFeelKeyword:
      return "feel_kw";
    case CandidateSource::kQuestion:
      return "question";
    case CandidateSource::kAdviceKeyword:
      return "advice_kw";
  }
  return "unknown";
}

EmotionLexicon::EmotionLexicon(std::map<std::string, std::set<Emotion>> entries) {
  for (auto& [word, tags] : entries) {
    if (tags.empty()) continue;
    entries_.emplace(text::to_lower(word), std::move(tags));
  }
}

const std::set<Emotion>* EmotionLexicon::find(std::string_view word) const {
  const auto it = entries_.find(word);
  return it == entries_.end() ? nullptr : &it->second;
}

EmotionLexicon parse_emotion_lexicon(std::string_view contents) {
  std::map<std::string, std::set<Emotion>> entries;
  std::size_t line_number = 0;
  for (const std::string& raw : text::split(contents, '\n')) {
    ++line_number;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = text::split(line, '\t');
    if (fields.size() != 3) {
      throw DataError("emotion lexicon line " + std::to_string(line_number) +
                      ": expected word<TAB>emotion<TAB>flag");
    }
    const std::string flag(text::trim(fields[2]));
    if (flag != "0" && flag != "1") {
      throw DataError("emotion lexicon line " + std::to_string(line_number) + ": flag must be 0 or 1");
    }
    Emotion emotion;
    if (flag == "1" && parse_emotion(text::trim(fields[1]), emotion)) {
      entries[text::to_lower(text::trim(fields[0]))].insert(emotion);
    }
  }
  return EmotionLexicon(std::move(entries));
}

EmotionLexicon load_emotion_lexicon(const std::filesystem::path& path) {
  return parse_emotion_lexicon(read_file(path));
}

ExpansionResult expand_synonyms(const KeywordSet& seeds, std::string_view thesaurus) {
  std::map<std::string, std::vector<std::string>> entries;
  std::size_t line_number = 0;
  for (const std::string& raw : text::split(thesaurus, '\n')) {
    ++line_number;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw DataError("thesaurus line " + std::to_string(line_number) +
                      ": expected headword<TAB>synonyms");
    }
    auto& synonyms = entries[text::to_lower(text::trim(line.substr(0, tab)))];
    for (const std::string& synonym : text::split(line.substr(tab + 1), ',')) {
      synonyms.push_back(synonym);
    }
  }

  ExpansionResult result;
  std::vector<std::string> terms(seeds.terms().begin(), seeds.terms().end());
  for (const std::string& seed : seeds.terms()) {
    const std::string headword = seed.back() == '*' ? seed.substr(0, seed.size() - 1) : seed;
    const auto it = entries.find(headword);
    if (it == entries.end()) {
      result.warnings.push_back("seed '" + seed + "' not found in thesaurus; kept without expansion");
      continue;
    }
    for (std::string synonym : it->second) {
      if (text::trim(synonym).empty()) continue;
      if (auto message = validate_term(synonym); !message.empty()) {
        result.warnings.push_back("synonym of '" + seed + "' skipped: " + message);
        continue;
      }
      terms.push_back(std::move(synonym));
    }
  }
  result.set = KeywordSet(seeds.name(), terms);
  return result;
}

ExpansionResult expand_synonyms(const KeywordSet& seeds, const std::filesystem::path& thesaurus) {
  return expand_synonyms(seeds, std::string_view(read_file(thesaurus)));
}

std::vector<std::string> match_keywords(std::string_view sentence, const KeywordSet& set) {
  return set.match(sentence);
}

void to_json(nlohmann::json& j, const CandidateRecord& record) {
  nlohmann::json sources = nlohmann::json::array();
  for (auto source : record.sources) sources.push_back(std::string(to_string(source)));
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [source, term] : record.matched_terms) {
    terms.push_back({std::string(to_string(source)), term});
  }
  j = nlohmann::json{{"post_id", record.sentence.post_id},
                     {"index", record.sentence.index},
                     {"text", record.text},
                     {"sources", sources},
                     {"matched_terms", terms}};
}

Lexicons load_lexicons(const std::filesystem::path& directory) {
  return Lexicons{load_keyword_set(directory / "harassment.txt"),
                  load_keyword_set(directory / "feel.txt"),
                  load_keyword_set(directory / "advice.txt"),
                  load_emotion_lexicon(directory / "emotions.tsv")};
}

CandidateRecord classify_candidate(const Sentence& sentence, const Lexicons& lexicons) {
  CandidateRecord record{key_of(sentence), sentence.text, {}, {}};
  const auto words = text::words(sentence.text);
  auto add_keywords = [&](const KeywordSet& set, CandidateSource source) {
    for (auto& term : set.match_words(words)) {
      record.sources.insert(source);
      record.matched_terms.emplace_back(source, std::move(term));
    }
  };
  add_keywords(lexicons.harassment, CandidateSource::kHarassmentKeyword);
  std::set<std::string> emotional;
  for (const auto& word : words) {
    if (lexicons.emotions.find(word) != nullptr && emotional.insert(word).second) {
      record.sources.insert(CandidateSource::kEmotionLexicon);
      record.matched_terms.emplace_back(CandidateSource::kEmotionLexicon, word);
    }
  }
  add_keywords(lexicons.feel, CandidateSource::kFeelKeyword);
  const auto trimmed = text::trim(sentence.text);
  if (!trimmed.empty() && trimmed.back() == '?') {
    record.sources.insert(CandidateSource::kQuestion);
    record.matched_terms.emplace_back(CandidateSource::kQuestion, std::string());
  }
  add_keywords(lexicons.advice, CandidateSource::kAdviceKeyword);
  return record;
}

std::vector<CandidateRecord> mine_candidates(const std::vector<Sentence>& sentences,
                                             const Lexicons& lexicons) {
  std::vector<CandidateRecord> out;
  for (const Sentence& sentence : sentences) {
    auto record = classify_candidate(sentence, lexicons);
    if (!record.sources.empty()) out.push_back(std::move(record));
  }
  return out;
}

bool is_keyword_free(const Sentence& sentence, const Lexicons& lexicons) {
  return classify_candidate(sentence, lexicons).sources.empty();
}

}  // namespace triage
