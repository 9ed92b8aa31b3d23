#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "triage/corpus.hpp"
#include "triage/keywords.hpp"

namespace triage {

enum class Emotion { kAnger, kDisgust, kFear, kSadness };

std::string_view to_string(Emotion emotion);

/// Word -> subset of {anger, disgust, fear, sadness}. Matching is exact-word.
class EmotionLexicon {
 public:
  EmotionLexicon() = default;
  explicit EmotionLexicon(std::map<std::string, std::set<Emotion>> entries);

  const std::set<Emotion>* find(std::string_view word) const;
  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, std::set<Emotion>, std::less<>>& entries() const { return entries_; }

 private:
  std::map<std::string, std::set<Emotion>, std::less<>> entries_;
};

/// NRC association layout: "word<TAB>emotion<TAB>0|1". Rows for the other NRC
/// emotions are ignored; words with no association in the four kept tags are dropped.
EmotionLexicon parse_emotion_lexicon(std::string_view contents);
EmotionLexicon load_emotion_lexicon(const std::filesystem::path& path);

struct ExpansionResult {
  KeywordSet set;
  std::vector<std::string> warnings;
};

/// Thesaurus: "headword<TAB>syn1, syn2, ...". Multi-word synonyms are skipped
/// with a warning. Returns seeds plus every synonym of every seed; seeds that
/// are absent from the thesaurus are kept and reported.
ExpansionResult expand_synonyms(const KeywordSet& seeds, std::string_view thesaurus);
ExpansionResult expand_synonyms(const KeywordSet& seeds, const std::filesystem::path& thesaurus);

std::vector<std::string> match_keywords(std::string_view sentence, const KeywordSet& set);

enum class CandidateSource { kHarassmentKeyword, kEmotionLexicon, kFeelKeyword, kQuestion, kAdviceKeyword };

std::string_view to_string(CandidateSource source);

struct CandidateRecord {
  SentenceKey sentence;
  std::string text;
  std::set<CandidateSource> sources;
  std::vector<std::pair<CandidateSource, std::string>> matched_terms;
};

void to_json(nlohmann::json& j, const CandidateRecord& record);

/// Every lexicon used for candidate mining.
struct Lexicons {
  KeywordSet harassment;
  KeywordSet feel;
  KeywordSet advice;
  EmotionLexicon emotions;
};

/// Loads harassment.txt, feel.txt, advice.txt and emotions.tsv from a directory.
Lexicons load_lexicons(const std::filesystem::path& directory);

/// Sources that fire for one sentence; empty means keyword-free.
CandidateRecord classify_candidate(const Sentence& sentence, const Lexicons& lexicons);

/// Candidates in input order; sentences with no source are omitted.
std::vector<CandidateRecord> mine_candidates(const std::vector<Sentence>& sentences,
                                             const Lexicons& lexicons);

bool is_keyword_free(const Sentence& sentence, const Lexicons& lexicons);

}  // namespace triage
