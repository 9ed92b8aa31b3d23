#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "triage/keywords.hpp"

namespace triage {

struct Post {
  std::string id;
  std::string subreddit;
  std::string title;
  std::string body;
  std::int64_t created_at = 0;  // UTC seconds
  bool deleted = false;

  bool operator==(const Post&) const = default;
};

struct Sentence {
  std::string post_id;
  std::size_t index = 0;
  std::string text;
  std::size_t offset = 0;  // byte offset into the post body; not serialized

  bool operator==(const Sentence& other) const {
    return post_id == other.post_id && index == other.index && text == other.text;
  }
};

/// Identity of a sentence within a corpus.
struct SentenceKey {
  std::string post_id;
  std::size_t index = 0;

  auto operator<=>(const SentenceKey&) const = default;
};

inline SentenceKey key_of(const Sentence& s) { return {s.post_id, s.index}; }

enum class TitleRule { kFirstPerson, kAdviceKeyword, kAdviceQuestion };

std::string_view to_string(TitleRule rule);

struct RelevanceVerdict {
  std::string post_id;
  bool relevant = false;
  std::set<TitleRule> matched_rules;

  bool operator==(const RelevanceVerdict&) const = default;
};

struct ParseIssue {
  std::size_t line = 0;
  std::string message;
};

struct ParsedPosts {
  std::vector<Post> posts;
  std::vector<ParseIssue> issues;
};

/// Reads line-delimited JSON post records. Malformed lines are collected in
/// `issues`; a repeated id throws DataError naming the id.
ParsedPosts parse_posts(std::istream& in);
ParsedPosts load_posts(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const Post& post);
void to_json(nlohmann::json& j, const Sentence& sentence);
void from_json(const nlohmann::json& j, Sentence& sentence);
void to_json(nlohmann::json& j, const RelevanceVerdict& verdict);

std::vector<Sentence> load_sentences(const std::filesystem::path& path);

// --- title heuristics ------------------------------------------------------

bool title_is_first_person(std::string_view title);
bool title_has_advice_keyword(std::string_view title, const KeywordSet& advice_keywords);

/// rape, harassment, assault and abuse with their inflected forms.
const KeywordSet& default_question_objects();
const std::set<std::string>& interrogative_starters();

bool title_is_advice_question(std::string_view title,
                              const KeywordSet& objects = default_question_objects());

RelevanceVerdict judge_title(const Post& post, const KeywordSet& advice_keywords,
                             const KeywordSet& objects = default_question_objects());

/// One verdict per non-deleted post, in input order.
std::vector<RelevanceVerdict> filter_relevant(const std::vector<Post>& posts,
                                              const KeywordSet& advice_keywords,
                                              const KeywordSet& objects = default_question_objects());

// --- sentence segmentation -------------------------------------------------

struct SplitterConfig {
  std::set<std::string> abbreviations{"mr", "mrs", "dr", "ms", "e.g", "i.e", "etc", "vs"};
};

/// Abbreviation file: one lowercase entry per line without the final period.
SplitterConfig load_splitter_config(const std::filesystem::path& abbreviations);

/// Splits after '.', '!' or '?' (plus closing quotes/brackets) when followed by
/// whitespace and then an uppercase letter, digit or opening quote. Known
/// abbreviations and ellipses never end a sentence.
std::vector<Sentence> split_sentences(std::string_view post_id, std::string_view body,
                                      const SplitterConfig& config = {});

}  // namespace triage
