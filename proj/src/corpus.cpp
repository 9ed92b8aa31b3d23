#include "triage/corpus.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <unordered_set>

#include "triage/error.hpp"
#include "triage/text.hpp"

namespace triage {

using nlohmann::json;

std::string_view to_string(TitleRule rule) {
  switch (rule) {
    case TitleRule::kFirstPerson:
      return "first_person";
    case TitleRule::kAdviceKeyword:
      return "advice_keyword";
    case TitleRule::kAdviceQuestion:
      return "advice_question";
  }
  return "unknown";
}

namespace {

std::string string_field(const json& record, const char* name, bool required) {
  const auto it = record.find(name);
  if (it == record.end() || it->is_null()) {
    if (required) throw DataError(std::string("missing field '") + name + "'");
    return {};
  }
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  throw DataError(std::string("field '") + name + "' is not a string");
}

Post post_from_record(const json& record) {
  if (!record.is_object()) throw DataError("record is not a JSON object");
  Post post;
  post.id = string_field(record, "id", true);
  if (post.id.empty()) throw DataError("empty id");
  post.subreddit = string_field(record, "subreddit", false);
  if (!record.contains("title")) throw DataError("missing field 'title'");
  if (!record.contains("body")) throw DataError("missing field 'body'");
  post.title = string_field(record, "title", false);
  post.body = string_field(record, "body", false);
  for (const char* name : {"created_at", "created_utc"}) {
    if (const auto it = record.find(name); it != record.end() && it->is_number()) {
      post.created_at = it->get<std::int64_t>();
      break;
    }
  }
  if (const auto it = record.find("deleted"); it != record.end() && it->is_boolean()) {
    post.deleted = it->get<bool>();
  }
  const auto body = text::trim(post.body);
  if (body.empty() || body == "[deleted]" || body == "[removed]") post.deleted = true;
  if (text::trim(post.title).empty() && !post.deleted) {
    throw DataError("empty title on a post that is not deleted");
  }
  return post;
}

}  // namespace

ParsedPosts parse_posts(std::istream& in) {
  ParsedPosts result;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (text::trim(line).empty()) continue;
    Post post;
    try {
      post = post_from_record(json::parse(line));
    } catch (const json::exception& e) {
      result.issues.push_back({line_number, e.what()});
      continue;
    } catch (const DataError& e) {
      result.issues.push_back({line_number, e.what()});
      continue;
    }
    if (!seen.insert(post.id).second) {
      throw DataError("duplicate post id '" + post.id + "' at line " +
                      std::to_string(line_number));
    }
    result.posts.push_back(std::move(post));
  }
  return result;
}

ParsedPosts load_posts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_posts(in);
}

void to_json(json& j, const Post& post) {
  j = json{{"id", post.id},       {"subreddit", post.subreddit},   {"title", post.title},
           {"body", post.body},   {"created_at", post.created_at}, {"deleted", post.deleted}};
}

void to_json(json& j, const Sentence& sentence) {
  j = json{{"post_id", sentence.post_id}, {"index", sentence.index}, {"text", sentence.text}};
}

void from_json(const json& j, Sentence& sentence) {
  sentence.post_id = j.at("post_id").get<std::string>();
  sentence.index = j.at("index").get<std::size_t>();
  sentence.text = j.at("text").get<std::string>();
}

void to_json(json& j, const RelevanceVerdict& verdict) {
  json rules = json::array();
  for (TitleRule rule : verdict.matched_rules) rules.push_back(std::string(to_string(rule)));
  j = json{{"post_id", verdict.post_id}, {"relevant", verdict.relevant}, {"matched_rules", rules}};
}

std::vector<Sentence> load_sentences(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<Sentence> sentences;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (text::trim(line).empty()) continue;
    try {
      sentences.push_back(json::parse(line).get<Sentence>());
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_number) + ": " + e.what());
    }
  }
  return sentences;
}

bool title_is_first_person(std::string_view title) {
  static const std::unordered_set<std::string> pronouns{"i", "me", "my", "mine"};
  for (const auto& word : text::words(title)) {
    if (pronouns.count(word)) return true;
  }
  return false;
}

bool title_has_advice_keyword(std::string_view title, const KeywordSet& advice_keywords) {
  if (advice_keywords.empty()) throw UsageError("advice keyword set is empty");
  for (const auto& word : text::words(title)) {
    if (advice_keywords.matches_word(word)) return true;
  }
  return false;
}

const KeywordSet& default_question_objects() {
  static const KeywordSet objects("question_objects", {"rape*", "harass*", "assault*", "abus*"});
  return objects;
}

const std::set<std::string>& interrogative_starters() {
  static const std::set<std::string> starters{"was",   "is",     "am",    "are",  "were", "do",
                                              "does",  "did",    "can",   "could", "should",
                                              "would", "how",    "what",  "why",  "who",  "when",
                                              "where"};
  return starters;
}

bool title_is_advice_question(std::string_view title, const KeywordSet& objects) {
  const auto trimmed = text::trim(title);
  const auto words = text::words(trimmed);
  if (words.empty()) return false;
  const bool interrogative =
      trimmed.back() == '?' || interrogative_starters().count(words.front()) != 0;
  if (!interrogative) return false;
  for (const auto& word : words) {
    if (objects.matches_word(word)) return true;
  }
  return false;
}

RelevanceVerdict judge_title(const Post& post, const KeywordSet& advice_keywords,
                             const KeywordSet& objects) {
  RelevanceVerdict verdict{post.id, false, {}};
  if (post.deleted) return verdict;
  if (title_is_first_person(post.title)) verdict.matched_rules.insert(TitleRule::kFirstPerson);
  if (title_has_advice_keyword(post.title, advice_keywords)) {
    verdict.matched_rules.insert(TitleRule::kAdviceKeyword);
  }
  if (title_is_advice_question(post.title, objects)) {
    verdict.matched_rules.insert(TitleRule::kAdviceQuestion);
  }
  verdict.relevant = !verdict.matched_rules.empty();
  return verdict;
}

std::vector<RelevanceVerdict> filter_relevant(const std::vector<Post>& posts,
                                              const KeywordSet& advice_keywords,
                                              const KeywordSet& objects) {
  std::vector<RelevanceVerdict> verdicts;
  verdicts.reserve(posts.size());
  for (const Post& post : posts) verdicts.push_back(judge_title(post, advice_keywords, objects));
  return verdicts;
}

SplitterConfig load_splitter_config(const std::filesystem::path& abbreviations) {
  std::ifstream in(abbreviations);
  if (!in) throw DataError("cannot open " + abbreviations.string());
  SplitterConfig config;
  config.abbreviations.clear();
  std::string line;
  while (std::getline(in, line)) {
    const auto entry = text::trim(line);
    if (entry.empty() || entry.front() == '#') continue;
    std::string value = text::to_lower(entry);
    if (!value.empty() && value.back() == '.') value.pop_back();
    config.abbreviations.insert(value);
  }
  return config;
}

namespace {

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Length of a closing quote or bracket at pos, 0 if none.
std::size_t closer_length(std::string_view s, std::size_t pos) {
  const char c = s[pos];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  if (s.substr(pos, 3) == "”" || s.substr(pos, 3) == "’") return 3;
  return 0;
}

bool opens_sentence(std::string_view s, std::size_t pos) {
  const auto c = static_cast<unsigned char>(s[pos]);
  if (std::isupper(c) || std::isdigit(c) || c == '"' || c == '\'') return true;
  return s.substr(pos, 3) == "“" || s.substr(pos, 3) == "‘";
}

// The word immediately before position `period`, lowercased, without leading
// punctuation; "e.g." yields "e.g".
std::string word_before(std::string_view s, std::size_t period) {
  std::size_t start = period;
  while (start > 0 && !is_space(s[start - 1])) --start;
  std::string_view word = s.substr(start, period - start);
  while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\'')) {
    word.remove_prefix(1);
  }
  return text::to_lower(word);
}

void push_segment(std::vector<Sentence>& out, std::string_view post_id, std::string_view body,
                  std::size_t begin, std::size_t end) {
  std::size_t b = begin;
  std::size_t e = end;
  while (b < e && is_space(body[b])) ++b;
  while (e > b && is_space(body[e - 1])) --e;
  if (b == e) return;
  out.push_back(Sentence{std::string(post_id), out.size(), std::string(body.substr(b, e - b)), b});
}

}  // namespace

std::vector<Sentence> split_sentences(std::string_view post_id, std::string_view body,
                                      const SplitterConfig& config) {
  std::vector<Sentence> sentences;
  std::size_t segment_start = 0;
  std::size_t i = 0;
  while (i < body.size()) {
    if (!is_terminal(body[i])) {
      ++i;
      continue;
    }
    std::size_t run_end = i;
    bool all_periods = true;
    while (run_end < body.size() && is_terminal(body[run_end])) {
      all_periods = all_periods && body[run_end] == '.';
      ++run_end;
    }
    const std::size_t run_length = run_end - i;
    const std::size_t run_start = i;
    i = run_end;
    if (all_periods && run_length >= 2) continue;  // ellipsis
    if (run_length == 1 && body[run_start] == '.' &&
        config.abbreviations.count(word_before(body, run_start))) {
      continue;
    }
    std::size_t boundary = run_end;
    while (boundary < body.size()) {
      const std::size_t n = closer_length(body, boundary);
      if (n == 0) break;
      boundary += n;
    }
    if (boundary >= body.size() || !is_space(body[boundary])) continue;
    std::size_t next = boundary;
    while (next < body.size() && is_space(body[next])) ++next;
    if (next >= body.size() || !opens_sentence(body, next)) continue;
    push_segment(sentences, post_id, body, segment_start, boundary);
    segment_start = boundary;
    i = boundary;
  }
  push_segment(sentences, post_id, body, segment_start, body.size());
  return sentences;
}

}  // namespace triage
