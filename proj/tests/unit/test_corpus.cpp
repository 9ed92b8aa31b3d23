#include <algorithm>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "support.hpp"
#include "triage/corpus.hpp"
#include "triage/error.hpp"
#include "triage/keywords.hpp"
#include "triage/rng.hpp"
#include "triage/text.hpp"

using namespace triage;
using nlohmann::json;

namespace {

KeywordSet shipped_advice() { return load_keyword_set(testing::data_path("lexicons/advice.txt")); }

std::string non_space(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  }
  return out;
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

TEST_CASE("words keep inner apostrophes and split elsewhere") {
  CHECK(text::words("My mom's boyfriend") == std::vector<std::string>{"my", "mom's", "boyfriend"});
  CHECK(text::words("don\xE2\x80\x99t stop") == std::vector<std::string>{"don\xE2\x80\x99t", "stop"});
  CHECK(text::words("'quoted' words") == std::vector<std::string>{"quoted", "words"});
  CHECK(text::feature_tokens("I a an mom's") == std::vector<std::string>{"an", "mom"});
  CHECK(text::tokens("I feel sad", 1).size() == 3);
}

TEST_CASE("parse_posts") {
  SUBCASE("valid line round-trips") {
    std::istringstream in(R"({"id":"a","title":"t","body":"b."})");
    auto parsed = parse_posts(in);
    REQUIRE(parsed.posts.size() == 1);
    CHECK(parsed.posts[0].id == "a");
    CHECK(parsed.posts[0].body == "b.");
    CHECK_FALSE(parsed.posts[0].deleted);
    CHECK(parsed.issues.empty());
  }
  SUBCASE("empty stream") {
    std::istringstream in("");
    CHECK(parse_posts(in).posts.empty());
  }
  SUBCASE("duplicate id is a hard error") {
    std::istringstream in("{\"id\":\"a\",\"title\":\"t\",\"body\":\"b\"}\n{\"id\":\"a\",\"title\":\"u\",\"body\":\"c\"}\n");
    CHECK_THROWS_AS(parse_posts(in), DataError);
  }
  SUBCASE("malformed lines are collected and parsing continues") {
    std::istringstream in(
        "{\"id\":\"a\",\"title\":\"t\",\"body\":\"b\"}\n"
        "not json\n"
        "{\"id\":\"b\",\"body\":\"missing title\"}\n"
        "{\"id\":\"c\",\"title\":\"t\",\"body\":\"[removed]\",\"extra\":1}\n");
    auto parsed = parse_posts(in);
    REQUIRE(parsed.posts.size() == 2);
    CHECK(parsed.posts[1].id == "c");
    CHECK(parsed.posts[1].deleted);
    REQUIRE(parsed.issues.size() == 2);
    CHECK(parsed.issues[0].line == 2);
    CHECK(parsed.issues[1].line == 3);
  }
  SUBCASE("empty body is retained but flagged deleted") {
    std::istringstream in(R"({"id":7,"title":"","body":""})");
    auto parsed = parse_posts(in);
    REQUIRE(parsed.posts.size() == 1);
    CHECK(parsed.posts[0].id == "7");
    CHECK(parsed.posts[0].deleted);
  }
}

TEST_CASE("title rules") {
  CHECK(title_is_first_person("My mom's boyfriend tried to get me to do things to him"));
  CHECK_FALSE(title_is_first_person("Advice needed about a friend"));
  CHECK_FALSE(title_is_first_person("Vitamin supplements review"));
  CHECK(title_is_first_person("mine"));
  CHECK_FALSE(title_is_first_person("mime artist"));

  const auto advice = shipped_advice();
  CHECK(title_has_advice_keyword("Need advice, or support", advice));
  CHECK(title_has_advice_keyword("pls someone read this and help me figure out if i was assaulted or not", advice));
  CHECK_FALSE(title_has_advice_keyword("I was assaulted", advice));
  CHECK_THROWS_AS(title_has_advice_keyword("help", KeywordSet{}), UsageError);

  CHECK(title_is_advice_question("Was this rape?"));
  CHECK(title_is_advice_question("Is this sexual harassment?"));
  CHECK_FALSE(title_is_advice_question("This is harassment."));
  CHECK(title_is_advice_question("was I abused"));
  CHECK_FALSE(title_is_advice_question("Was this okay?"));
}

TEST_CASE("title fixture matches hand-labeled rule outcomes") {
  const auto advice = shipped_advice();
  std::ifstream in(testing::data_path("fixtures/titles.jsonl"));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto j = json::parse(line);
    Post post{"p" + std::to_string(rows++), "", j.at("title"), "body", 0, false};
    const auto verdict = judge_title(post, advice);
    std::set<std::string> got;
    for (auto r : verdict.matched_rules) got.insert(std::string(to_string(r)));
    const auto expected = j.at("rules").get<std::set<std::string>>();
    INFO(post.title);
    CHECK(got == expected);
    CHECK(verdict.relevant == !expected.empty());
  }
  CHECK(rows == 20);
}

TEST_CASE("filter_relevant") {
  const auto advice = shipped_advice();
  std::vector<Post> posts{
      {"a", "", "Was this rape?", "x", 0, false},
      {"b", "", "I need help", "x", 0, false},
      {"c", "", "Celebrity accused in news article", "x", 0, false},
      {"d", "", "I need help", "", 0, true},
  };
  const auto v = filter_relevant(posts, advice);
  REQUIRE(v.size() == 4);
  CHECK(v[0].matched_rules == std::set<TitleRule>{TitleRule::kAdviceQuestion});
  CHECK(v[1].matched_rules == std::set<TitleRule>{TitleRule::kFirstPerson, TitleRule::kAdviceKeyword});
  CHECK_FALSE(v[2].relevant);
  CHECK_FALSE(v[3].relevant);
  CHECK(v[3].matched_rules.empty());

  SUBCASE("order-preserving under permutation") {
    Rng rng(5);
    std::vector<std::size_t> order{0, 1, 2, 3};
    rng.shuffle(order);
    std::vector<Post> permuted;
    for (auto i : order) permuted.push_back(posts[i]);
    const auto pv = filter_relevant(permuted, advice);
    for (std::size_t i = 0; i < order.size(); ++i) CHECK(pv[i] == v[order[i]]);
  }
  SUBCASE("case-insensitive") {
    for (auto p : posts) {
      auto up = p;
      up.title = upper(p.title);
      auto a = judge_title(p, advice);
      auto b = judge_title(up, advice);
      CHECK(a.matched_rules == b.matched_rules);
    }
  }
}

TEST_CASE("split_sentences examples") {
  auto texts = [](const std::vector<Sentence>& s) {
    std::vector<std::string> out;
    for (const auto& x : s) out.push_back(x.text);
    return out;
  };
  CHECK(texts(split_sentences("p", "He left. I cried.")) == std::vector<std::string>{"He left.", "I cried."});
  CHECK(split_sentences("p", "Was it rape? I froze.").size() == 2);
  CHECK(split_sentences("p", "I met Dr. Smith today.").size() == 1);
  CHECK(split_sentences("p", "").empty());
  auto s = split_sentences("post9", "One. Two. Three.");
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i].index == i);
    CHECK(s[i].post_id == "post9");
  }
}

TEST_CASE("splitter fixture (50 hand-checked sentences)") {
  const auto config = load_splitter_config(testing::data_path("lexicons/abbreviations.txt"));
  std::ifstream in(testing::data_path("fixtures/splitter.jsonl"));
  std::string line;
  std::size_t sentences = 0;
  while (std::getline(in, line)) {
    const auto j = json::parse(line);
    const std::string body = j.at("body");
    const auto expected = j.at("sentences").get<std::vector<std::string>>();
    const auto got = split_sentences("f", body, config);
    std::vector<std::string> texts;
    for (const auto& s : got) texts.push_back(s.text);
    INFO(body);
    CHECK(texts == expected);
    sentences += expected.size();
  }
  CHECK(sentences == 50);
}

TEST_CASE("split_sentences reconstruction invariant on random bodies") {
  Rng rng(11);
  const std::vector<std::string> pieces{"He", "said", "no.", "I", "froze!", "Why?", "Dr.", "Lee", "e.g.", "...",
                                        "\"Stop.\"", "2019.", "it", "was", "(fine.)", "ok", "?!", "\n", "  ", "Mr."};
  for (int trial = 0; trial < 300; ++trial) {
    std::string body;
    const std::size_t n = rng.uniform_index(30);
    for (std::size_t i = 0; i < n; ++i) {
      body += pieces[rng.uniform_index(pieces.size())];
      body += rng.bernoulli(0.8) ? " " : "";
    }
    const auto sentences = split_sentences("r", body);
    std::string joined;
    for (const auto& s : sentences) {
      CHECK_FALSE(text::trim(s.text).empty());
      CHECK(body.substr(s.offset, s.text.size()) == s.text);
      joined += s.text + " ";
    }
    CHECK(non_space(joined) == non_space(body));
  }
}
