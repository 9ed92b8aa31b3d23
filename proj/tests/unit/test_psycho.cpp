#include <cctype>
#include <cmath>
#include <fstream>

#include "doctest.h"
#include "support.hpp"
#include "triage/error.hpp"
#include "triage/psycho.hpp"

using namespace triage;

namespace {

// Independent tokenizer and matcher for ASCII fixtures.
std::vector<std::string> oracle_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + " ") {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  return out;
}

bool oracle_hit(const std::string& token, const std::set<std::string>& entries) {
  for (const auto& e : entries) {
    if (e.back() == '*') {
      if (token.compare(0, e.size() - 1, e, 0, e.size() - 1) == 0 && token.size() >= e.size() - 1) return true;
    } else if (token == e) {
      return true;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("load_dictionary") {
  const auto d = parse_dictionary("[emo_sad]\nsad\ncry*\n", "t");
  CHECK(d.categories().at("emo_sad").terms() == std::set<std::string>{"sad", "cry*"});
  CHECK_THROWS_AS(parse_dictionary("", "t"), DataError);
  CHECK(parse_dictionary("[a]\nx\nx\nX\n", "t").categories().at("a").size() == 1);
  CHECK_THROWS_WITH_AS(parse_dictionary("[a]\nx\n[broken\ny\n", "t"), doctest::Contains(":3:"), DataError);
  CHECK_THROWS_WITH_AS(parse_dictionary("orphan\n[a]\nx\n", "t"), doctest::Contains(":1:"), DataError);

  const auto starter = load_dictionary(testing::data_path("dictionaries/starter.dic"));
  for (const auto& name : standard_psycho_categories()) CHECK(starter.categories().count(name) == 1);
}

TEST_CASE("score_sentence examples") {
  const auto sad = parse_dictionary("[emo_sad]\nsad\n", "t");
  CHECK(score_sentence("I feel sad", sad).percent.at("emo_sad") == doctest::Approx(100.0 / 3.0));
  const auto anx = parse_dictionary("[emo_anx]\nscar*\n", "t");
  CHECK(score_sentence("I was scared", anx).percent.at("emo_anx") == doctest::Approx(100.0 / 3.0));
  const auto empty = score_sentence("... 123 !!", sad);
  CHECK(empty.empty);
  CHECK(empty.percent.at("emo_sad") == 0.0);
}

TEST_CASE("20-sentence fixture against a token-count oracle") {
  const auto dict = load_dictionary(testing::data_path("dictionaries/starter.dic"));
  std::ifstream in(testing::data_path("fixtures/psycho_sentences.txt"));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    const auto got = score_sentence(line, dict);
    const auto toks = oracle_tokens(line);
    CHECK(got.tokens == toks.size());
    for (const auto& [name, set] : dict.categories()) {
      std::size_t hits = 0;
      for (const auto& t : toks) hits += oracle_hit(t, set.terms());
      const double expect = 100.0 * static_cast<double>(hits) / static_cast<double>(toks.size());
      INFO(line << " / " << name);
      CHECK(std::fabs(got.percent.at(name) - expect) <= 1e-9);
      CHECK(got.percent.at(name) <= 100.0);
    }
  }
  CHECK(rows == 20);
}

TEST_CASE("adding a word never lowers a score") {
  const auto before = parse_dictionary("[tone_neg]\nbad\n", "t");
  const auto after = parse_dictionary("[tone_neg]\nbad\nhurt*\n", "t");
  std::ifstream in(testing::data_path("fixtures/psycho_sentences.txt"));
  std::string line;
  while (std::getline(in, line)) {
    CHECK(score_sentence(line, after).percent.at("tone_neg") >= score_sentence(line, before).percent.at("tone_neg"));
  }
}

TEST_CASE("category_report") {
  const auto dict = parse_dictionary("[tone_neg]\nbad\n[tone_pos]\ngood\n", "t");
  // 10% and 30% tone_neg.
  std::vector<ScoredInput> in{
      {"bad x x x x x x x x x", LabelVector::of(false, true, false)},
      {"bad bad bad x x x x x x x", LabelVector::of(false, true, false)},
      {"good day", LabelVector::of(true, false, false)},
      {"unlabeled bad", LabelVector{}},
  };
  const auto r = category_report(in, dict);
  CHECK(r.rows[1].at("tone_neg").mean == doctest::Approx(20.0));
  CHECK(r.rows[1].at("tone_neg").n == 2);
  CHECK(std::isnan(r.rows[2].at("tone_neg").mean));
  CHECK(r.rows[2].at("tone_neg").n == 0);
  CHECK(r.tone_proxy(Category::kIncident) == doctest::Approx(50.0));
  CHECK(r.label_source == "gold");

  const auto csv = report_csv(r);
  CHECK(csv.find("tone_proxy_nonliwc") != std::string::npos);
  CHECK(csv.find("advice,NA,NA") != std::string::npos);
  CHECK(report_json(r).at("label_source") == "gold");

  SUBCASE("scale-free under duplication") {
    auto doubled = in;
    doubled.insert(doubled.end(), in.begin(), in.end());
    const auto d = category_report(doubled, dict);
    for (std::size_t c = 0; c < 2; ++c) {
      for (const auto& [name, cell] : r.rows[c]) CHECK(d.rows[c].at(name).mean == doctest::Approx(cell.mean));
    }
  }
  SUBCASE("multi-label sentences count toward every label") {
    std::vector<ScoredInput> both{{"bad", LabelVector::of(true, true, true)}};
    const auto b = category_report(both, dict);
    for (std::size_t c = 0; c < 3; ++c) CHECK(b.rows[c].at("tone_neg").mean == 100.0);
  }
}
