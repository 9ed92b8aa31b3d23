#include "triage/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "triage/error.hpp"

namespace triage {

using nlohmann::json;

ExtractionResult extract(const Post& post, const Classifier& classifier, const HeadCuts& cuts,
                         const SplitterConfig& splitter) {
  ExtractionResult result{post.id, post.title, post.body, {}, classifier.version()};
  if (post.deleted) return result;
  const auto sentences = split_sentences(post.id, post.body, splitter);
  if (sentences.empty()) return result;
  std::vector<std::string> texts;
  texts.reserve(sentences.size());
  for (const auto& s : sentences) texts.push_back(s.text);
  const auto predictions = classifier.predict(texts);
  if (predictions.size() != sentences.size()) {
    throw ExternalServiceError("classifier returned the wrong number of predictions");
  }
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    LabelVector labels;
    for (std::size_t h = 0; h < kCategoryCount; ++h) labels[h] = predictions[i][h] >= cuts[h];
    if (labels.any()) result.sentences.push_back({sentences[i], labels, predictions[i]});
  }
  return result;
}

RenderFormat parse_render_format(std::string_view name) {
  if (name == "plain") return RenderFormat::kPlain;
  if (name == "json") return RenderFormat::kJson;
  if (name == "highlighted") return RenderFormat::kHighlighted;
  throw UsageError("unknown render format '" + std::string(name) + "'");
}

std::string tag_list(const LabelVector& labels) {
  std::string tags;
  for (Category c : kCategories) {
    if (!labels[c]) continue;
    if (!tags.empty()) tags += '+';
    tags += to_string(c);
  }
  return tags;
}

json extraction_to_json(const ExtractionResult& result) {
  json sentences = json::array();
  for (const auto& item : result.sentences) {
    sentences.push_back({{"index", item.sentence.index},
                         {"text", item.sentence.text},
                         {"labels", item.labels},
                         {"probabilities", item.probabilities.p}});
  }
  return json{{"post_id", result.post_id}, {"title", result.title},
              {"body", result.body},       {"model_version", result.model_version},
              {"sentences", sentences}};
}

ExtractionResult extraction_from_json(const json& j) {
  ExtractionResult result;
  result.post_id = j.at("post_id").get<std::string>();
  result.title = j.value("title", std::string());
  result.body = j.value("body", std::string());
  result.model_version = j.at("model_version").get<std::string>();
  const auto offsets = split_sentences(result.post_id, result.body);
  for (const auto& item : j.at("sentences")) {
    ExtractedSentence s;
    s.sentence.post_id = result.post_id;
    s.sentence.index = item.at("index").get<std::size_t>();
    s.sentence.text = item.at("text").get<std::string>();
    if (s.sentence.index < offsets.size()) s.sentence.offset = offsets[s.sentence.index].offset;
    s.labels = item.at("labels").get<LabelVector>();
    s.probabilities.p = item.at("probabilities").get<std::array<double, kCategoryCount>>();
    result.sentences.push_back(std::move(s));
  }
  return result;
}

namespace {

std::string render_plain(const ExtractionResult& result, const RenderOptions& options) {
  std::ostringstream out;
  out << "post " << result.post_id;
  if (options.include_title && !result.title.empty()) out << ": " << result.title;
  out << '\n';
  if (result.sentences.empty()) {
    out << "(no extracted sentences)\n";
    return out.str();
  }
  for (const auto& item : result.sentences) {
    out << '[' << tag_list(item.labels) << "] " << item.sentence.text << '\n';
  }
  return out.str();
}

std::string render_highlighted(const ExtractionResult& result) {
  // Offsets come from re-splitting the body so results parsed from JSON work too.
  const auto sentences = split_sentences(result.post_id, result.body);
  std::string out;
  std::size_t cursor = 0;
  for (const auto& item : result.sentences) {
    if (item.sentence.index >= sentences.size() || sentences[item.sentence.index].text != item.sentence.text) {
      throw DataError("extracted sentence " + std::to_string(item.sentence.index) + " does not match the post body");
    }
    const auto& span = sentences[item.sentence.index];
    out.append(result.body, cursor, span.offset - cursor);
    out += "[[" + tag_list(item.labels) + "]]";
    out += span.text;
    out += "[[/]]";
    cursor = span.offset + span.text.size();
  }
  out.append(result.body, cursor, std::string::npos);
  out += '\n';
  return out;
}

}  // namespace

std::string render(const ExtractionResult& result, RenderFormat format, const RenderOptions& options) {
  switch (format) {
    case RenderFormat::kPlain:
      return render_plain(result, options);
    case RenderFormat::kJson:
      return extraction_to_json(result).dump() + "\n";
    case RenderFormat::kHighlighted:
      return render_highlighted(result);
  }
  throw UsageError("unknown render format");
}

Config parse_config(const json& j, const std::filesystem::path& base) {
  Config config;
  auto path_of = [&](const char* key, std::filesystem::path& field) {
    if (!j.contains(key)) return;
    std::filesystem::path p = j.at(key).get<std::string>();
    field = p.is_relative() ? base / p : p;
  };
  path_of("lexicon_dir", config.lexicon_dir);
  path_of("abbreviations", config.abbreviations);
  path_of("dictionary", config.dictionary);
  if (j.contains("hyperparameters")) config.hyper = j.at("hyperparameters").get<Hyperparameters>();
  if (j.contains("policy")) {
    config.policy = j.at("policy").get<QueryPolicy>();
    config.policy.validate();
  }
  config.batch_size = j.value("batch_size", config.batch_size);
  config.cycles = j.value("cycles", config.cycles);
  config.calibration_tune = j.value("calibration_tune", config.calibration_tune);
  config.folds = j.value("folds", config.folds);
  if (j.contains("cuts")) config.cuts = j.at("cuts").get<HeadCuts>();
  return config;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  try {
    return parse_config(json::parse(in), path.parent_path());
  } catch (const json::exception& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  }
}

}  // namespace triage
