#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "triage/active.hpp"
#include "triage/corpus.hpp"
#include "triage/model.hpp"

namespace triage {

struct ExtractedSentence {
  Sentence sentence;
  LabelVector labels;
  PredictionTriple probabilities;

  bool operator==(const ExtractedSentence&) const = default;
};

struct ExtractionResult {
  std::string post_id;
  std::string title;
  std::string body;
  std::vector<ExtractedSentence> sentences;  // ascending sentence index
  std::string model_version;

  bool operator==(const ExtractionResult&) const = default;
};

using HeadCuts = std::array<double, kCategoryCount>;
inline constexpr HeadCuts kDefaultCuts{0.5, 0.5, 0.5};

/// Splits the body, classifies every sentence and keeps those where any head
/// reaches its cut, in post order. A deleted or empty post yields no sentences.
ExtractionResult extract(const Post& post, const Classifier& classifier, const HeadCuts& cuts = kDefaultCuts,
                         const SplitterConfig& splitter = {});

enum class RenderFormat { kPlain, kJson, kHighlighted };

RenderFormat parse_render_format(std::string_view name);

struct RenderOptions {
  bool include_title = true;  // plain format only
};

/// plain: header line, then "[tags] sentence" per line.
/// json: canonical object (see extraction_to_json).
/// highlighted: the full body with each extracted sentence wrapped as
/// "[[tags]]sentence[[/]]".
std::string render(const ExtractionResult& result, RenderFormat format, const RenderOptions& options = {});

nlohmann::json extraction_to_json(const ExtractionResult& result);
ExtractionResult extraction_from_json(const nlohmann::json& j);

std::string tag_list(const LabelVector& labels);

/// Settings shared by the CLI verbs; every field has a default.
struct Config {
  std::filesystem::path lexicon_dir = "data/lexicons";
  std::filesystem::path abbreviations;  // empty: built-in list
  std::filesystem::path dictionary = "data/dictionaries/starter.dic";
  Hyperparameters hyper;
  QueryPolicy policy;
  std::size_t batch_size = 500;
  std::size_t cycles = 5;
  std::size_t calibration_tune = 400;
  std::size_t folds = 10;
  HeadCuts cuts = kDefaultCuts;
};

/// JSON keys: lexicon_dir, abbreviations, dictionary, hyperparameters{...},
/// policy{...}, batch_size, cycles, calibration_tune, folds, cuts[3].
/// Relative paths resolve against the config file's directory.
Config load_config(const std::filesystem::path& path);
Config parse_config(const nlohmann::json& j, const std::filesystem::path& base);

}  // namespace triage
