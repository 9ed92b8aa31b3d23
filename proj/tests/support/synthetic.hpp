#pragma once

#include <array>
#include <string>
#include <vector>

#include "triage/corpus.hpp"
#include "triage/labels.hpp"
#include "triage/rng.hpp"

namespace triage::testing {

/// Template-labeled sentences over pseudo-words. A sentence is positive for a
/// category exactly when it contains one of that category's cue words; cues are
/// Zipf-distributed, and each category also has weakly correlated context words.
struct SyntheticTask {
  std::array<std::vector<std::string>, kCategoryCount> cues;
  std::array<std::vector<std::string>, kCategoryCount> context;
  std::vector<std::string> filler;
  std::array<double, kCategoryCount> prevalence{0.30, 0.25, 0.20};
  double context_if_positive = 0.6;
  double context_if_negative = 0.08;
  double zipf_exponent = 1.0;

  explicit SyntheticTask(std::uint64_t vocabulary_seed = 1, std::size_t cues_per_category = 30);
};

struct SyntheticItem {
  Sentence sentence;
  LabelVector labels;
  std::array<std::size_t, kCategoryCount> cue_rank{};  // meaningful only where labels[c]
};

/// `banned_cues[c]` lists cue ranks that must not appear (the sentence is
/// redrawn for that category as negative instead).
SyntheticItem generate_item(const SyntheticTask& task, Rng& rng, const std::string& post_id, std::size_t index,
                            const std::array<std::vector<std::size_t>, kCategoryCount>& banned_cues = {});

std::vector<SyntheticItem> generate_corpus(const SyntheticTask& task, std::size_t n, std::uint64_t seed,
                                           const std::string& prefix = "syn");

}  // namespace triage::testing
