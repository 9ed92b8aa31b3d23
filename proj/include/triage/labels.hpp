#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include "json.hpp"

namespace triage {

enum class Category : std::size_t { kIncident = 0, kEffects = 1, kAdvice = 2 };

inline constexpr std::size_t kCategoryCount = 3;
inline constexpr std::array<Category, kCategoryCount> kCategories{
    Category::kIncident, Category::kEffects, Category::kAdvice};

std::string_view to_string(Category category);

/// Annotator questions, verbatim.
inline constexpr std::array<std::string_view, kCategoryCount> kQuestions{
    "Does this sentence describe a sexual harassment incident?",
    "Does this sentence describe the effects of the incident on the survivor?",
    "Does this sentence ask for any advice?",
};

/// Three independent yes/no labels; all-false ("others") is valid.
struct LabelVector {
  std::array<bool, kCategoryCount> flags{};

  static LabelVector of(bool incident, bool effects, bool advice) {
    return LabelVector{{incident, effects, advice}};
  }

  bool operator[](std::size_t i) const { return flags[i]; }
  bool& operator[](std::size_t i) { return flags[i]; }
  bool operator[](Category c) const { return flags[static_cast<std::size_t>(c)]; }
  bool& operator[](Category c) { return flags[static_cast<std::size_t>(c)]; }

  bool any() const { return flags[0] || flags[1] || flags[2]; }
  bool operator==(const LabelVector&) const = default;
};

/// Per-category probabilities in [0, 1]; no sum-to-one constraint.
struct PredictionTriple {
  std::array<double, kCategoryCount> p{};

  double operator[](std::size_t i) const { return p[i]; }
  double& operator[](std::size_t i) { return p[i]; }
  double operator[](Category c) const { return p[static_cast<std::size_t>(c)]; }

  /// Head i is positive when p[i] >= cut.
  LabelVector labels(double cut = 0.5) const {
    return LabelVector::of(p[0] >= cut, p[1] >= cut, p[2] >= cut);
  }
  bool operator==(const PredictionTriple&) const = default;
};

/// {"incident": b, "effects": b, "advice": b}
void to_json(nlohmann::json& j, const LabelVector& labels);
void from_json(const nlohmann::json& j, LabelVector& labels);

}  // namespace triage
