#include "triage/labels.hpp"

namespace triage {

std::string_view to_string(Category category) {
  switch (category) {
    case Category::kIncident:
      return "incident";
    case Category::kEffects:
      return "effects";
    case Category::kAdvice:
      return "advice";
  }
  return "unknown";
}

void to_json(nlohmann::json& j, const LabelVector& labels) {
  j = nlohmann::json{{"incident", labels[0]}, {"effects", labels[1]}, {"advice", labels[2]}};
}

void from_json(const nlohmann::json& j, LabelVector& labels) {
  if (j.is_array()) {
    for (std::size_t i = 0; i < kCategoryCount; ++i) labels[i] = j.at(i).get<bool>();
    return;
  }
  labels = LabelVector::of(j.at("incident").get<bool>(), j.at("effects").get<bool>(),
                           j.at("advice").get<bool>());
}

}  // namespace triage
