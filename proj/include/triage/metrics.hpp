#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "json.hpp"
#include "triage/labels.hpp"

namespace triage {

struct KappaResult {
  double kappa = 0.0;
  double observed = 0.0;  // p_o
  double expected = 0.0;  // p_e
  std::size_t items = 0;
};

/// Cohen's kappa for two binary annotations of the same items.
/// kappa = (p_o - p_e) / (1 - p_e), and 1 when p_o == p_e == 1.
KappaResult cohen_kappa(const std::vector<bool>& a, const std::vector<bool>& b);

/// Same statistic from a 2x2 table (a_yes_b_yes, a_yes_b_no, a_no_b_yes, a_no_b_no).
KappaResult cohen_kappa_counts(std::size_t yes_yes, std::size_t yes_no, std::size_t no_yes,
                               std::size_t no_no);

void to_json(nlohmann::json& j, const KappaResult& k);

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct PrfReport {
  std::array<Scores, kCategoryCount> category{};
  Scores macro;  // unweighted mean over the three categories
};

void to_json(nlohmann::json& j, const PrfReport& report);

/// Zero-denominator precision/recall/F1 are 0.
PrfReport prf_multilabel(std::span<const LabelVector> predicted, std::span<const LabelVector> gold);

/// Elementwise mean of several reports.
PrfReport mean_report(std::span<const PrfReport> reports);

/// Fold id for every item: a seeded permutation dealt round-robin into k folds,
/// so fold sizes are floor(n/k) or ceil(n/k).
std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t k, std::uint64_t seed);

/// Trains on `train` and returns predictions for `test`, in order.
using FoldTrainer = std::function<std::vector<LabelVector>(std::span<const std::size_t> train,
                                                           std::span<const std::size_t> test)>;

struct CvReport {
  PrfReport mean;
  std::vector<PrfReport> folds;
  std::vector<std::size_t> fold_of;
};

void to_json(nlohmann::json& j, const CvReport& report);

CvReport kfold_cv(std::span<const LabelVector> gold, std::size_t k, const FoldTrainer& trainer,
                  std::uint64_t seed);

struct RocPoint {
  double threshold;
  double tpr;
  double fpr;
};

struct RocCurve {
  std::vector<RocPoint> points;  // ascending threshold; the last is the +inf sentinel
  double auc = 0.0;
  double youden_threshold = std::numeric_limits<double>::infinity();
  double youden_j = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

/// ROC over the distinct scores plus a +inf sentinel; an item is predicted
/// positive when score >= threshold. AUC is the trapezoidal area. Youden ties
/// go to the larger threshold. Throws UsageError unless both classes occur.
RocCurve roc_analysis(std::span<const double> scores, const std::vector<bool>& positive);

}  // namespace triage
