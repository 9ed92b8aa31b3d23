#include "triage/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "triage/error.hpp"
#include "triage/rng.hpp"

namespace triage {

using nlohmann::json;

KappaResult cohen_kappa_counts(std::size_t yes_yes, std::size_t yes_no, std::size_t no_yes,
                               std::size_t no_no) {
  const std::size_t n = yes_yes + yes_no + no_yes + no_no;
  if (n == 0) throw UsageError("kappa needs at least one item");
  const double total = static_cast<double>(n);
  const double observed = static_cast<double>(yes_yes + no_no) / total;
  const double a_yes = static_cast<double>(yes_yes + yes_no) / total;
  const double b_yes = static_cast<double>(yes_yes + no_yes) / total;
  const double expected = a_yes * b_yes + (1.0 - a_yes) * (1.0 - b_yes);
  KappaResult result{0.0, observed, expected, n};
  result.kappa = expected < 1.0 ? (observed - expected) / (1.0 - expected) : 1.0;
  return result;
}

KappaResult cohen_kappa(const std::vector<bool>& a, const std::vector<bool>& b) {
  if (a.size() != b.size()) throw UsageError("kappa inputs differ in length");
  if (a.empty()) throw UsageError("kappa needs at least one item");
  std::size_t counts[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < a.size(); ++i) ++counts[a[i] ? 0 : 1][b[i] ? 0 : 1];
  return cohen_kappa_counts(counts[0][0], counts[0][1], counts[1][0], counts[1][1]);
}

void to_json(json& j, const KappaResult& k) {
  j = json{{"kappa", k.kappa}, {"observed", k.observed}, {"expected", k.expected}, {"items", k.items}};
}

namespace {

Scores scores_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  Scores s;
  s.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  s.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  s.f1 = s.precision + s.recall == 0.0 ? 0.0
                                       : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

Scores macro_of(const std::array<Scores, kCategoryCount>& per) {
  Scores m;
  for (const auto& s : per) {
    m.precision += s.precision;
    m.recall += s.recall;
    m.f1 += s.f1;
  }
  m.precision /= kCategoryCount;
  m.recall /= kCategoryCount;
  m.f1 /= kCategoryCount;
  return m;
}

json scores_json(const Scores& s) {
  return json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

}  // namespace

PrfReport prf_multilabel(std::span<const LabelVector> predicted, std::span<const LabelVector> gold) {
  if (predicted.size() != gold.size()) throw UsageError("prediction and gold counts differ");
  if (gold.empty()) throw UsageError("no items to score");
  PrfReport report;
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (predicted[i][c] && gold[i][c]) ++tp;
      else if (predicted[i][c]) ++fp;
      else if (gold[i][c]) ++fn;
    }
    report.category[c] = scores_from_counts(tp, fp, fn);
  }
  report.macro = macro_of(report.category);
  return report;
}

PrfReport mean_report(std::span<const PrfReport> reports) {
  if (reports.empty()) throw UsageError("no reports to average");
  PrfReport mean;
  for (const auto& r : reports) {
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      mean.category[c].precision += r.category[c].precision;
      mean.category[c].recall += r.category[c].recall;
      mean.category[c].f1 += r.category[c].f1;
    }
  }
  const double n = static_cast<double>(reports.size());
  for (auto& s : mean.category) {
    s.precision /= n;
    s.recall /= n;
    s.f1 /= n;
  }
  mean.macro = macro_of(mean.category);
  return mean;
}

void to_json(json& j, const PrfReport& report) {
  j = json::object();
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    j[std::string(to_string(kCategories[c]))] = scores_json(report.category[c]);
  }
  j["macro"] = scores_json(report.macro);
}

std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw UsageError("k-fold cross-validation needs k >= 2");
  if (k > n) throw UsageError("k (" + std::to_string(k) + ") exceeds dataset size (" + std::to_string(n) + ")");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t position = 0; position < n; ++position) fold_of[order[position]] = position % k;
  return fold_of;
}

CvReport kfold_cv(std::span<const LabelVector> gold, std::size_t k, const FoldTrainer& trainer,
                  std::uint64_t seed) {
  CvReport report;
  report.fold_of = fold_assignment(gold.size(), k, seed);
  for (std::size_t fold = 0; fold < k; ++fold) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      (report.fold_of[i] == fold ? test : train).push_back(i);
    }
    const auto predicted = trainer(train, test);
    if (predicted.size() != test.size()) {
      throw UsageError("fold trainer returned " + std::to_string(predicted.size()) +
                       " predictions for " + std::to_string(test.size()) + " test items");
    }
    std::vector<LabelVector> expected;
    expected.reserve(test.size());
    for (std::size_t i : test) expected.push_back(gold[i]);
    report.folds.push_back(prf_multilabel(predicted, expected));
  }
  report.mean = mean_report(report.folds);
  return report;
}

void to_json(json& j, const CvReport& report) {
  j = json{{"mean", report.mean}, {"folds", report.folds}, {"k", report.folds.size()}};
}

RocCurve roc_analysis(std::span<const double> scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw UsageError("score and label counts differ");
  RocCurve curve;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) throw UsageError("NaN score at index " + std::to_string(i));
    (positive[i] ? curve.positives : curve.negatives) += 1;
  }
  if (curve.positives == 0 || curve.negatives == 0) {
    throw UsageError("ROC analysis needs at least one positive and one negative item");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const double p = static_cast<double>(curve.positives);
  const double n = static_cast<double>(curve.negatives);
  // Descending threshold sweep starting at the +inf sentinel.
  std::vector<RocPoint> descending{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double threshold = scores[order[k]];
    while (k < order.size() && scores[order[k]] == threshold) {
      (positive[order[k]] ? tp : fp) += 1;
      ++k;
    }
    descending.push_back({threshold, static_cast<double>(tp) / p, static_cast<double>(fp) / n});
  }

  curve.youden_j = descending.front().tpr - descending.front().fpr;
  curve.youden_threshold = descending.front().threshold;
  for (std::size_t k = 1; k < descending.size(); ++k) {
    const auto& a = descending[k - 1];
    const auto& b = descending[k];
    curve.auc += (b.fpr - a.fpr) * (b.tpr + a.tpr) / 2.0;
    // Strict improvement only: at equal J the earlier (larger) threshold wins.
    const double j = b.tpr - b.fpr;
    if (j > curve.youden_j) {
      curve.youden_j = j;
      curve.youden_threshold = b.threshold;
    }
  }
  curve.points.assign(descending.rbegin(), descending.rend());
  return curve;
}

}  // namespace triage
