#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "triage/features.hpp"
#include "triage/labels.hpp"

namespace triage {

struct Hyperparameters {
  double learning_rate = 0.1;
  double l2 = 1e-4;
  int epochs = 5;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  bool operator==(const Hyperparameters&) const = default;
};

void to_json(nlohmann::json& j, const Hyperparameters& h);
void from_json(const nlohmann::json& j, Hyperparameters& h);

double sigmoid(double z);

/// Three independent logistic heads (incident, effects, advice) over one feature space.
class LinearMultilabelModel {
 public:
  LinearMultilabelModel() = default;
  LinearMultilabelModel(std::size_t dim, Hyperparameters hyper);

  std::size_t dim() const { return dim_; }
  const Hyperparameters& hyperparameters() const { return hyper_; }

  std::span<double> weights(std::size_t head) { return weights_[head]; }
  std::span<const double> weights(std::size_t head) const { return weights_[head]; }
  double& bias(std::size_t head) { return bias_[head]; }
  double bias(std::size_t head) const { return bias_[head]; }

  /// w.x + b for one head. Throws UsageError on a dimension mismatch.
  double logit(std::size_t head, const FeatureVector& x) const;
  PredictionTriple predict(const FeatureVector& x) const;

  nlohmann::json to_json() const;
  static LinearMultilabelModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static LinearMultilabelModel load(const std::filesystem::path& path);

  bool operator==(const LinearMultilabelModel&) const = default;

 private:
  std::size_t dim_ = 0;
  Hyperparameters hyper_;
  std::array<std::vector<double>, kCategoryCount> weights_;
  std::array<double, kCategoryCount> bias_{};
};

/// Mean binary cross-entropy of one head over a batch plus (l2 / 2) * |w|^2.
double head_loss(const LinearMultilabelModel& model, std::size_t head,
                 std::span<const FeatureVector> xs, std::span<const LabelVector> ys, double l2);

struct HeadGradient {
  std::vector<double> weights;
  double bias = 0.0;
};

/// Analytic gradient of head_loss; the same accumulation drives training.
HeadGradient head_gradient(const LinearMultilabelModel& model, std::size_t head,
                           std::span<const FeatureVector> xs, std::span<const LabelVector> ys,
                           double l2);

/// Mini-batch gradient descent on L2-regularized binary cross-entropy, each
/// head independently, shuffled per epoch from `hyper.seed`. Throws DataError on
/// non-finite features and UsageError on empty or ragged input.
LinearMultilabelModel train_linear(std::span<const FeatureVector> xs,
                                   std::span<const LabelVector> ys, const Hyperparameters& hyper);

PredictionTriple predict(const LinearMultilabelModel& model, const FeatureVector& x);

/// Anything that turns sentence texts into per-category probabilities.
class Classifier {
 public:
  virtual ~Classifier() = default;
  /// One triple per text, in order.
  virtual std::vector<PredictionTriple> predict(std::span<const std::string> texts) const = 0;
  virtual std::string version() const = 0;
};

/// Featurizer + linear heads; the native model.
class LinearClassifier final : public Classifier {
 public:
  LinearClassifier(std::shared_ptr<const Featurizer> featurizer, LinearMultilabelModel model,
                   std::string version);

  std::vector<PredictionTriple> predict(std::span<const std::string> texts) const override;
  std::string version() const override { return version_; }

  const LinearMultilabelModel& model() const { return model_; }
  const Featurizer& featurizer() const { return *featurizer_; }

  nlohmann::json to_json() const;
  static LinearClassifier from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static LinearClassifier load(const std::filesystem::path& path);

 private:
  std::shared_ptr<const Featurizer> featurizer_;
  LinearMultilabelModel model_;
  std::string version_;
};

/// Fits TF-IDF on `texts` and trains the linear heads on the result.
LinearClassifier train_tfidf_classifier(std::span<const std::string> texts,
                                        std::span<const LabelVector> labels,
                                        const Hyperparameters& hyper, std::string version);

}  // namespace triage
