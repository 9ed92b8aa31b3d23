#include "triage/model.hpp"

#include <cmath>
#include <fstream>

#include "triage/error.hpp"
#include "triage/kernels.hpp"
#include "triage/rng.hpp"

namespace triage {

using nlohmann::json;

void to_json(json& j, const Hyperparameters& h) {
  j = json{{"learning_rate", h.learning_rate},
           {"l2", h.l2},
           {"epochs", h.epochs},
           {"batch_size", h.batch_size},
           {"seed", h.seed}};
}

void from_json(const json& j, Hyperparameters& h) {
  h.learning_rate = j.value("learning_rate", h.learning_rate);
  h.l2 = j.value("l2", h.l2);
  h.epochs = j.value("epochs", h.epochs);
  h.batch_size = j.value("batch_size", h.batch_size);
  h.seed = j.value("seed", h.seed);
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// log(1 + e^z) without overflow
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_batch(const LinearMultilabelModel& model, std::span<const FeatureVector> xs,
                 std::span<const LabelVector> ys) {
  if (xs.size() != ys.size()) throw UsageError("feature and label counts differ");
  if (xs.empty()) throw UsageError("empty training batch");
  for (const auto& x : xs) {
    if (x.dim != model.dim()) throw UsageError("feature dimension differs from the model");
  }
}

// g += sum_i (sigmoid(w.x_i + b) - y_i) x_i ; returns the bias component.
double accumulate_residuals(const LinearMultilabelModel& model, std::size_t head,
                            std::span<const FeatureVector> xs, std::span<const LabelVector> ys,
                            std::span<const std::size_t> rows, std::span<double> g) {
  double bias_sum = 0.0;
  for (std::size_t row : rows) {
    const double residual = sigmoid(model.logit(head, xs[row])) - (ys[row][head] ? 1.0 : 0.0);
    add_scaled(g, residual, xs[row]);
    bias_sum += residual;
  }
  return bias_sum;
}

}  // namespace

LinearMultilabelModel::LinearMultilabelModel(std::size_t dim, Hyperparameters hyper)
    : dim_(dim), hyper_(hyper) {
  for (auto& w : weights_) w.assign(dim, 0.0);
}

double LinearMultilabelModel::logit(std::size_t head, const FeatureVector& x) const {
  if (x.dim != dim_) {
    throw UsageError("feature dimension " + std::to_string(x.dim) + " does not match model dimension " +
                     std::to_string(dim_));
  }
  return dot(weights_[head], x) + bias_[head];
}

PredictionTriple LinearMultilabelModel::predict(const FeatureVector& x) const {
  PredictionTriple out;
  for (std::size_t h = 0; h < kCategoryCount; ++h) out[h] = sigmoid(logit(h, x));
  return out;
}

PredictionTriple predict(const LinearMultilabelModel& model, const FeatureVector& x) {
  return model.predict(x);
}

json LinearMultilabelModel::to_json() const {
  json weights = json::array();
  for (const auto& w : weights_) weights.push_back(w);
  json categories = json::array();
  for (Category c : kCategories) categories.push_back(std::string(triage::to_string(c)));
  return json{{"format", "triage-linear"}, {"version", 1},       {"dim", dim_},
              {"categories", categories},  {"weights", weights}, {"bias", bias_},
              {"hyperparameters", hyper_}};
}

LinearMultilabelModel LinearMultilabelModel::from_json(const json& j) {
  if (j.value("format", std::string()) != "triage-linear") throw DataError("not a linear model file");
  if (j.value("version", 0) != 1) throw DataError("unsupported linear model version");
  LinearMultilabelModel model(j.at("dim").get<std::size_t>(),
                              j.at("hyperparameters").get<Hyperparameters>());
  const auto& weights = j.at("weights");
  if (weights.size() != kCategoryCount) throw DataError("linear model must have three heads");
  for (std::size_t h = 0; h < kCategoryCount; ++h) {
    model.weights_[h] = weights.at(h).get<std::vector<double>>();
    if (model.weights_[h].size() != model.dim_) throw DataError("head weight length differs from dim");
  }
  model.bias_ = j.at("bias").get<std::array<double, kCategoryCount>>();
  return model;
}

void LinearMultilabelModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json().dump() << '\n';
}

LinearMultilabelModel LinearMultilabelModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return from_json(json::parse(in));
}

double head_loss(const LinearMultilabelModel& model, std::size_t head,
                 std::span<const FeatureVector> xs, std::span<const LabelVector> ys, double l2) {
  check_batch(model, xs, ys);
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double z = model.logit(head, xs[i]);
    total += softplus(z) - (ys[i][head] ? z : 0.0);
  }
  const auto w = model.weights(head);
  return total / static_cast<double>(xs.size()) + 0.5 * l2 * kernels::dot(w, w);
}

HeadGradient head_gradient(const LinearMultilabelModel& model, std::size_t head,
                           std::span<const FeatureVector> xs, std::span<const LabelVector> ys,
                           double l2) {
  check_batch(model, xs, ys);
  std::vector<std::size_t> rows(xs.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  HeadGradient g{std::vector<double>(model.dim(), 0.0), 0.0};
  const double inv = 1.0 / static_cast<double>(xs.size());
  g.bias = accumulate_residuals(model, head, xs, ys, rows, g.weights) * inv;
  kernels::scale(inv, g.weights);
  kernels::axpy(l2, model.weights(head), g.weights);
  return g;
}

LinearMultilabelModel train_linear(std::span<const FeatureVector> xs,
                                   std::span<const LabelVector> ys, const Hyperparameters& hyper) {
  if (xs.empty()) throw UsageError("cannot train on an empty labeled set");
  if (hyper.batch_size == 0 || hyper.epochs < 0 || !(hyper.learning_rate > 0.0) || hyper.l2 < 0.0) {
    throw UsageError("invalid training hyperparameters");
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!xs[i].all_finite()) {
      throw DataError("non-finite feature value in training row " + std::to_string(i));
    }
  }
  LinearMultilabelModel model(xs.front().dim, hyper);
  check_batch(model, xs, ys);

  Rng rng(hyper.seed);
  std::vector<std::size_t> order(xs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> g(model.dim());

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      const std::size_t end = std::min(order.size(), start + hyper.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      const double step = hyper.learning_rate / static_cast<double>(rows.size());
      for (std::size_t head = 0; head < kCategoryCount; ++head) {
        std::fill(g.begin(), g.end(), 0.0);
        const double bias_sum = accumulate_residuals(model, head, xs, ys, rows, g);
        auto w = model.weights(head);
        if (hyper.l2 > 0.0) kernels::scale(1.0 - hyper.learning_rate * hyper.l2, w);
        kernels::axpy(-step, g, w);
        model.bias(head) -= step * bias_sum;
      }
    }
  }
  return model;
}

LinearClassifier::LinearClassifier(std::shared_ptr<const Featurizer> featurizer,
                                   LinearMultilabelModel model, std::string version)
    : featurizer_(std::move(featurizer)), model_(std::move(model)), version_(std::move(version)) {
  if (featurizer_->dimension() != model_.dim()) {
    throw DataError("featurizer dimension does not match model dimension");
  }
}

std::vector<PredictionTriple> LinearClassifier::predict(std::span<const std::string> texts) const {
  std::vector<PredictionTriple> out;
  out.reserve(texts.size());
  for (const auto& text : texts) out.push_back(model_.predict(featurizer_->transform(text)));
  return out;
}

json LinearClassifier::to_json() const {
  return json{{"format", "triage-classifier"},
              {"version", 1},
              {"model_version", version_},
              {"featurizer", featurizer_->to_json()},
              {"model", model_.to_json()}};
}

LinearClassifier LinearClassifier::from_json(const json& j) {
  if (j.value("format", std::string()) != "triage-classifier") {
    throw DataError("not a classifier bundle");
  }
  if (j.value("version", 0) != 1) throw DataError("unsupported classifier bundle version");
  return LinearClassifier(featurizer_from_json(j.at("featurizer")),
                          LinearMultilabelModel::from_json(j.at("model")),
                          j.at("model_version").get<std::string>());
}

void LinearClassifier::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json().dump() << '\n';
}

LinearClassifier LinearClassifier::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

LinearClassifier train_tfidf_classifier(std::span<const std::string> texts,
                                        std::span<const LabelVector> labels,
                                        const Hyperparameters& hyper, std::string version) {
  auto featurizer = std::make_shared<TfidfFeaturizer>(fit_tfidf(texts));
  std::vector<FeatureVector> xs;
  xs.reserve(texts.size());
  for (const auto& text : texts) xs.push_back(featurizer->transform(text));
  auto model = train_linear(xs, labels, hyper);
  return LinearClassifier(std::move(featurizer), std::move(model), std::move(version));
}

}  // namespace triage
