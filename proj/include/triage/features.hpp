#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "triage/corpus.hpp"

namespace triage {

/// Feature vector in one of two layouts: sparse (sorted column indices with
/// values) or dense (no indices, `values.size() == dim`).
struct FeatureVector {
  std::size_t dim = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  static FeatureVector dense(std::vector<double> values);
  static FeatureVector zeros(std::size_t dim) { return FeatureVector{dim, {}, {}}; }

  bool is_dense() const { return indices.empty() && dim > 0 && values.size() == dim; }
  std::size_t nonzeros() const;
  double norm() const;
  std::vector<double> to_dense() const;
  bool all_finite() const;
};

/// dot(weights, x) using the active kernel table.
double dot(std::span<const double> weights, const FeatureVector& x);
/// y += alpha * x
void add_scaled(std::span<double> y, double alpha, const FeatureVector& x);

/// TF-IDF with idf(t) = ln((1 + N) / (1 + df(t))) + 1, raw term counts and
/// L2-normalized rows. Vocabulary columns follow first occurrence.
class TfidfModel {
 public:
  TfidfModel() = default;
  TfidfModel(std::vector<std::string> terms, std::vector<double> idf, std::size_t documents);

  std::size_t size() const { return terms_.size(); }
  std::size_t documents() const { return documents_; }
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<double>& idf() const { return idf_; }
  /// Column of a token, or -1.
  std::int64_t column(std::string_view token) const;

  FeatureVector vectorize(std::string_view text) const;

  nlohmann::json to_json() const;
  static TfidfModel from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> terms_;
  std::vector<double> idf_;
  std::unordered_map<std::string, std::uint32_t> columns_;
  std::size_t documents_ = 0;
};

/// Throws UsageError on an empty corpus, DataError when no token survives tokenization.
TfidfModel fit_tfidf(std::span<const std::string> documents);
TfidfModel fit_tfidf(std::span<const Sentence> corpus);

FeatureVector vectorize(const Sentence& sentence, const TfidfModel& model);

/// Word vectors of one fixed dimension.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  void add(std::string token, std::vector<double> vector);
  const std::vector<double>* find(std::string_view token) const;

 private:
  std::size_t dim_;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

/// Text layout: header "N d", then N lines "token v1 ... vd".
EmbeddingTable load_embeddings(const std::filesystem::path& path);
EmbeddingTable parse_embeddings(std::istream& in);

/// Mean of the vectors of in-table feature tokens; zero vector when none match.
FeatureVector embed_average(std::string_view text, const EmbeddingTable& table);
inline FeatureVector embed_average(const Sentence& s, const EmbeddingTable& t) {
  return embed_average(s.text, t);
}

/// Text -> feature vector, shared by the classifier implementations.
class Featurizer {
 public:
  virtual ~Featurizer() = default;
  virtual FeatureVector transform(std::string_view text) const = 0;
  virtual std::size_t dimension() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

class TfidfFeaturizer final : public Featurizer {
 public:
  explicit TfidfFeaturizer(TfidfModel model) : model_(std::move(model)) {}
  FeatureVector transform(std::string_view text) const override { return model_.vectorize(text); }
  std::size_t dimension() const override { return model_.size(); }
  nlohmann::json to_json() const override;
  const TfidfModel& model() const { return model_; }

 private:
  TfidfModel model_;
};

class EmbeddingFeaturizer final : public Featurizer {
 public:
  EmbeddingFeaturizer(std::shared_ptr<const EmbeddingTable> table, std::string source)
      : table_(std::move(table)), source_(std::move(source)) {}
  FeatureVector transform(std::string_view text) const override {
    return embed_average(text, *table_);
  }
  std::size_t dimension() const override { return table_->dim(); }
  nlohmann::json to_json() const override;

 private:
  std::shared_ptr<const EmbeddingTable> table_;
  std::string source_;
};

std::shared_ptr<const Featurizer> featurizer_from_json(const nlohmann::json& j);

}  // namespace triage
