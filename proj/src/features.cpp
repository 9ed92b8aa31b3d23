#include "triage/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "triage/error.hpp"
#include "triage/kernels.hpp"
#include "triage/text.hpp"

namespace triage {

FeatureVector FeatureVector::dense(std::vector<double> values) {
  FeatureVector v;
  v.dim = values.size();
  v.values = std::move(values);
  return v;
}

std::size_t FeatureVector::nonzeros() const {
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(),
                                                [](double x) { return x != 0.0; }));
}

double FeatureVector::norm() const { return std::sqrt(kernels::dot(values, values)); }

std::vector<double> FeatureVector::to_dense() const {
  if (is_dense()) return values;
  std::vector<double> out(dim, 0.0);
  for (std::size_t k = 0; k < indices.size(); ++k) out[indices[k]] = values[k];
  return out;
}

bool FeatureVector::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

double dot(std::span<const double> weights, const FeatureVector& x) {
  if (x.is_dense()) return kernels::dot(weights, x.values);
  return kernels::sparse_dot(weights, x.indices, x.values);
}

void add_scaled(std::span<double> y, double alpha, const FeatureVector& x) {
  if (x.is_dense()) {
    kernels::axpy(alpha, x.values, y);
    return;
  }
  // Scatter has no AVX2 instruction; the sparse update stays scalar.
  for (std::size_t k = 0; k < x.indices.size(); ++k) y[x.indices[k]] += alpha * x.values[k];
}

TfidfModel::TfidfModel(std::vector<std::string> terms, std::vector<double> idf, std::size_t documents)
    : terms_(std::move(terms)), idf_(std::move(idf)), documents_(documents) {
  if (terms_.size() != idf_.size()) throw DataError("tf-idf vocabulary and idf lengths differ");
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (!(idf_[i] > 0.0)) throw DataError("tf-idf weight for '" + terms_[i] + "' is not positive");
    if (!columns_.emplace(terms_[i], static_cast<std::uint32_t>(i)).second) {
      throw DataError("duplicate tf-idf term '" + terms_[i] + "'");
    }
  }
}

std::int64_t TfidfModel::column(std::string_view token) const {
  const auto it = columns_.find(std::string(token));
  return it == columns_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

FeatureVector TfidfModel::vectorize(std::string_view text) const {
  std::map<std::uint32_t, double> counts;
  for (const auto& token : text::feature_tokens(text)) {
    if (const auto it = columns_.find(token); it != columns_.end()) counts[it->second] += 1.0;
  }
  FeatureVector v;
  v.dim = terms_.size();
  v.indices.reserve(counts.size());
  v.values.reserve(counts.size());
  for (const auto& [column, count] : counts) {
    v.indices.push_back(column);
    v.values.push_back(count * idf_[column]);
  }
  const double norm = v.norm();
  if (norm > 0.0) kernels::scale(1.0 / norm, v.values);
  return v;
}

nlohmann::json TfidfModel::to_json() const {
  return {{"terms", terms_}, {"idf", idf_}, {"documents", documents_}};
}

TfidfModel TfidfModel::from_json(const nlohmann::json& j) {
  return TfidfModel(j.at("terms").get<std::vector<std::string>>(),
                    j.at("idf").get<std::vector<double>>(), j.at("documents").get<std::size_t>());
}

TfidfModel fit_tfidf(std::span<const std::string> documents) {
  if (documents.empty()) throw UsageError("cannot fit tf-idf on an empty corpus");
  std::vector<std::string> terms;
  std::unordered_map<std::string, std::size_t> column;
  std::vector<std::size_t> df;
  for (const auto& document : documents) {
    std::vector<std::size_t> seen_here;
    for (auto& token : text::feature_tokens(document)) {
      auto [it, inserted] = column.emplace(token, terms.size());
      if (inserted) {
        terms.push_back(std::move(token));
        df.push_back(0);
      }
      seen_here.push_back(it->second);
    }
    std::sort(seen_here.begin(), seen_here.end());
    seen_here.erase(std::unique(seen_here.begin(), seen_here.end()), seen_here.end());
    for (std::size_t c : seen_here) ++df[c];
  }
  if (terms.empty()) throw DataError("corpus has no extractable tokens");
  const double n = static_cast<double>(documents.size());
  std::vector<double> idf(terms.size());
  for (std::size_t c = 0; c < terms.size(); ++c) {
    idf[c] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[c]))) + 1.0;
  }
  return TfidfModel(std::move(terms), std::move(idf), documents.size());
}

TfidfModel fit_tfidf(std::span<const Sentence> corpus) {
  std::vector<std::string> texts;
  texts.reserve(corpus.size());
  for (const auto& s : corpus) texts.push_back(s.text);
  return fit_tfidf(std::span<const std::string>(texts));
}

FeatureVector vectorize(const Sentence& sentence, const TfidfModel& model) {
  return model.vectorize(sentence.text);
}

void EmbeddingTable::add(std::string token, std::vector<double> vector) {
  if (vector.size() != dim_) {
    throw DataError("embedding for '" + token + "' has dimension " + std::to_string(vector.size()) +
                    ", expected " + std::to_string(dim_));
  }
  vectors_.insert_or_assign(std::move(token), std::move(vector));
}

const std::vector<double>* EmbeddingTable::find(std::string_view token) const {
  const auto it = vectors_.find(std::string(token));
  return it == vectors_.end() ? nullptr : &it->second;
}

EmbeddingTable parse_embeddings(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("embedding file is empty");
  std::istringstream header(line);
  std::size_t count = 0;
  std::size_t dim = 0;
  if (!(header >> count >> dim) || dim == 0) {
    throw DataError("embedding header must be \"N d\" with d > 0");
  }
  EmbeddingTable table(dim);
  for (std::size_t row = 0; row < count; ++row) {
    if (!std::getline(in, line)) {
      throw DataError("embedding file ends after " + std::to_string(row) + " of " +
                      std::to_string(count) + " rows");
    }
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    std::vector<double> vector;
    vector.reserve(dim);
    double x;
    while (fields >> x) vector.push_back(x);
    if (token.empty() || vector.size() != dim) {
      throw DataError("embedding row " + std::to_string(row + 2) + " is malformed");
    }
    table.add(text::to_lower(token), std::move(vector));
  }
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_embeddings(in);
}

FeatureVector embed_average(std::string_view text, const EmbeddingTable& table) {
  std::vector<double> sum(table.dim(), 0.0);
  std::size_t hits = 0;
  for (const auto& token : text::feature_tokens(text)) {
    if (const auto* v = table.find(token)) {
      kernels::axpy(1.0, *v, sum);
      ++hits;
    }
  }
  if (hits > 0) kernels::scale(1.0 / static_cast<double>(hits), sum);
  return FeatureVector::dense(std::move(sum));
}

nlohmann::json TfidfFeaturizer::to_json() const {
  auto j = model_.to_json();
  j["kind"] = "tfidf";
  return j;
}

nlohmann::json EmbeddingFeaturizer::to_json() const {
  return {{"kind", "embedding"}, {"source", source_}, {"dim", table_->dim()}};
}

std::shared_ptr<const Featurizer> featurizer_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "tfidf") return std::make_shared<TfidfFeaturizer>(TfidfModel::from_json(j));
  if (kind == "embedding") {
    const auto source = j.at("source").get<std::string>();
    auto table = std::make_shared<EmbeddingTable>(load_embeddings(source));
    if (table->dim() != j.at("dim").get<std::size_t>()) {
      throw DataError("embedding table " + source + " dimension differs from the saved model");
    }
    return std::make_shared<EmbeddingFeaturizer>(std::move(table), source);
  }
  throw DataError("unknown featurizer kind '" + kind + "'");
}

}  // namespace triage
