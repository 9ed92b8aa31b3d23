#pragma once

#include <chrono>
#include <span>
#include <string>
#include <vector>

#include "triage/labels.hpp"
#include "triage/model.hpp"

namespace triage {

struct ExternalOptions {
  std::chrono::milliseconds timeout{10000};
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{100};  // doubled after each failure
};

/// POST {endpoint}/predict with {"sentences": [...]}; expects
/// {"predictions": [[p1, p2, p3], ...]} in the same order. Timeouts, connection
/// failures and 5xx are retried with exponential backoff; other failures and
/// malformed payloads throw ExternalServiceError immediately.
std::vector<PredictionTriple> external_predict(const std::string& endpoint,
                                               std::span<const std::string> sentences,
                                               const ExternalOptions& options = {});

/// Decodes a /predict response body for `expected` sentences.
std::vector<PredictionTriple> decode_predictions(const std::string& body, std::size_t expected);

/// A separately hosted model (e.g. a fine-tuned transformer) behind the adapter.
class ExternalClassifier final : public Classifier {
 public:
  explicit ExternalClassifier(std::string endpoint, ExternalOptions options = {})
      : endpoint_(std::move(endpoint)), options_(options) {}

  std::vector<PredictionTriple> predict(std::span<const std::string> texts) const override;
  std::string version() const override { return "external:" + endpoint_; }

 private:
  std::string endpoint_;
  ExternalOptions options_;
};

}  // namespace triage
