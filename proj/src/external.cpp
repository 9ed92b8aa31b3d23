#include "triage/external.hpp"

#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "triage/error.hpp"

namespace triage {

using nlohmann::json;

std::vector<PredictionTriple> decode_predictions(const std::string& body, std::size_t expected) {
  json payload;
  try {
    payload = json::parse(body);
  } catch (const json::exception& e) {
    throw ExternalServiceError(std::string("inference response is not JSON: ") + e.what());
  }
  if (!payload.is_object() || !payload.contains("predictions") || !payload["predictions"].is_array()) {
    throw ExternalServiceError("inference response lacks a 'predictions' array");
  }
  const auto& rows = payload["predictions"];
  if (rows.size() != expected) {
    throw ExternalServiceError("inference response has " + std::to_string(rows.size()) +
                               " predictions for " + std::to_string(expected) + " sentences");
  }
  std::vector<PredictionTriple> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (!row.is_array() || row.size() != kCategoryCount) {
      throw ExternalServiceError("prediction " + std::to_string(i) + " is not a triple");
    }
    PredictionTriple triple;
    for (std::size_t h = 0; h < kCategoryCount; ++h) {
      if (!row[h].is_number()) {
        throw ExternalServiceError("prediction " + std::to_string(i) + " has a non-numeric entry");
      }
      const double p = row[h].get<double>();
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ExternalServiceError("prediction " + std::to_string(i) + " has a value outside [0,1]");
      }
      triple[h] = p;
    }
    out.push_back(triple);
  }
  return out;
}

std::vector<PredictionTriple> external_predict(const std::string& endpoint,
                                               std::span<const std::string> sentences,
                                               const ExternalOptions& options) {
  if (sentences.empty()) throw UsageError("external_predict requires a nonempty batch");
  if (options.attempts < 1) throw UsageError("external_predict needs at least one attempt");

  const std::string request = json{{"sentences", sentences}}.dump();
  httplib::Client client(endpoint);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(options.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  auto backoff = options.initial_backoff;
  std::string last_failure;
  for (int attempt = 1; attempt <= options.attempts; ++attempt) {
    auto response = client.Post("/predict", request, "application/json");
    if (response && response->status >= 200 && response->status < 300) {
      return decode_predictions(response->body, sentences.size());
    }
    if (response && response->status < 500) {
      throw ExternalServiceError("inference service returned HTTP " + std::to_string(response->status));
    }
    last_failure = response ? "HTTP " + std::to_string(response->status)
                            : httplib::to_string(response.error());
    if (attempt < options.attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw ExternalServiceError("inference service at " + endpoint + " failed after " +
                             std::to_string(options.attempts) + " attempts: " + last_failure);
}

std::vector<PredictionTriple> ExternalClassifier::predict(std::span<const std::string> texts) const {
  if (texts.empty()) return {};
  return external_predict(endpoint_, texts, options_);
}

}  // namespace triage
