#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "triage/corpus.hpp"
#include "triage/labels.hpp"
#include "triage/lexicons.hpp"
#include "triage/metrics.hpp"
#include "triage/model.hpp"

namespace triage {

/// Threshold that no probability reaches; only the random floor is queried.
inline constexpr double kNeverQuery = std::numeric_limits<double>::infinity();

/// Per category: query every item with p >= threshold, plus
/// floor(below_numerator * n / below_denominator) random items below it.
struct QueryPolicy {
  std::array<double, kCategoryCount> thresholds{0.038177, 0.008476, 0.007874};
  std::size_t below_numerator = 30;
  std::size_t below_denominator = 100;
  std::uint64_t seed = 0;

  /// Throws UsageError when a threshold is outside [0,1] (and not kNeverQuery)
  /// or the below-threshold rate is not a proper fraction.
  void validate() const;
  bool operator==(const QueryPolicy&) const = default;
};

/// {"thresholds": [t1, t2, t3], "below_rate": [30, 100], "seed": s}; kNeverQuery is null.
void to_json(nlohmann::json& j, const QueryPolicy& policy);
void from_json(const nlohmann::json& j, QueryPolicy& policy);
QueryPolicy load_policy(const std::filesystem::path& path);
void save_policy(const std::filesystem::path& path, const QueryPolicy& policy);

enum class Provenance { kSeedLabeled, kModelLabeled, kHumanQueried };

std::string_view to_string(Provenance provenance);
Provenance provenance_from_string(std::string_view name);

struct LabeledSentence {
  Sentence sentence;
  LabelVector labels;
  Provenance provenance = Provenance::kSeedLabeled;
  std::size_t cycle = 0;

  bool operator==(const LabeledSentence&) const = default;
};

/// {"post_id", "index", "text", "labels": {...}, "provenance", "cycle"}
void to_json(nlohmann::json& j, const LabeledSentence& item);
void from_json(const nlohmann::json& j, LabeledSentence& item);

std::string serialize_snapshot(std::span<const LabeledSentence> pool);
std::vector<LabeledSentence> parse_snapshot(std::string_view contents);
std::vector<LabeledSentence> read_snapshot(const std::filesystem::path& path);

// --- sampling and calibration ---------------------------------------------

/// Uniform sample without replacement of n keyword-free sentences, returned in
/// pool order. Throws DataError reporting the available count when short.
std::vector<Sentence> sample_unlabeled(std::span<const Sentence> pool, const Lexicons& lexicons,
                                       std::size_t n, std::uint64_t seed);

/// Disjoint V (fine-tune) and T (holdout) index sets covering [0, n).
struct CalibrationSplit {
  std::vector<std::size_t> tune;
  std::vector<std::size_t> holdout;
};

CalibrationSplit split_calibration(std::size_t n, std::size_t tune_size, std::uint64_t seed);

struct CalibrationResult {
  QueryPolicy policy;
  std::array<std::optional<RocCurve>, kCategoryCount> curves;
  std::array<std::size_t, kCategoryCount> misclassified{};
  std::vector<std::string> warnings;
};

/// Per category, items whose 0.5-cut label disagrees with the human label are
/// the positive class and the category probability is the score; the threshold
/// is the Youden point. A category with no misclassified item gets kNeverQuery,
/// one with no correctly classified item gets 0; both add a warning.
CalibrationResult calibrate(std::span<const PredictionTriple> predictions,
                            std::span<const LabelVector> human, std::uint64_t seed,
                            double cut = 0.5);

// --- querying --------------------------------------------------------------

struct QueriedItem {
  std::size_t index = 0;
  std::array<bool, kCategoryCount> tags{};
};

struct QueryResult {
  std::array<std::vector<std::size_t>, kCategoryCount> per_category;  // ascending
  std::vector<QueriedItem> items;  // union, ascending index, each once
};

QueryResult query(const QueryPolicy& policy, std::span<const PredictionTriple> predictions);

class QueryStrategy {
 public:
  virtual ~QueryStrategy() = default;
  /// `round` varies the random draws between cycles.
  virtual QueryResult select(std::span<const PredictionTriple> predictions, std::uint64_t round) const = 0;
  virtual std::string name() const = 0;
};

class ThresholdQuery final : public QueryStrategy {
 public:
  explicit ThresholdQuery(QueryPolicy policy) : policy_(std::move(policy)) {}
  QueryResult select(std::span<const PredictionTriple> predictions, std::uint64_t round) const override;
  std::string name() const override { return "threshold"; }

 private:
  QueryPolicy policy_;
};

enum class Uncertainty { kLeastConfidence, kEntropy };

/// Classic uncertainty sampling: per category, the `per_hundred` most
/// uncertain items out of every 100 predictions.
class UncertaintyQuery final : public QueryStrategy {
 public:
  UncertaintyQuery(Uncertainty measure, std::size_t per_hundred)
      : measure_(measure), per_hundred_(per_hundred) {}
  QueryResult select(std::span<const PredictionTriple> predictions, std::uint64_t round) const override;
  std::string name() const override;

 private:
  Uncertainty measure_;
  std::size_t per_hundred_;
};

double uncertainty(Uncertainty measure, double p);

/// Uniform random items, tagged for every category.
class RandomQuery final : public QueryStrategy {
 public:
  RandomQuery(double fraction, std::uint64_t seed) : fraction_(fraction), seed_(seed) {}
  QueryResult select(std::span<const PredictionTriple> predictions, std::uint64_t round) const override;
  std::string name() const override { return "random"; }

 private:
  double fraction_;
  std::uint64_t seed_;
};

struct RetrievalStats {
  std::array<std::size_t, kCategoryCount> misclassified{};
  std::array<std::size_t, kCategoryCount> retrieved{};
  std::array<std::size_t, kCategoryCount> queried{};
  std::size_t items = 0;

  double recall(std::size_t c) const {
    return misclassified[c] == 0 ? 1.0 : static_cast<double>(retrieved[c]) / misclassified[c];
  }
  double queried_fraction(std::size_t c) const {
    return items == 0 ? 0.0 : static_cast<double>(queried[c]) / static_cast<double>(items);
  }
};

/// How many misclassified items (0.5 cut vs human) each category's query caught.
RetrievalStats evaluate_retrieval(const QueryResult& result, std::span<const PredictionTriple> predictions,
                                  std::span<const LabelVector> human, double cut = 0.5);

// --- label merging and the cycle engine ---------------------------------------

/// Human labels replace model labels; provenance records which one was kept.
/// Throws UsageError when a human label names a sentence outside the batch.
std::vector<LabeledSentence> merge_labels(std::span<const Sentence> batch,
                                          std::span<const LabelVector> model_labels,
                                          const std::map<SentenceKey, LabelVector>& human,
                                          std::size_t cycle);

enum class AuditKind { kCycleBegin, kAppend, kOverride, kCycleCommit };

struct AuditEvent {
  AuditKind kind = AuditKind::kAppend;
  std::size_t cycle = 0;
  std::string model_version;          // cycle_begin
  std::optional<LabeledSentence> item;  // append, override (the human-labeled item)
  LabelVector model_labels;           // override: the label that was replaced
  std::size_t pool_size = 0;          // cycle_commit

  bool operator==(const AuditEvent&) const = default;
};

void to_json(nlohmann::json& j, const AuditEvent& event);
void from_json(const nlohmann::json& j, AuditEvent& event);
std::vector<AuditEvent> read_audit(const std::filesystem::path& path);

/// Re-applies the append events of committed cycles to `initial`.
std::vector<LabeledSentence> replay_audit(std::vector<LabeledSentence> initial,
                                          std::span<const AuditEvent> events);

struct CycleState {
  std::size_t cycle_index = 0;
  std::vector<LabeledSentence> pool;  // L
  std::string model_version;
  QueryPolicy policy;
  std::vector<AuditEvent> audit;
};

CycleState initial_state(std::vector<LabeledSentence> seed_pool, QueryPolicy policy);

struct AnnotationRequest {
  Sentence sentence;
  std::array<bool, kCategoryCount> tags{};
  PredictionTriple prediction;
};

/// Where queried sentences go to be labeled by people. Blocks until every
/// request has a label; throws ChannelClosedError if it closes first.
class AnnotationChannel {
 public:
  virtual ~AnnotationChannel() = default;
  virtual std::map<SentenceKey, LabelVector> request_labels(
      const std::vector<AnnotationRequest>& requests, std::size_t cycle) = 0;
};

/// Answers from a function; a nullopt answer closes the channel.
class OracleChannel final : public AnnotationChannel {
 public:
  using Oracle = std::function<std::optional<LabelVector>(const Sentence&)>;
  explicit OracleChannel(Oracle oracle) : oracle_(std::move(oracle)) {}
  std::map<SentenceKey, LabelVector> request_labels(const std::vector<AnnotationRequest>& requests,
                                                    std::size_t cycle) override;
  std::size_t labels_served() const { return served_; }

 private:
  Oracle oracle_;
  std::size_t served_ = 0;
};

/// Append-only snapshot directory: cycle snapshots are new files that are
/// never overwritten, and audit events are appended to audit.jsonl.
class SnapshotStore {
 public:
  explicit SnapshotStore(std::filesystem::path directory);

  const std::filesystem::path& directory() const { return directory_; }
  /// Writes <name>.jsonl (or <name>.<n>.jsonl if taken) atomically; returns the path.
  std::filesystem::path write(const std::string& name, std::span<const LabeledSentence> pool);
  void append_audit(std::span<const AuditEvent> events);
  std::filesystem::path audit_path() const { return directory_ / "audit.jsonl"; }

 private:
  std::filesystem::path directory_;
};

using ClassifierTrainer =
    std::function<std::shared_ptr<const Classifier>(const std::vector<LabeledSentence>& pool, std::size_t cycle)>;

/// TF-IDF + linear heads retrained from scratch on L.
ClassifierTrainer tfidf_trainer(Hyperparameters hyper);

struct CycleOptions {
  /// Null means ThresholdQuery over the state's policy.
  std::shared_ptr<const QueryStrategy> strategy;
  bool recalibrate = false;
  double cut = 0.5;
};

struct CycleReport {
  CycleState state;
  QueryResult query;
  std::vector<PredictionTriple> predictions;
  std::size_t human_labels = 0;
  std::size_t overrides = 0;
};

/// One pass of the loop: train on L, predict on U, query and wait for human
/// labels, merge and append U to L. The input state is never modified, so an
/// abort (ChannelClosedError or any other exception) leaves the caller at the
/// pre-cycle snapshot. Throws UsageError if U overlaps L or repeats a sentence.
CycleReport run_cycle(const CycleState& state, const std::vector<Sentence>& batch,
                      AnnotationChannel& channel, const ClassifierTrainer& trainer,
                      SnapshotStore* store = nullptr, const CycleOptions& options = {});

}  // namespace triage
