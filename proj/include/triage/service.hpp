#pragma once

#include <array>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "triage/active.hpp"
#include "triage/labels.hpp"
#include "triage/metrics.hpp"

namespace triage {

struct AnnotatorAccount {
  std::string id;
  std::string token;
  bool adjudicator = false;
};

enum class TaskState { kOpen, kPartiallyLabeled, kConflicted, kResolved };

std::string_view to_string(TaskState state);

struct AnnotationTask {
  std::string id;
  Sentence sentence;
  std::size_t cycle = 0;
  std::vector<std::string> assignees;  // two, or one in single-annotator mode
  std::map<std::string, LabelVector> answers;
  std::optional<LabelVector> adjudicated;
  std::string adjudicator;
  TaskState state = TaskState::kOpen;

  /// Agreed answer, the adjudicated answer, or the sole answer in single mode.
  std::optional<LabelVector> gold() const;
  /// Questions on which the two stored answers differ.
  std::array<bool, kCategoryCount> disagreements() const;
};

/// One task per sentence, assigned round-robin over the ring of annotator pairs
/// (A,B), (B,C), ..., (Z,A); with exactly two annotators every task gets (A,B).
/// `single` assigns one annotator per task instead. Throws UsageError with
/// fewer than two annotators (one suffices in single mode).
std::vector<AnnotationTask> create_tasks(const std::vector<Sentence>& sentences,
                                         const std::vector<std::string>& annotators, bool single,
                                         std::size_t first_sequence = 1, std::size_t cycle = 0);

struct PairAgreement {
  std::string first;
  std::string second;
  std::size_t items = 0;
  std::array<KappaResult, kCategoryCount> kappa{};
};

struct AgreementDashboard {
  std::vector<PairAgreement> pairs;
  /// All doubly-labeled items pooled into one table, per question.
  std::array<std::optional<KappaResult>, kCategoryCount> pooled;
  /// Unweighted mean of the pair kappas, per question.
  std::array<std::optional<double>, kCategoryCount> mean_of_pairs;
};

nlohmann::json to_json_value(const AgreementDashboard& dashboard);

AgreementDashboard compute_agreement(const std::vector<AnnotationTask>& tasks);

struct CycleStatus {
  std::size_t cycle_index = 0;  // most recently opened cycle, 0 before any
  bool open = false;            // opened and not yet advanced
  std::size_t queried = 0;
  std::size_t resolved = 0;
  std::size_t conflicted = 0;
  std::size_t pending = 0;  // open or partially labeled
  bool blocking() const { return open && resolved != queried; }
};

struct ServiceConfig {
  std::vector<AnnotatorAccount> accounts;
  std::filesystem::path log_path;
  std::size_t batch_cap = 0;  // max labels per annotator session; 0 = unlimited
};

/// {"accounts": [{"id", "token", "adjudicator"}], "log": path, "batch_cap": n}
ServiceConfig load_service_config(const std::filesystem::path& path);

/// What an annotator may see of a task: never another annotator's answers.
struct TaskView {
  std::string task_id;
  std::string text;
  std::size_t cycle = 0;
};

struct ConflictView {
  std::string task_id;
  std::string text;
  std::map<std::string, LabelVector> answers;
  std::array<bool, kCategoryCount> disagreements{};
};

/// Annotation protocol state backed by an append-only event log that is
/// replayed on construction. Every mutation is made durable (fsync) before
/// the in-memory state changes and before the call returns.
class AnnotationService {
 public:
  explicit AnnotationService(ServiceConfig config);
  ~AnnotationService();

  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  /// Account for a bearer token, if any.
  std::optional<AnnotatorAccount> authenticate(const std::string& token) const;

  /// Opens a cycle: one task per request. Throws ConflictError while another
  /// cycle is still open.
  std::vector<AnnotationTask> open_cycle(std::size_t cycle, const std::vector<Sentence>& sentences,
                                         bool single_annotator);

  std::optional<TaskView> next_task(const std::string& annotator_id);
  TaskState submit_label(const std::string& task_id, const std::string& annotator_id, const LabelVector& answers);
  AnnotationTask adjudicate(const std::string& task_id, const std::string& adjudicator_id, const LabelVector& answers);
  std::vector<ConflictView> conflicts(const std::string& adjudicator_id) const;

  AgreementDashboard agreement_dashboard() const;
  CycleStatus cycle_status() const;
  /// Closes the open cycle. Throws ConflictError while any of its tasks is unresolved.
  void advance_cycle(const std::string& adjudicator_id);

  /// Blocks until `cycle` is advanced (returns its gold labels) or the service
  /// shuts down (throws ChannelClosedError).
  std::map<SentenceKey, LabelVector> wait_for_cycle(std::size_t cycle);
  void shutdown();

  std::size_t log_position() const;
  std::vector<AnnotationTask> tasks() const;
  std::optional<AnnotationTask> task(const std::string& task_id) const;

 private:
  struct Session {
    std::size_t labeled = 0;
  };

  void replay();
  void append(const nlohmann::json& event);
  void apply(const nlohmann::json& event);
  const AnnotatorAccount& account(const std::string& id) const;
  AnnotationTask& find_task(const std::string& task_id);
  CycleStatus status_locked() const;

  ServiceConfig config_;
  mutable std::mutex mutex_;
  std::condition_variable changed_;
  int log_fd_ = -1;
  std::size_t position_ = 0;
  std::vector<AnnotationTask> tasks_;
  std::map<std::string, std::size_t> task_index_;
  std::size_t current_cycle_ = 0;
  bool cycle_open_ = false;
  std::set<std::size_t> advanced_;
  bool stopped_ = false;
  std::map<std::string, Session> sessions_;
};

/// Routes cycle-engine queries through the annotation service and blocks
/// until an adjudicator advances the cycle.
class ServiceChannel final : public AnnotationChannel {
 public:
  ServiceChannel(AnnotationService& service, bool single_annotator = false)
      : service_(service), single_(single_annotator) {}

  std::map<SentenceKey, LabelVector> request_labels(const std::vector<AnnotationRequest>& requests,
                                                    std::size_t cycle) override;

 private:
  AnnotationService& service_;
  bool single_;
};

}  // namespace triage
