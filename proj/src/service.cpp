#include "triage/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <set>

#include "triage/error.hpp"

namespace triage {

using nlohmann::json;

std::string_view to_string(TaskState state) {
  switch (state) {
    case TaskState::kOpen:
      return "open";
    case TaskState::kPartiallyLabeled:
      return "partially_labeled";
    case TaskState::kConflicted:
      return "conflicted";
    case TaskState::kResolved:
      return "resolved";
  }
  return "unknown";
}

std::optional<LabelVector> AnnotationTask::gold() const {
  if (adjudicated) return adjudicated;
  if (state != TaskState::kResolved || answers.empty()) return std::nullopt;
  return answers.begin()->second;
}

std::array<bool, kCategoryCount> AnnotationTask::disagreements() const {
  std::array<bool, kCategoryCount> out{};
  if (answers.size() < 2) return out;
  const auto& a = answers.begin()->second;
  const auto& b = std::next(answers.begin())->second;
  for (std::size_t q = 0; q < kCategoryCount; ++q) out[q] = a[q] != b[q];
  return out;
}

namespace {

std::string task_id_for(std::size_t sequence) {
  std::string digits = std::to_string(sequence);
  if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
  return "t" + digits;
}

}  // namespace

std::vector<AnnotationTask> create_tasks(const std::vector<Sentence>& sentences,
                                         const std::vector<std::string>& annotators, bool single,
                                         std::size_t first_sequence, std::size_t cycle) {
  const std::size_t needed = single ? 1 : 2;
  if (annotators.size() < needed) {
    throw UsageError("create_tasks: need at least " + std::to_string(needed) + " annotator(s), got " +
                     std::to_string(annotators.size()));
  }
  std::set<std::string> distinct(annotators.begin(), annotators.end());
  if (distinct.size() != annotators.size()) throw UsageError("create_tasks: duplicate annotator id");

  // With two annotators the ring (A,B),(B,A) would collapse to one pair.
  const std::size_t ring = single ? annotators.size() : (annotators.size() == 2 ? 1 : annotators.size());
  std::vector<AnnotationTask> tasks;
  tasks.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    AnnotationTask task;
    task.id = task_id_for(first_sequence + i);
    task.sentence = sentences[i];
    task.cycle = cycle;
    const std::size_t slot = i % ring;
    task.assignees.push_back(annotators[slot]);
    if (!single) task.assignees.push_back(annotators[(slot + 1) % annotators.size()]);
    tasks.push_back(std::move(task));
  }
  return tasks;
}

AgreementDashboard compute_agreement(const std::vector<AnnotationTask>& tasks) {
  struct Table {
    std::array<std::array<std::size_t, 4>, kCategoryCount> cells{};  // yy, yn, ny, nn
    std::size_t items = 0;
  };
  std::map<std::pair<std::string, std::string>, Table> per_pair;
  Table pooled;
  auto tally = [](Table& t, const LabelVector& a, const LabelVector& b) {
    for (std::size_t q = 0; q < kCategoryCount; ++q) {
      const std::size_t cell = (a[q] ? 0 : 2) + (b[q] ? 0 : 1);
      ++t.cells[q][cell];
    }
    ++t.items;
  };
  for (const auto& task : tasks) {
    if (task.assignees.size() != 2 || task.answers.size() != 2) continue;
    // answers is ordered by annotator id, so `first` is the smaller id.
    const auto& [first, a] = *task.answers.begin();
    const auto& [second, b] = *std::next(task.answers.begin());
    tally(per_pair[{first, second}], a, b);
    tally(pooled, a, b);
  }

  AgreementDashboard dashboard;
  std::array<double, kCategoryCount> sums{};
  for (const auto& [pair, table] : per_pair) {
    PairAgreement row;
    row.first = pair.first;
    row.second = pair.second;
    row.items = table.items;
    for (std::size_t q = 0; q < kCategoryCount; ++q) {
      const auto& c = table.cells[q];
      row.kappa[q] = cohen_kappa_counts(c[0], c[1], c[2], c[3]);
      sums[q] += row.kappa[q].kappa;
    }
    dashboard.pairs.push_back(std::move(row));
  }
  if (pooled.items > 0) {
    for (std::size_t q = 0; q < kCategoryCount; ++q) {
      const auto& c = pooled.cells[q];
      dashboard.pooled[q] = cohen_kappa_counts(c[0], c[1], c[2], c[3]);
      dashboard.mean_of_pairs[q] = sums[q] / static_cast<double>(dashboard.pairs.size());
    }
  }
  return dashboard;
}

json to_json_value(const AgreementDashboard& dashboard) {
  json pairs = json::array();
  for (const auto& row : dashboard.pairs) {
    json questions = json::object();
    for (std::size_t q = 0; q < kCategoryCount; ++q) {
      questions[std::string(to_string(kCategories[q]))] = row.kappa[q];
    }
    pairs.push_back({{"annotators", {row.first, row.second}}, {"items", row.items}, {"kappa", questions}});
  }
  json pooled = json::object();
  json mean = json::object();
  for (std::size_t q = 0; q < kCategoryCount; ++q) {
    const std::string name(to_string(kCategories[q]));
    pooled[name] = dashboard.pooled[q] ? json(*dashboard.pooled[q]) : json(nullptr);
    mean[name] = dashboard.mean_of_pairs[q] ? json(*dashboard.mean_of_pairs[q]) : json(nullptr);
  }
  return {{"pairs", pairs}, {"pooled", pooled}, {"mean_of_pairs", mean}};
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open service config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  ServiceConfig config;
  try {
    for (const auto& a : j.at("accounts")) {
      config.accounts.push_back({a.at("id").get<std::string>(), a.at("token").get<std::string>(),
                                 a.value("adjudicator", false)});
    }
    std::filesystem::path log = j.at("log").get<std::string>();
    config.log_path = log.is_relative() ? path.parent_path() / log : log;
    config.batch_cap = j.value("batch_cap", std::size_t{0});
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return config;
}

AnnotationService::AnnotationService(ServiceConfig config) : config_(std::move(config)) {
  std::set<std::string> ids, tokens;
  for (const auto& a : config_.accounts) {
    if (a.id.empty() || a.token.empty()) throw UsageError("service account needs an id and a token");
    if (!ids.insert(a.id).second) throw UsageError("duplicate service account " + a.id);
    if (!tokens.insert(a.token).second) throw UsageError("duplicate token for account " + a.id);
  }
  if (config_.log_path.empty()) throw UsageError("service needs an event log path");
  if (config_.log_path.has_parent_path()) std::filesystem::create_directories(config_.log_path.parent_path());
  replay();
  log_fd_ = ::open(config_.log_path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (log_fd_ < 0) {
    throw DataError("cannot open event log " + config_.log_path.string() + ": " + std::strerror(errno));
  }
}

AnnotationService::~AnnotationService() {
  shutdown();
  if (log_fd_ >= 0) ::close(log_fd_);
}

void AnnotationService::replay() {
  std::ifstream in(config_.log_path);
  if (!in) return;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      apply(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError(config_.log_path.string() + ":" + std::to_string(number) + ": " + e.what());
    } catch (const Error& e) {
      throw DataError(config_.log_path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
    ++position_;
  }
}

void AnnotationService::append(const json& event) {
  const std::string line = event.dump() + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(log_fd_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw DataError("event log write failed: " + std::string(std::strerror(errno)));
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(log_fd_) != 0) throw DataError("event log fsync failed: " + std::string(std::strerror(errno)));
  ++position_;
}

void AnnotationService::apply(const json& event) {
  const std::string kind = event.at("event").get<std::string>();
  if (kind == "cycle_opened") {
    current_cycle_ = event.at("cycle").get<std::size_t>();
    cycle_open_ = true;
  } else if (kind == "task_created") {
    AnnotationTask task;
    task.id = event.at("task_id").get<std::string>();
    task.sentence = event.at("sentence").get<Sentence>();
    task.cycle = event.at("cycle").get<std::size_t>();
    task.assignees = event.at("assignees").get<std::vector<std::string>>();
    if (task_index_.count(task.id)) throw DataError("duplicate task " + task.id);
    task_index_[task.id] = tasks_.size();
    tasks_.push_back(std::move(task));
  } else if (kind == "label_submitted") {
    auto& task = find_task(event.at("task_id").get<std::string>());
    task.answers[event.at("annotator").get<std::string>()] = event.at("answers").get<LabelVector>();
    if (task.answers.size() < task.assignees.size()) {
      task.state = TaskState::kPartiallyLabeled;
    } else if (task.answers.size() == 1 || task.answers.begin()->second == std::next(task.answers.begin())->second) {
      task.state = TaskState::kResolved;
    } else {
      task.state = TaskState::kConflicted;
    }
  } else if (kind == "adjudicated") {
    auto& task = find_task(event.at("task_id").get<std::string>());
    task.adjudicated = event.at("answers").get<LabelVector>();
    task.adjudicator = event.at("adjudicator").get<std::string>();
    task.state = TaskState::kResolved;
  } else if (kind == "cycle_advanced") {
    advanced_.insert(event.at("cycle").get<std::size_t>());
    cycle_open_ = false;
  } else {
    throw DataError("unknown event kind '" + kind + "'");
  }
  changed_.notify_all();
}

std::optional<AnnotatorAccount> AnnotationService::authenticate(const std::string& token) const {
  for (const auto& a : config_.accounts) {
    if (a.token == token) return a;
  }
  return std::nullopt;
}

const AnnotatorAccount& AnnotationService::account(const std::string& id) const {
  for (const auto& a : config_.accounts) {
    if (a.id == id) return a;
  }
  throw NotFoundError("unknown annotator '" + id + "'");
}

AnnotationTask& AnnotationService::find_task(const std::string& task_id) {
  auto it = task_index_.find(task_id);
  if (it == task_index_.end()) throw NotFoundError("unknown task '" + task_id + "'");
  return tasks_[it->second];
}

std::vector<AnnotationTask> AnnotationService::open_cycle(std::size_t cycle, const std::vector<Sentence>& sentences,
                                                          bool single_annotator) {
  std::lock_guard lock(mutex_);
  if (cycle_open_) {
    throw ConflictError("cycle " + std::to_string(current_cycle_) + " is still open");
  }
  if (advanced_.count(cycle)) {
    throw ConflictError("cycle " + std::to_string(cycle) + " was already advanced");
  }
  std::vector<std::string> annotators;
  for (const auto& a : config_.accounts) {
    if (!a.adjudicator) annotators.push_back(a.id);
  }
  auto created = create_tasks(sentences, annotators, single_annotator, tasks_.size() + 1, cycle);
  const json opened = {{"event", "cycle_opened"}, {"cycle", cycle}};
  append(opened);
  apply(opened);
  for (const auto& task : created) {
    const json event = {{"event", "task_created"}, {"task_id", task.id},   {"cycle", cycle},
                        {"sentence", task.sentence}, {"assignees", task.assignees}};
    append(event);
    apply(event);
  }
  return created;
}

std::optional<TaskView> AnnotationService::next_task(const std::string& annotator_id) {
  std::lock_guard lock(mutex_);
  account(annotator_id);
  if (config_.batch_cap > 0 && sessions_[annotator_id].labeled >= config_.batch_cap) return std::nullopt;
  for (const auto& task : tasks_) {
    if (task.state == TaskState::kResolved || task.state == TaskState::kConflicted) continue;
    if (std::find(task.assignees.begin(), task.assignees.end(), annotator_id) == task.assignees.end()) continue;
    if (task.answers.count(annotator_id)) continue;
    return TaskView{task.id, task.sentence.text, task.cycle};
  }
  return std::nullopt;
}

TaskState AnnotationService::submit_label(const std::string& task_id, const std::string& annotator_id,
                                          const LabelVector& answers) {
  std::lock_guard lock(mutex_);
  account(annotator_id);
  auto& task = find_task(task_id);
  if (std::find(task.assignees.begin(), task.assignees.end(), annotator_id) == task.assignees.end()) {
    throw AuthorizationError("task " + task_id + " is not assigned to " + annotator_id);
  }
  if (task.answers.count(annotator_id)) {
    throw ConflictError(annotator_id + " already labeled task " + task_id);
  }
  if (task.state == TaskState::kResolved) throw ConflictError("task " + task_id + " is already resolved");
  if (config_.batch_cap > 0 && sessions_[annotator_id].labeled >= config_.batch_cap) {
    throw ConflictError(annotator_id + " reached the session batch cap of " + std::to_string(config_.batch_cap));
  }
  const json event = {{"event", "label_submitted"}, {"task_id", task_id}, {"annotator", annotator_id},
                      {"answers", answers}};
  append(event);
  apply(event);
  ++sessions_[annotator_id].labeled;
  return task.state;
}

AnnotationTask AnnotationService::adjudicate(const std::string& task_id, const std::string& adjudicator_id,
                                             const LabelVector& answers) {
  std::lock_guard lock(mutex_);
  if (!account(adjudicator_id).adjudicator) throw AuthorizationError(adjudicator_id + " is not an adjudicator");
  auto& task = find_task(task_id);
  if (task.state != TaskState::kConflicted) {
    throw ConflictError("task " + task_id + " is " + std::string(to_string(task.state)) + ", not conflicted");
  }
  const json event = {{"event", "adjudicated"}, {"task_id", task_id}, {"adjudicator", adjudicator_id},
                      {"answers", answers}};
  append(event);
  apply(event);
  return task;
}

std::vector<ConflictView> AnnotationService::conflicts(const std::string& adjudicator_id) const {
  std::lock_guard lock(mutex_);
  if (!account(adjudicator_id).adjudicator) throw AuthorizationError(adjudicator_id + " is not an adjudicator");
  std::vector<ConflictView> out;
  for (const auto& task : tasks_) {
    if (task.state != TaskState::kConflicted) continue;
    out.push_back({task.id, task.sentence.text, task.answers, task.disagreements()});
  }
  return out;
}

AgreementDashboard AnnotationService::agreement_dashboard() const {
  std::lock_guard lock(mutex_);
  return compute_agreement(tasks_);
}

CycleStatus AnnotationService::status_locked() const {
  CycleStatus status;
  status.cycle_index = current_cycle_;
  status.open = cycle_open_;
  for (const auto& task : tasks_) {
    if (task.cycle != current_cycle_) continue;
    ++status.queried;
    switch (task.state) {
      case TaskState::kResolved:
        ++status.resolved;
        break;
      case TaskState::kConflicted:
        ++status.conflicted;
        break;
      default:
        ++status.pending;
    }
  }
  return status;
}

CycleStatus AnnotationService::cycle_status() const {
  std::lock_guard lock(mutex_);
  return status_locked();
}

void AnnotationService::advance_cycle(const std::string& adjudicator_id) {
  std::lock_guard lock(mutex_);
  if (!account(adjudicator_id).adjudicator) throw AuthorizationError(adjudicator_id + " is not an adjudicator");
  const auto status = status_locked();
  if (!status.open) throw ConflictError("no open cycle to advance");
  if (status.blocking()) {
    throw ConflictError("cycle " + std::to_string(status.cycle_index) + " has " + std::to_string(status.conflicted) +
                        " conflicted and " + std::to_string(status.pending) + " pending task(s)");
  }
  const json event = {{"event", "cycle_advanced"}, {"cycle", current_cycle_}};
  append(event);
  apply(event);
}

std::map<SentenceKey, LabelVector> AnnotationService::wait_for_cycle(std::size_t cycle) {
  std::unique_lock lock(mutex_);
  changed_.wait(lock, [&] { return stopped_ || advanced_.count(cycle) > 0; });
  if (!advanced_.count(cycle)) {
    throw ChannelClosedError("annotation service stopped before cycle " + std::to_string(cycle) + " was advanced");
  }
  std::map<SentenceKey, LabelVector> out;
  for (const auto& task : tasks_) {
    if (task.cycle != cycle) continue;
    if (auto g = task.gold()) out[key_of(task.sentence)] = *g;
  }
  return out;
}

void AnnotationService::shutdown() {
  {
    std::lock_guard lock(mutex_);
    stopped_ = true;
  }
  changed_.notify_all();
}

std::size_t AnnotationService::log_position() const {
  std::lock_guard lock(mutex_);
  return position_;
}

std::vector<AnnotationTask> AnnotationService::tasks() const {
  std::lock_guard lock(mutex_);
  return tasks_;
}

std::optional<AnnotationTask> AnnotationService::task(const std::string& task_id) const {
  std::lock_guard lock(mutex_);
  auto it = task_index_.find(task_id);
  if (it == task_index_.end()) return std::nullopt;
  return tasks_[it->second];
}

std::map<SentenceKey, LabelVector> ServiceChannel::request_labels(const std::vector<AnnotationRequest>& requests,
                                                                  std::size_t cycle) {
  std::vector<Sentence> sentences;
  sentences.reserve(requests.size());
  for (const auto& r : requests) sentences.push_back(r.sentence);
  service_.open_cycle(cycle, sentences, single_);
  return service_.wait_for_cycle(cycle);
}

}  // namespace triage
