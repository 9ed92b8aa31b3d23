#include "triage/active.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "triage/error.hpp"
#include "triage/rng.hpp"
#include "triage/text.hpp"

namespace triage {

using nlohmann::json;

void QueryPolicy::validate() const {
  for (double t : thresholds) {
    if (!(t == kNeverQuery || (t >= 0.0 && t <= 1.0))) {
      throw UsageError("query threshold must lie in [0, 1]");
    }
  }
  if (below_denominator == 0 || below_numerator > below_denominator) {
    throw UsageError("below-threshold rate must satisfy numerator <= denominator, denominator > 0");
  }
}

void to_json(json& j, const QueryPolicy& policy) {
  json thresholds = json::array();
  for (double t : policy.thresholds) {
    if (t == kNeverQuery) thresholds.push_back(nullptr);
    else thresholds.push_back(t);
  }
  j = json{{"thresholds", thresholds},
           {"below_rate", {policy.below_numerator, policy.below_denominator}},
           {"seed", policy.seed}};
}

void from_json(const json& j, QueryPolicy& policy) {
  const auto& thresholds = j.at("thresholds");
  if (!thresholds.is_array() || thresholds.size() != kCategoryCount) {
    throw DataError("policy needs exactly three thresholds");
  }
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    policy.thresholds[c] = thresholds[c].is_null() ? kNeverQuery : thresholds[c].get<double>();
  }
  if (j.contains("below_rate")) {
    const auto& rate = j.at("below_rate");
    if (!rate.is_array() || rate.size() != 2) throw DataError("below_rate must be [numerator, denominator]");
    policy.below_numerator = rate[0].get<std::size_t>();
    policy.below_denominator = rate[1].get<std::size_t>();
  }
  policy.seed = j.value("seed", std::uint64_t{0});
}

QueryPolicy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  QueryPolicy policy;
  try {
    policy = json::parse(in).get<QueryPolicy>();
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  try {
    policy.validate();
  } catch (const UsageError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return policy;
}

void save_policy(const std::filesystem::path& path, const QueryPolicy& policy) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << json(policy).dump(2) << '\n';
}

std::string_view to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::kSeedLabeled:
      return "seed_labeled";
    case Provenance::kModelLabeled:
      return "model_labeled";
    case Provenance::kHumanQueried:
      return "human_queried";
  }
  return "unknown";
}

Provenance provenance_from_string(std::string_view name) {
  if (name == "seed_labeled") return Provenance::kSeedLabeled;
  if (name == "model_labeled") return Provenance::kModelLabeled;
  if (name == "human_queried") return Provenance::kHumanQueried;
  throw DataError("unknown provenance '" + std::string(name) + "'");
}

void to_json(json& j, const LabeledSentence& item) {
  j = json{{"post_id", item.sentence.post_id},
           {"index", item.sentence.index},
           {"text", item.sentence.text},
           {"labels", item.labels},
           {"provenance", std::string(to_string(item.provenance))},
           {"cycle", item.cycle}};
}

void from_json(const json& j, LabeledSentence& item) {
  item.sentence.post_id = j.at("post_id").get<std::string>();
  item.sentence.index = j.at("index").get<std::size_t>();
  item.sentence.text = j.at("text").get<std::string>();
  item.labels = j.at("labels").get<LabelVector>();
  item.provenance = provenance_from_string(j.value("provenance", std::string("seed_labeled")));
  item.cycle = j.value("cycle", std::size_t{0});
}

std::string serialize_snapshot(std::span<const LabeledSentence> pool) {
  std::string out;
  for (const auto& item : pool) {
    out += json(item).dump();
    out += '\n';
  }
  return out;
}

std::vector<LabeledSentence> parse_snapshot(std::string_view contents) {
  std::vector<LabeledSentence> pool;
  std::size_t line_number = 0;
  for (const auto& line : text::split(contents, '\n')) {
    ++line_number;
    if (text::trim(line).empty()) continue;
    try {
      pool.push_back(json::parse(line).get<LabeledSentence>());
    } catch (const json::exception& e) {
      throw DataError("snapshot line " + std::to_string(line_number) + ": " + e.what());
    }
  }
  return pool;
}

std::vector<LabeledSentence> read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_snapshot(buffer.str());
}

std::vector<Sentence> sample_unlabeled(std::span<const Sentence> pool, const Lexicons& lexicons,
                                       std::size_t n, std::uint64_t seed) {
  if (n == 0) return {};
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (is_keyword_free(pool[i], lexicons)) eligible.push_back(i);
  }
  if (eligible.size() < n) {
    throw DataError("requested " + std::to_string(n) + " keyword-free sentences but only " +
                    std::to_string(eligible.size()) + " are available");
  }
  Rng rng(seed);
  auto picks = rng.sample_indices(eligible.size(), n);
  std::sort(picks.begin(), picks.end());
  std::vector<Sentence> out;
  out.reserve(n);
  for (std::size_t k : picks) out.push_back(pool[eligible[k]]);
  return out;
}

CalibrationSplit split_calibration(std::size_t n, std::size_t tune_size, std::uint64_t seed) {
  if (tune_size > n) throw UsageError("calibration tune size exceeds the labeled sample");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  CalibrationSplit split;
  split.tune.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(tune_size));
  split.holdout.assign(order.begin() + static_cast<std::ptrdiff_t>(tune_size), order.end());
  std::sort(split.tune.begin(), split.tune.end());
  std::sort(split.holdout.begin(), split.holdout.end());
  return split;
}

CalibrationResult calibrate(std::span<const PredictionTriple> predictions,
                            std::span<const LabelVector> human, std::uint64_t seed, double cut) {
  if (predictions.size() != human.size()) throw UsageError("prediction and label counts differ");
  if (predictions.empty()) throw UsageError("calibration set is empty");
  CalibrationResult result;
  result.policy.seed = seed;
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    const std::string name(to_string(kCategories[c]));
    std::vector<double> scores(predictions.size());
    std::vector<bool> misclassified(predictions.size());
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      scores[i] = predictions[i][c];
      misclassified[i] = (predictions[i][c] >= cut) != human[i][c];
      if (misclassified[i]) ++result.misclassified[c];
    }
    if (result.misclassified[c] == 0) {
      result.policy.thresholds[c] = kNeverQuery;
      result.warnings.push_back(name + ": no misclassified items; only the random floor will be queried");
      continue;
    }
    if (result.misclassified[c] == predictions.size()) {
      result.policy.thresholds[c] = 0.0;
      result.warnings.push_back(name + ": every item is misclassified; querying all items");
      continue;
    }
    result.curves[c] = roc_analysis(scores, misclassified);
    result.policy.thresholds[c] = result.curves[c]->youden_threshold;
  }
  return result;
}

namespace {

QueryResult assemble(std::array<std::vector<std::size_t>, kCategoryCount> per_category) {
  QueryResult result;
  std::map<std::size_t, std::array<bool, kCategoryCount>> tags;
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    std::sort(per_category[c].begin(), per_category[c].end());
    for (std::size_t i : per_category[c]) tags[i][c] = true;
  }
  result.per_category = std::move(per_category);
  for (const auto& [index, flags] : tags) result.items.push_back({index, flags});
  return result;
}

QueryResult threshold_query(const QueryPolicy& policy, std::span<const PredictionTriple> predictions,
                            std::uint64_t seed) {
  policy.validate();
  const std::size_t n = predictions.size();
  const std::size_t floor_count = policy.below_numerator * n / policy.below_denominator;
  // One seeded permutation serves every category: each still gets a uniform
  // sample of its own below-threshold items, but the samples overlap, so the
  // union sent to people stays near the per-category floor.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  std::array<std::vector<std::size_t>, kCategoryCount> per_category;
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      if (predictions[i][c] >= policy.thresholds[c]) per_category[c].push_back(i);
    }
    std::size_t taken = 0;
    for (std::size_t k = 0; k < n && taken < floor_count; ++k) {
      if (predictions[order[k]][c] < policy.thresholds[c]) {
        per_category[c].push_back(order[k]);
        ++taken;
      }
    }
  }
  return assemble(std::move(per_category));
}

}  // namespace

QueryResult query(const QueryPolicy& policy, std::span<const PredictionTriple> predictions) {
  return threshold_query(policy, predictions, policy.seed);
}

QueryResult ThresholdQuery::select(std::span<const PredictionTriple> predictions, std::uint64_t round) const {
  return threshold_query(policy_, predictions, derive_seed(policy_.seed, round));
}

double uncertainty(Uncertainty measure, double p) {
  if (measure == Uncertainty::kLeastConfidence) return 1.0 - std::max(p, 1.0 - p);
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log(1.0 - p);
  return h;
}

std::string UncertaintyQuery::name() const {
  return measure_ == Uncertainty::kLeastConfidence ? "least_confidence" : "entropy";
}

QueryResult UncertaintyQuery::select(std::span<const PredictionTriple> predictions, std::uint64_t) const {
  const std::size_t budget = std::min(predictions.size(), per_hundred_ * predictions.size() / 100);
  std::array<std::vector<std::size_t>, kCategoryCount> per_category;
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    std::vector<std::size_t> order(predictions.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return uncertainty(measure_, predictions[a][c]) > uncertainty(measure_, predictions[b][c]);
    });
    per_category[c].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(budget));
  }
  return assemble(std::move(per_category));
}

QueryResult RandomQuery::select(std::span<const PredictionTriple> predictions, std::uint64_t round) const {
  const auto count = static_cast<std::size_t>(std::floor(fraction_ * static_cast<double>(predictions.size())));
  Rng rng(derive_seed(seed_, round));
  auto picks = rng.sample_indices(predictions.size(), count);
  std::array<std::vector<std::size_t>, kCategoryCount> per_category;
  for (auto& list : per_category) list = picks;
  return assemble(std::move(per_category));
}

RetrievalStats evaluate_retrieval(const QueryResult& result, std::span<const PredictionTriple> predictions,
                                  std::span<const LabelVector> human, double cut) {
  if (predictions.size() != human.size()) throw UsageError("prediction and label counts differ");
  RetrievalStats stats;
  stats.items = predictions.size();
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    std::set<std::size_t> queried(result.per_category[c].begin(), result.per_category[c].end());
    stats.queried[c] = queried.size();
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      if ((predictions[i][c] >= cut) == human[i][c]) continue;
      ++stats.misclassified[c];
      if (queried.count(i)) ++stats.retrieved[c];
    }
  }
  return stats;
}

std::vector<LabeledSentence> merge_labels(std::span<const Sentence> batch,
                                          std::span<const LabelVector> model_labels,
                                          const std::map<SentenceKey, LabelVector>& human,
                                          std::size_t cycle) {
  if (batch.size() != model_labels.size()) throw UsageError("batch and model label counts differ");
  std::set<SentenceKey> keys;
  for (const auto& s : batch) keys.insert(key_of(s));
  for (const auto& [key, labels] : human) {
    if (!keys.count(key)) {
      throw UsageError("human label for " + key.post_id + "#" + std::to_string(key.index) +
                       " does not belong to the batch");
    }
  }
  std::vector<LabeledSentence> merged;
  merged.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto it = human.find(key_of(batch[i]));
    if (it != human.end()) {
      merged.push_back({batch[i], it->second, Provenance::kHumanQueried, cycle});
    } else {
      merged.push_back({batch[i], model_labels[i], Provenance::kModelLabeled, cycle});
    }
  }
  return merged;
}

namespace {

std::string_view kind_name(AuditKind kind) {
  switch (kind) {
    case AuditKind::kCycleBegin:
      return "cycle_begin";
    case AuditKind::kAppend:
      return "append";
    case AuditKind::kOverride:
      return "override";
    case AuditKind::kCycleCommit:
      return "cycle_commit";
  }
  return "unknown";
}

AuditKind kind_from_name(std::string_view name) {
  if (name == "cycle_begin") return AuditKind::kCycleBegin;
  if (name == "append") return AuditKind::kAppend;
  if (name == "override") return AuditKind::kOverride;
  if (name == "cycle_commit") return AuditKind::kCycleCommit;
  throw DataError("unknown audit event '" + std::string(name) + "'");
}

}  // namespace

void to_json(json& j, const AuditEvent& event) {
  j = json{{"event", std::string(kind_name(event.kind))}, {"cycle", event.cycle}};
  switch (event.kind) {
    case AuditKind::kCycleBegin:
      j["model_version"] = event.model_version;
      break;
    case AuditKind::kAppend:
      j["item"] = *event.item;
      break;
    case AuditKind::kOverride:
      j["item"] = *event.item;
      j["model_labels"] = event.model_labels;
      break;
    case AuditKind::kCycleCommit:
      j["pool_size"] = event.pool_size;
      break;
  }
}

void from_json(const json& j, AuditEvent& event) {
  event = AuditEvent{};
  event.kind = kind_from_name(j.at("event").get<std::string>());
  event.cycle = j.at("cycle").get<std::size_t>();
  if (j.contains("model_version")) event.model_version = j.at("model_version").get<std::string>();
  if (j.contains("item")) event.item = j.at("item").get<LabeledSentence>();
  if (j.contains("model_labels")) event.model_labels = j.at("model_labels").get<LabelVector>();
  if (j.contains("pool_size")) event.pool_size = j.at("pool_size").get<std::size_t>();
}

std::vector<AuditEvent> read_audit(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<AuditEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    events.push_back(json::parse(line).get<AuditEvent>());
  }
  return events;
}

std::vector<LabeledSentence> replay_audit(std::vector<LabeledSentence> initial,
                                          std::span<const AuditEvent> events) {
  std::vector<LabeledSentence> pending;
  for (const auto& event : events) {
    switch (event.kind) {
      case AuditKind::kCycleBegin:
        pending.clear();
        break;
      case AuditKind::kAppend:
        pending.push_back(*event.item);
        break;
      case AuditKind::kOverride:
        break;
      case AuditKind::kCycleCommit:
        initial.insert(initial.end(), pending.begin(), pending.end());
        pending.clear();
        if (initial.size() != event.pool_size) {
          throw DataError("audit replay diverged at cycle " + std::to_string(event.cycle));
        }
        break;
    }
  }
  return initial;
}

CycleState initial_state(std::vector<LabeledSentence> seed_pool, QueryPolicy policy) {
  policy.validate();
  CycleState state;
  state.pool = std::move(seed_pool);
  state.policy = policy;
  return state;
}

std::map<SentenceKey, LabelVector> OracleChannel::request_labels(
    const std::vector<AnnotationRequest>& requests, std::size_t) {
  std::map<SentenceKey, LabelVector> labels;
  for (const auto& request : requests) {
    auto answer = oracle_(request.sentence);
    if (!answer) throw ChannelClosedError("annotation channel closed before all items were labeled");
    labels.emplace(key_of(request.sentence), *answer);
    ++served_;
  }
  return labels;
}

SnapshotStore::SnapshotStore(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
}

std::filesystem::path SnapshotStore::write(const std::string& name, std::span<const LabeledSentence> pool) {
  auto target = directory_ / (name + ".jsonl");
  for (int n = 1; std::filesystem::exists(target); ++n) {
    target = directory_ / (name + "." + std::to_string(n) + ".jsonl");
  }
  const auto temporary = directory_ / (target.filename().string() + ".tmp");
  {
    std::ofstream out(temporary, std::ios::binary);
    if (!out) throw DataError("cannot write " + temporary.string());
    out << serialize_snapshot(pool);
    out.flush();
    if (!out) throw DataError("short write to " + temporary.string());
  }
  std::filesystem::rename(temporary, target);
  return target;
}

void SnapshotStore::append_audit(std::span<const AuditEvent> events) {
  std::ofstream out(audit_path(), std::ios::app | std::ios::binary);
  if (!out) throw DataError("cannot append to " + audit_path().string());
  for (const auto& event : events) out << json(event).dump() << '\n';
  out.flush();
  if (!out) throw DataError("short write to " + audit_path().string());
}

ClassifierTrainer tfidf_trainer(Hyperparameters hyper) {
  return [hyper](const std::vector<LabeledSentence>& pool, std::size_t cycle) -> std::shared_ptr<const Classifier> {
    std::vector<std::string> texts;
    std::vector<LabelVector> labels;
    texts.reserve(pool.size());
    labels.reserve(pool.size());
    for (const auto& item : pool) {
      texts.push_back(item.sentence.text);
      labels.push_back(item.labels);
    }
    return std::make_shared<LinearClassifier>(train_tfidf_classifier(
        texts, labels, hyper, "linear-c" + std::to_string(cycle) + "-n" + std::to_string(pool.size())));
  };
}

namespace {

std::string cycle_name(std::size_t cycle, const char* phase) {
  std::string number = std::to_string(cycle);
  number.insert(0, number.size() < 4 ? 4 - number.size() : 0, '0');
  return "cycle-" + number + "-" + phase;
}

}  // namespace

CycleReport run_cycle(const CycleState& state, const std::vector<Sentence>& batch,
                      AnnotationChannel& channel, const ClassifierTrainer& trainer,
                      SnapshotStore* store, const CycleOptions& options) {
  std::set<SentenceKey> pool_keys;
  for (const auto& item : state.pool) pool_keys.insert(key_of(item.sentence));
  std::set<SentenceKey> batch_keys;
  for (const auto& s : batch) {
    const auto key = key_of(s);
    if (pool_keys.count(key)) {
      throw UsageError("batch sentence " + key.post_id + "#" + std::to_string(key.index) + " is already labeled");
    }
    if (!batch_keys.insert(key).second) {
      throw UsageError("batch repeats sentence " + key.post_id + "#" + std::to_string(key.index));
    }
  }

  const std::size_t cycle = state.cycle_index + 1;
  if (store != nullptr) store->write(cycle_name(cycle, "before"), state.pool);

  CycleReport report;
  const auto classifier = trainer(state.pool, cycle);
  std::vector<AuditEvent> events;
  events.push_back({AuditKind::kCycleBegin, cycle, classifier->version(), std::nullopt, {}, 0});

  std::vector<LabeledSentence> merged;
  QueryPolicy policy = state.policy;
  if (!batch.empty()) {
    std::vector<std::string> texts;
    texts.reserve(batch.size());
    for (const auto& s : batch) texts.push_back(s.text);
    report.predictions = classifier->predict(texts);
    if (report.predictions.size() != batch.size()) {
      throw ExternalServiceError("classifier returned the wrong number of predictions");
    }
    std::vector<LabelVector> model_labels;
    model_labels.reserve(batch.size());
    for (const auto& p : report.predictions) model_labels.push_back(p.labels(options.cut));

    const ThresholdQuery fallback(state.policy);
    const QueryStrategy& strategy = options.strategy ? *options.strategy : fallback;
    report.query = strategy.select(report.predictions, cycle);

    std::vector<AnnotationRequest> requests;
    requests.reserve(report.query.items.size());
    for (const auto& item : report.query.items) {
      requests.push_back({batch[item.index], item.tags, report.predictions[item.index]});
    }
    auto human = channel.request_labels(requests, cycle);
    for (const auto& request : requests) {
      if (!human.count(key_of(request.sentence))) {
        throw ChannelClosedError("annotation channel returned without labeling every queried item");
      }
    }
    report.human_labels = human.size();
    merged = merge_labels(batch, model_labels, human, cycle);

    for (std::size_t i = 0; i < merged.size(); ++i) {
      events.push_back({AuditKind::kAppend, cycle, {}, merged[i], {}, 0});
      if (merged[i].provenance == Provenance::kHumanQueried && merged[i].labels != model_labels[i]) {
        events.push_back({AuditKind::kOverride, cycle, {}, merged[i], model_labels[i], 0});
        ++report.overrides;
      }
    }

    if (options.recalibrate && !report.query.items.empty()) {
      std::vector<PredictionTriple> queried_predictions;
      std::vector<LabelVector> queried_labels;
      for (const auto& item : report.query.items) {
        queried_predictions.push_back(report.predictions[item.index]);
        queried_labels.push_back(merged[item.index].labels);
      }
      const auto recalibrated = calibrate(queried_predictions, queried_labels, policy.seed, options.cut);
      for (std::size_t c = 0; c < kCategoryCount; ++c) {
        if (recalibrated.curves[c]) policy.thresholds[c] = recalibrated.policy.thresholds[c];
      }
    }
  }

  CycleState next;
  next.cycle_index = cycle;
  next.model_version = classifier->version();
  next.policy = policy;
  next.pool = state.pool;
  next.pool.insert(next.pool.end(), merged.begin(), merged.end());
  events.push_back({AuditKind::kCycleCommit, cycle, {}, std::nullopt, {}, next.pool.size()});
  next.audit = state.audit;
  next.audit.insert(next.audit.end(), events.begin(), events.end());

  if (store != nullptr) {
    store->append_audit(events);
    store->write(cycle_name(cycle, "after"), next.pool);
  }
  report.state = std::move(next);
  return report;
}

}  // namespace triage
