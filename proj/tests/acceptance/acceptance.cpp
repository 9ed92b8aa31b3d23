// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the number
// of failed criteria (0 when all pass).
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "support.hpp"
#include "synthetic.hpp"
#include "triage/active.hpp"
#include "triage/corpus.hpp"
#include "triage/error.hpp"
#include "triage/lexicons.hpp"
#include "triage/metrics.hpp"
#include "triage/model.hpp"
#include "triage/pipeline.hpp"
#include "triage/psycho.hpp"
#include "triage/rng.hpp"

using namespace triage;
using nlohmann::json;

namespace {

// Pinned tolerances and budgets.
constexpr double kKappaTolerance = 1e-12;
constexpr double kKappaSeconds = 1.0;
constexpr double kAucTolerance = 1e-9;
constexpr double kRocSeconds = 5.0;
constexpr double kGradientStep = 1e-5;
constexpr double kGradientRelError = 1e-5;
constexpr double kCvMacroF1 = 0.90;
constexpr double kCvSeconds = 60.0;
constexpr double kRetrievalRecall = 0.85;
constexpr double kRetrievalQueried = 0.50;
constexpr double kTargetF1 = 0.85;
constexpr double kBudgetRatio = 0.8;
constexpr std::size_t kSeeds = 10;
constexpr double kPsychoTolerance = 1e-9;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream out;
  out.precision(precision);
  out << v;
  return out.str();
}

// --- kappa -------------------------------------------------------------------

Outcome kappa_oracle() {
  Rng rng(2024);
  double worst = 0.0;
  const auto start = Clock::now();
  for (int t = 0; t < 100; ++t) {
    std::size_t cell[4];
    for (auto& c : cell) c = rng.uniform_index(60);
    if (cell[0] + cell[1] + cell[2] + cell[3] == 0) cell[0] = 1;
    const double n = static_cast<double>(cell[0] + cell[1] + cell[2] + cell[3]);
    const double po = (cell[0] + cell[3]) / n;
    const double a_yes = (cell[0] + cell[1]) / n;
    const double b_yes = (cell[0] + cell[2]) / n;
    const double pe = a_yes * b_yes + (1 - a_yes) * (1 - b_yes);
    const double expect = pe == 1.0 ? 1.0 : (po - pe) / (1 - pe);
    const auto got = cohen_kappa_counts(cell[0], cell[1], cell[2], cell[3]);
    worst = std::max(worst, std::fabs(got.kappa - expect));
  }
  const double elapsed = seconds_since(start);
  return {worst <= kKappaTolerance && elapsed < kKappaSeconds,
          "max |err| " + fmt(worst) + ", " + fmt(elapsed) + " s"};
}

// --- ROC -------------------------------------------------------------------------

Outcome roc_oracle() {
  Rng rng(4048);
  double worst_auc = 0.0;
  std::size_t youden_mismatch = 0;
  const auto start = Clock::now();
  for (int set = 0; set < 50; ++set) {
    const std::size_t n = 200;
    std::vector<double> scores(n);
    std::vector<bool> positive(n);
    for (std::size_t i = 0; i < n; ++i) {
      positive[i] = i < 2 || (i >= 2 && rng.bernoulli(0.3));
      if (i == 1) positive[i] = false;
      // Coarse grid so ties occur.
      scores[i] = std::round((rng.uniform01() + (positive[i] ? 0.25 : 0.0)) * 40.0) / 40.0;
    }
    // Pair-counting AUC.
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!positive[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (positive[j]) continue;
        pairs += 1.0;
        wins += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
      }
    }
    // Exhaustive Youden scan over every score and +inf; ties to the larger threshold.
    std::vector<double> candidates(scores);
    candidates.push_back(std::numeric_limits<double>::infinity());
    double best_j = -2.0, best_t = 0.0;
    for (double t : candidates) {
      double tp = 0, fp = 0, p = 0, q = 0;
      for (std::size_t i = 0; i < n; ++i) {
        (positive[i] ? p : q) += 1;
        if (scores[i] >= t) (positive[i] ? tp : fp) += 1;
      }
      const double j = tp / p - fp / q;
      if (j > best_j || (j == best_j && t > best_t)) {
        best_j = j;
        best_t = t;
      }
    }
    const auto curve = roc_analysis(scores, positive);
    worst_auc = std::max(worst_auc, std::fabs(curve.auc - wins / pairs));
    if (curve.youden_threshold != best_t) ++youden_mismatch;
  }
  const double elapsed = seconds_since(start);
  return {worst_auc <= kAucTolerance && youden_mismatch == 0 && elapsed < kRocSeconds,
          "max AUC err " + fmt(worst_auc) + ", Youden mismatches " + std::to_string(youden_mismatch) + ", " +
              fmt(elapsed) + " s"};
}

// --- gradient --------------------------------------------------------------------

Outcome gradient_check() {
  Rng rng(31337);
  const std::size_t dim = 6;
  double worst = 0.0;
  for (int point = 0; point < 10; ++point) {
    std::vector<FeatureVector> xs;
    std::vector<LabelVector> ys;
    for (int i = 0; i < 25; ++i) {
      std::vector<double> v(dim);
      for (auto& x : v) x = rng.uniform(-1.5, 1.5);
      xs.push_back(FeatureVector::dense(v));
      ys.push_back(LabelVector::of(rng.bernoulli(0.5), rng.bernoulli(0.3), rng.bernoulli(0.2)));
    }
    LinearMultilabelModel m(dim, {});
    for (std::size_t h = 0; h < kCategoryCount; ++h) {
      for (auto& w : m.weights(h)) w = rng.uniform(-1.0, 1.0);
      m.bias(h) = rng.uniform(-1.0, 1.0);
    }
    const double l2 = rng.uniform(0.0, 0.1);
    for (std::size_t h = 0; h < kCategoryCount; ++h) {
      const auto g = head_gradient(m, h, xs, ys, l2);
      for (std::size_t i = 0; i <= dim; ++i) {
        auto plus = m, minus = m;
        (i < dim ? plus.weights(h)[i] : plus.bias(h)) += kGradientStep;
        (i < dim ? minus.weights(h)[i] : minus.bias(h)) -= kGradientStep;
        const double numeric =
            (head_loss(plus, h, xs, ys, l2) - head_loss(minus, h, xs, ys, l2)) / (2 * kGradientStep);
        const double analytic = i < dim ? g.weights[i] : g.bias;
        const double rel = std::fabs(numeric - analytic) / std::max(1e-8, std::fabs(numeric) + std::fabs(analytic));
        worst = std::max(worst, rel);
      }
    }
  }
  return {worst < kGradientRelError, "max rel err " + fmt(worst)};
}

// --- synthetic learning ---------------------------------------------------------------

Hyperparameters synthetic_hyper(std::uint64_t seed, double l2 = 1e-5) {
  Hyperparameters h;
  h.learning_rate = 2.0;
  h.l2 = l2;
  h.epochs = 40;
  h.batch_size = 16;
  h.seed = seed;
  return h;
}

std::vector<LabelVector> cut(const std::vector<PredictionTriple>& predictions) {
  std::vector<LabelVector> out;
  for (const auto& p : predictions) out.push_back(LabelVector::of(p[0] >= 0.5, p[1] >= 0.5, p[2] >= 0.5));
  return out;
}

std::vector<std::string> texts_of(const std::vector<testing::SyntheticItem>& items) {
  std::vector<std::string> out;
  for (const auto& i : items) out.push_back(i.sentence.text);
  return out;
}

std::vector<LabelVector> labels_of(const std::vector<testing::SyntheticItem>& items) {
  std::vector<LabelVector> out;
  for (const auto& i : items) out.push_back(i.labels);
  return out;
}

Outcome synthetic_cv() {
  const testing::SyntheticTask task(11);
  const auto corpus = generate_corpus(task, 5000, 12);
  const auto texts = texts_of(corpus);
  const auto gold = labels_of(corpus);
  const auto start = Clock::now();
  const auto report = kfold_cv(
      gold, 10,
      [&](std::span<const std::size_t> train, std::span<const std::size_t> test) {
        std::vector<std::string> tx, ex;
        std::vector<LabelVector> ty;
        for (auto i : train) {
          tx.push_back(texts[i]);
          ty.push_back(gold[i]);
        }
        for (auto i : test) ex.push_back(texts[i]);
        const auto model = train_tfidf_classifier(tx, ty, synthetic_hyper(5), "cv");
        return cut(model.predict(ex));
      },
      13);
  const double elapsed = seconds_since(start);
  return {report.mean.macro.f1 >= kCvMacroF1 && elapsed < kCvSeconds,
          "macro F1 " + fmt(report.mean.macro.f1) + ", " + fmt(elapsed) + " s"};
}

// Rare positives, as in forum text, with context words that co-occur with each category.
testing::SyntheticTask forum_task(std::uint64_t vocabulary_seed, std::size_t cues) {
  testing::SyntheticTask task(vocabulary_seed, cues);
  task.prevalence = {0.12, 0.10, 0.08};
  task.context_if_positive = 0.9;
  task.context_if_negative = 0.05;
  return task;
}

// The injected errors: some cue words never appear in the training set, so
// positives carrying them are likely misclassified on V and T.
std::array<std::vector<std::size_t>, kCategoryCount> held_out_cues(const testing::SyntheticTask& task, Rng& rng) {
  std::array<std::vector<std::size_t>, kCategoryCount> banned;
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    for (std::size_t r = 1; r < task.cues[c].size(); ++r) {
      if (rng.bernoulli(0.3)) banned[c].push_back(r);
    }
  }
  return banned;
}

Outcome retrieval() {
  // Positives are rare in forum text; confident positives are always queried,
  // so the queried share tracks prevalence plus the random floor.
  const auto task = forum_task(21, 30);
  std::array<std::vector<double>, kCategoryCount> recall, queried;
  std::array<std::size_t, kCategoryCount> misclassified{};
  for (std::size_t s = 0; s < kSeeds; ++s) {
    Rng rng(derive_seed(900, s));
    const auto banned = held_out_cues(task, rng);
    std::vector<testing::SyntheticItem> train, tune, holdout;
    for (std::size_t i = 0; i < 1000; ++i) train.push_back(generate_item(task, rng, "tr", i, banned));
    for (std::size_t i = 0; i < 400; ++i) tune.push_back(generate_item(task, rng, "v", i));
    for (std::size_t i = 0; i < 100; ++i) holdout.push_back(generate_item(task, rng, "t", i));
    // Stronger weight decay spreads weight onto the context words, which is what
    // lifts the scores of misclassified items above the correct negatives.
    const auto model = train_tfidf_classifier(texts_of(train), labels_of(train), synthetic_hyper(s, 1e-3), "r");
    const auto pv = model.predict(texts_of(tune));
    const auto pt = model.predict(texts_of(holdout));
    auto calibration = calibrate(pv, labels_of(tune), derive_seed(901, s));
    const ThresholdQuery strategy(calibration.policy);
    const auto result = strategy.select(pt, 1);
    const auto stats = evaluate_retrieval(result, pt, labels_of(holdout));
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      recall[c].push_back(stats.recall(c));
      queried[c].push_back(stats.queried_fraction(c));
      misclassified[c] += stats.misclassified[c];
    }
  }
  bool pass = true;
  std::string detail;
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    const double r = median(recall[c]);
    const double q = median(queried[c]);
    pass = pass && r >= kRetrievalRecall && q <= kRetrievalQueried && misclassified[c] > 0;
    detail += std::string(to_string(static_cast<Category>(c))) + " recall " + fmt(r, 3) + " queried " + fmt(q, 3) +
              " (" + std::to_string(misclassified[c]) + " errors)" + (c + 1 < kCategoryCount ? "; " : "");
  }
  return {pass, detail};
}

// Cumulative human labels spent when held-out macro F1 first reaches the target;
// nullopt if it never does.
struct Curve {
  std::vector<std::size_t> labels;
  std::vector<double> f1;
  std::optional<std::size_t> budget() const {
    for (std::size_t i = 0; i < f1.size(); ++i) {
      if (f1[i] >= kTargetF1) return labels[i];
    }
    return std::nullopt;
  }
};

struct LearningSetup {
  testing::SyntheticTask task = forum_task(31, 30);
  std::size_t seed_pool = 500;
  std::size_t batch = 500;
  std::size_t cycles = 8;
  std::size_t test = 2000;
};

Curve learning_curve(const LearningSetup& setup, std::uint64_t seed,
                     const std::function<std::shared_ptr<const QueryStrategy>(const std::vector<LabeledSentence>&)>&
                         make_strategy) {
  Rng rng(derive_seed(seed, 1));
  std::vector<LabeledSentence> seed_pool;
  std::map<SentenceKey, LabelVector> truth;
  for (std::size_t i = 0; i < setup.seed_pool; ++i) {
    const auto item = generate_item(setup.task, rng, "s" + std::to_string(i / 10), i % 10);
    seed_pool.push_back({item.sentence, item.labels, Provenance::kSeedLabeled, 0});
  }
  const auto test = generate_corpus(setup.task, setup.test, derive_seed(seed, 2), "test");
  const auto test_texts = texts_of(test);
  const auto test_gold = labels_of(test);

  const auto hyper = synthetic_hyper(seed);
  auto base_trainer = tfidf_trainer(hyper);
  std::shared_ptr<const Classifier> cached;
  std::size_t cached_size = 0;
  ClassifierTrainer trainer = [&](const std::vector<LabeledSentence>& pool, std::size_t cycle) {
    if (!cached || cached_size != pool.size()) {
      cached = base_trainer(pool, cycle);
      cached_size = pool.size();
    }
    return cached;
  };
  auto f1_of = [&](const std::vector<LabeledSentence>& pool) {
    const auto model = trainer(pool, 0);
    const auto predicted = cut(model->predict(test_texts));
    return prf_multilabel(predicted, test_gold).macro.f1;
  };

  OracleChannel channel([&](const Sentence& s) -> std::optional<LabelVector> { return truth.at(key_of(s)); });
  CycleOptions options;
  options.strategy = make_strategy(seed_pool);
  auto state = initial_state(seed_pool, QueryPolicy{});
  Curve curve;
  std::size_t spent = 0;
  curve.labels.push_back(0);
  curve.f1.push_back(f1_of(state.pool));
  for (std::size_t cycle = 1; cycle <= setup.cycles; ++cycle) {
    std::vector<Sentence> batch;
    for (std::size_t i = 0; i < setup.batch; ++i) {
      const auto item = generate_item(setup.task, rng, "c" + std::to_string(cycle) + "_" + std::to_string(i / 10), i % 10);
      truth[key_of(item.sentence)] = item.labels;
      batch.push_back(item.sentence);
    }
    auto report = run_cycle(state, batch, channel, trainer, nullptr, options);
    spent += report.human_labels;
    state = std::move(report.state);
    curve.labels.push_back(spent);
    curve.f1.push_back(f1_of(state.pool));
  }
  return curve;
}

// Thresholds calibrated on the seed pool alone (fit on V, score T), so the
// calibration spends no labels beyond the shared seed set.
std::shared_ptr<const QueryStrategy> threshold_strategy(const std::vector<LabeledSentence>& pool, std::uint64_t seed) {
  const auto split = split_calibration(pool.size(), pool.size() * 4 / 5, seed);
  std::vector<std::string> tx, hx;
  std::vector<LabelVector> ty, hy;
  for (auto i : split.tune) {
    tx.push_back(pool[i].sentence.text);
    ty.push_back(pool[i].labels);
  }
  for (auto i : split.holdout) {
    hx.push_back(pool[i].sentence.text);
    hy.push_back(pool[i].labels);
  }
  const auto model = train_tfidf_classifier(tx, ty, synthetic_hyper(seed), "calibration");
  auto calibration = calibrate(model.predict(hx), hy, seed);
  calibration.policy.seed = seed;
  return std::make_shared<ThresholdQuery>(calibration.policy);
}

Outcome active_learning_benefit(bool verbose) {
  const LearningSetup setup;
  std::vector<double> threshold_budgets, random_budgets;
  std::size_t unreached = 0;
  const double never = static_cast<double>(setup.cycles * setup.batch) * 10.0;
  for (std::size_t s = 0; s < kSeeds; ++s) {
    const std::uint64_t seed = derive_seed(3000, s);
    const auto thr = learning_curve(setup, seed, [&](const auto& pool) { return threshold_strategy(pool, seed); });
    // Random querying gets its best fraction: the cheapest budget over a sweep.
    std::optional<std::size_t> best_random;
    for (int tenth = 1; tenth <= 10; ++tenth) {
      const auto rnd = learning_curve(setup, seed, [&](const auto&) {
        return std::make_shared<RandomQuery>(tenth / 10.0, derive_seed(seed, 77));
      });
      if (auto b = rnd.budget(); b && (!best_random || *b < *best_random)) best_random = b;
      if (verbose) {
        std::cerr << "  seed " << s << " random " << tenth << "/10:";
        for (std::size_t i = 0; i < rnd.f1.size(); ++i) std::cerr << " " << rnd.labels[i] << ":" << fmt(rnd.f1[i], 3);
        std::cerr << "\n";
      }
    }
    if (verbose) {
      std::cerr << "  seed " << s << " threshold:";
      for (std::size_t i = 0; i < thr.f1.size(); ++i) std::cerr << " " << thr.labels[i] << ":" << fmt(thr.f1[i], 3);
      std::cerr << "\n";
    }
    const auto tb = thr.budget();
    if (!tb) ++unreached;
    threshold_budgets.push_back(tb ? static_cast<double>(*tb) : never);
    random_budgets.push_back(best_random ? static_cast<double>(*best_random) : never);
  }
  const double mt = median(threshold_budgets);
  const double mr = median(random_budgets);
  const double ratio = mr > 0 ? mt / mr : std::numeric_limits<double>::infinity();
  return {mt < never && ratio <= kBudgetRatio,
          "median labels to F1 " + fmt(kTargetF1, 2) + ": threshold " + fmt(mt, 6) + ", random " + fmt(mr, 6) +
              ", ratio " + fmt(ratio, 3) + (unreached ? ", threshold unreached on " + std::to_string(unreached) + " seeds" : "")};
}

// --- cycle bookkeeping ---------------------------------------------------------------

Outcome cycle_bookkeeping() {
  const testing::SyntheticTask task(41);
  const auto lexicons = load_lexicons(testing::data_path("lexicons"));
  std::vector<LabeledSentence> seed_pool;
  for (const auto& item : generate_corpus(task, 5947, 42, "seed")) {
    seed_pool.push_back({item.sentence, item.labels, Provenance::kSeedLabeled, 0});
  }
  const auto unlabeled_items = generate_corpus(task, 4000, 43, "u");
  std::map<SentenceKey, LabelVector> truth;
  std::vector<Sentence> unlabeled;
  for (const auto& item : unlabeled_items) {
    truth[key_of(item.sentence)] = item.labels;
    unlabeled.push_back(item.sentence);
  }
  testing::TempDir dir("acceptance-cycles");
  SnapshotStore store(dir.path());
  OracleChannel channel([&](const Sentence& s) -> std::optional<LabelVector> { return truth.at(key_of(s)); });
  QueryPolicy policy;
  policy.seed = 44;
  auto state = initial_state(seed_pool, policy);
  const auto trainer = tfidf_trainer(synthetic_hyper(45));
  std::set<SentenceKey> used;
  std::filesystem::path last_snapshot;
  for (std::size_t cycle = 0; cycle < 5; ++cycle) {
    std::vector<Sentence> remaining;
    for (const auto& s : unlabeled) {
      if (!used.count(key_of(s))) remaining.push_back(s);
    }
    const auto batch = sample_unlabeled(remaining, lexicons, 500, derive_seed(46, cycle));
    for (const auto& s : batch) used.insert(key_of(s));
    auto report = run_cycle(state, batch, channel, trainer, &store);
    state = std::move(report.state);
  }
  const auto replayed = replay_audit(seed_pool, read_audit(store.audit_path()));
  const auto after = testing::read_file(dir / "cycle-0005-after.jsonl");
  const bool identical = serialize_snapshot(replayed) == after && serialize_snapshot(state.pool) == after;
  return {state.pool.size() == 8447 && identical,
          "|L| = " + std::to_string(state.pool.size()) + ", replay " + (identical ? "byte-identical" : "differs")};
}

// --- filtering fixture ----------------------------------------------------------------

Outcome filtering_fixture() {
  const auto advice = load_keyword_set(testing::data_path("lexicons/advice.txt"));
  std::ifstream in(testing::data_path("fixtures/titles.jsonl"));
  std::string line;
  std::size_t rows = 0, matched = 0;
  std::set<std::string> rules_seen;
  bool literal_rape = false, literal_advice = false;
  while (std::getline(in, line)) {
    const auto j = json::parse(line);
    const Post post{"f" + std::to_string(rows++), "", j.at("title"), "body", 0, false};
    const auto verdict = judge_title(post, advice);
    std::set<std::string> got;
    for (auto r : verdict.matched_rules) got.insert(std::string(to_string(r)));
    const auto expected = j.at("rules").get<std::set<std::string>>();
    rules_seen.insert(expected.begin(), expected.end());
    const bool ok = got == expected && verdict.relevant == !expected.empty();
    matched += ok;
    if (post.title == "Was this rape?") literal_rape = ok && verdict.relevant;
    if (post.title == "Need advice, or support") literal_advice = ok && verdict.relevant;
  }
  const bool pass = rows == 20 && matched == rows && literal_rape && literal_advice && rules_seen.size() == 3;
  return {pass, std::to_string(matched) + "/" + std::to_string(rows) + " titles match"};
}

// --- extraction -----------------------------------------------------------------------

Outcome extraction_properties() {
  Rng rng(606);
  const std::vector<std::string> words{"he", "she", "touched", "my", "arm", "I", "feel", "scared", "what",
                                       "should", "do", "work", "boss", "Dr.", "e.g.", "later"};
  std::size_t violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::string body;
    const std::size_t n = 1 + rng.uniform_index(12);
    for (std::size_t s = 0; s < n; ++s) {
      std::string sentence = "Then";
      const std::size_t len = 2 + rng.uniform_index(8);
      for (std::size_t w = 0; w < len; ++w) sentence += " " + words[rng.uniform_index(words.size())];
      sentence += rng.bernoulli(0.3) ? "?" : rng.bernoulli(0.2) ? "!" : ".";
      body += sentence + (rng.bernoulli(0.2) ? "\n" : " ");
    }
    const Post post{"x" + std::to_string(trial), "", "title", body, 0, false};
    const std::uint64_t stub_seed = rng.next();
    const testing::FunctionClassifier stub([stub_seed](const std::string& text) {
      Rng r(derive_seed(stub_seed, std::hash<std::string>{}(text)));
      return PredictionTriple{{r.uniform01(), r.uniform01(), r.uniform01()}};
    });
    const auto all = split_sentences(post.id, post.body);
    const HeadCuts cuts{rng.uniform01(), rng.uniform01(), rng.uniform01()};
    const auto result = extract(post, stub, cuts);
    // Subset and order.
    std::set<std::size_t> kept;
    std::size_t previous = 0;
    for (std::size_t i = 0; i < result.sentences.size(); ++i) {
      const auto& item = result.sentences[i];
      if (item.sentence.index >= all.size() || !(all[item.sentence.index] == item.sentence)) ++violations;
      if (i > 0 && item.sentence.index <= previous) ++violations;
      if (!item.labels.any()) ++violations;
      previous = item.sentence.index;
      kept.insert(item.sentence.index);
    }
    // Raising a cut never adds a sentence; lowering never removes one.
    auto raised = cuts, lowered = cuts;
    const std::size_t h = rng.uniform_index(kCategoryCount);
    raised[h] += rng.uniform01() * 0.5;
    lowered[h] -= rng.uniform01() * 0.5;
    for (const auto& item : extract(post, stub, raised).sentences) violations += kept.count(item.sentence.index) == 0;
    std::set<std::size_t> more;
    for (const auto& item : extract(post, stub, lowered).sentences) more.insert(item.sentence.index);
    for (auto i : kept) violations += more.count(i) == 0;
  }

  const auto parsed = load_posts(testing::data_path("fixtures/example_box.jsonl"));
  std::ifstream in(testing::data_path("fixtures/example_box_expected.json"));
  const auto expected = json::parse(in).at("extracted");
  std::map<std::string, LabelVector> script;
  for (const auto& item : expected) {
    LabelVector v;
    for (const auto& tag : item.at("tags")) {
      for (Category c : kCategories) v[c] = v[c] || tag == to_string(c);
    }
    script[item.at("text")] = v;
  }
  const testing::FunctionClassifier scripted([&](const std::string& text) {
    PredictionTriple p;
    const auto it = script.find(text);
    for (std::size_t h = 0; h < kCategoryCount; ++h) p[h] = it != script.end() && it->second[h] ? 0.9 : 0.1;
    return p;
  });
  const auto box = extract(parsed.posts.at(0), scripted);
  bool box_ok = box.sentences.size() == expected.size();
  for (std::size_t i = 0; box_ok && i < expected.size(); ++i) {
    box_ok = box.sentences[i].sentence.text == expected[i].at("text") &&
             box.sentences[i].labels == script.at(expected[i].at("text"));
  }
  return {violations == 0 && box_ok, std::to_string(violations) + " invariant violations; Example box " +
                                         (box_ok ? "reproduced" : "differs")};
}

// --- psycho -----------------------------------------------------------------------------

std::vector<std::string> oracle_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + " ") {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  return out;
}

bool oracle_hit(const std::string& token, const std::set<std::string>& entries) {
  for (const auto& e : entries) {
    const bool wildcard = e.back() == '*';
    const std::string stem = wildcard ? e.substr(0, e.size() - 1) : e;
    if (wildcard ? token.rfind(stem, 0) == 0 : token == stem) return true;
  }
  return false;
}

// Phrase banks for a seeded labeled corpus shaped like the three sentence types.
const std::vector<std::string> kIncidentBank{
    "he touched my arm at the party",
    "my manager kept commenting on my body in meetings",
    "a stranger followed me from the bus stop to my building",
    "he grabbed my waist in the hallway",
    "my coworker sent me messages late at night asking what I was wearing",
    "he cornered me in the elevator and stood too close",
    "my neighbor exposed himself to me in the parking lot",
    "he kissed me after I said no",
    "my professor put his hand on my leg during office hours",
    "a man on the train kept rubbing against me",
    "he pinned me against the wall and laughed",
    "my supervisor said I would get the promotion if I went out with him"};
const std::vector<std::string> kEffectsBank{
    "I feel scared and hurt all the time",
    "I cannot stop crying when I think about it",
    "I feel so ashamed and worthless",
    "I am anxious every day before work",
    "it makes me feel sick and upset",
    "I feel disgusting and violated",
    "I am angry at myself for freezing",
    "I feel terrible and I blame myself",
    "I am afraid to go back there",
    "I have panic attacks since it happened",
    "I feel depressed and alone",
    "I am uncomfortable around men now"};
const std::vector<std::string> kAdviceBank{
    "what should I do",
    "should I report this to HR",
    "is it wrong to feel this way",
    "how do I tell my family",
    "any advice would help",
    "am I overreacting",
    "is this my fault",
    "where can I get support",
    "should I confront him or let it go",
    "how do I stop being afraid",
    "can anyone suggest a therapist",
    "would it be bad to quit"};
const std::vector<std::string> kOpeners{"", "honestly, ", "last week ", "then ", "so ", "and ", "but ", "today "};

Outcome psycho_scoring() {
  const auto dict = load_dictionary(testing::data_path("dictionaries/starter.dic"));
  std::ifstream in(testing::data_path("fixtures/psycho_sentences.txt"));
  std::string line;
  std::size_t rows = 0;
  double worst = 0.0;
  while (std::getline(in, line)) {
    ++rows;
    const auto got = score_sentence(line, dict);
    const auto tokens = oracle_tokens(line);
    for (const auto& [name, set] : dict.categories()) {
      std::size_t hits = 0;
      for (const auto& t : tokens) hits += oracle_hit(t, set.terms());
      const double expect = tokens.empty() ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(tokens.size());
      worst = std::max(worst, std::fabs(got.percent.at(name) - expect));
    }
  }

  Rng rng(808);
  std::vector<ScoredInput> corpus;
  const std::array<const std::vector<std::string>*, kCategoryCount> banks{&kIncidentBank, &kEffectsBank, &kAdviceBank};
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    for (int i = 0; i < 200; ++i) {
      std::string text = kOpeners[rng.uniform_index(kOpeners.size())] + (*banks[c])[rng.uniform_index(banks[c]->size())];
      LabelVector v;
      v[c] = true;
      corpus.push_back({text, v});
    }
  }
  const auto report = category_report(corpus, dict);
  const double incident = report.rows[0].at("tone_neg").mean;
  const double effects = report.rows[1].at("tone_neg").mean;
  const double advice = report.rows[2].at("tone_neg").mean;
  const bool ordered = effects > advice && advice > incident;
  return {rows == 20 && worst <= kPsychoTolerance && ordered,
          "max |err| " + fmt(worst) + " over " + std::to_string(rows) + " sentences; tone_neg effects " +
              fmt(effects, 3) + " > advice " + fmt(advice, 3) + " > incident " + fmt(incident, 3)};
}

}  // namespace

int main(int argc, char** argv) {
  // Usage: acceptance [-v] [criterion...]; -v prints learning curves to stderr.
  bool verbose = false;
  std::set<std::string> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "-v") {
      verbose = true;
    } else {
      only.insert(arg);
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"kappa-oracle", kappa_oracle},
      {"roc-auc-youden-oracle", roc_oracle},
      {"gradient-check", gradient_check},
      {"synthetic-classification", synthetic_cv},
      {"query-retrieval", retrieval},
      {"active-learning-benefit", [verbose] { return active_learning_benefit(verbose); }},
      {"cycle-bookkeeping", cycle_bookkeeping},
      {"filtering-fixture", filtering_fixture},
      {"extraction-properties", extraction_properties},
      {"psycho-scoring", psycho_scoring},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    failed += !outcome.pass;
    std::cout << (outcome.pass ? "PASS " : "FAIL ") << name << ": " << outcome.detail << std::endl;
  }
  return failed;
}
