#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "triage/active.hpp"
#include "triage/corpus.hpp"
#include "triage/error.hpp"
#include "triage/external.hpp"
#include "triage/features.hpp"
#include "triage/kernels.hpp"
#include "triage/lexicons.hpp"
#include "triage/metrics.hpp"
#include "triage/model.hpp"
#include "triage/pipeline.hpp"
#include "triage/psycho.hpp"
#include "triage/rng.hpp"
#include "triage/service.hpp"
#include "triage/service_http.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace triage;

namespace {

struct Globals {
  std::string config_path;
  std::string data_dir = "data";
  std::optional<std::uint64_t> seed;
};

Config resolve_config(const Globals& g) {
  Config config;
  if (!g.config_path.empty()) {
    config = load_config(g.config_path);
  } else if (fs::exists(fs::path(g.data_dir) / "config.json")) {
    config = load_config(fs::path(g.data_dir) / "config.json");
  } else {
    config.lexicon_dir = fs::path(g.data_dir) / "lexicons";
    config.dictionary = fs::path(g.data_dir) / "dictionaries" / "starter.dic";
  }
  if (g.seed) {
    config.hyper.seed = *g.seed;
    config.policy.seed = *g.seed;
  }
  return config;
}

SplitterConfig splitter_of(const Config& c) {
  return c.abbreviations.empty() ? SplitterConfig{} : load_splitter_config(c.abbreviations);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

template <typename T>
void write_jsonl(const std::string& path, const std::vector<T>& rows) {
  auto out = open_out(path);
  for (const auto& row : rows) out << json(row).dump() << '\n';
}

std::vector<LabeledSentence> read_labeled(const std::string& path) { return read_snapshot(path); }

std::vector<std::string> texts(const std::vector<LabeledSentence>& pool) {
  std::vector<std::string> out;
  for (const auto& item : pool) out.push_back(item.sentence.text);
  return out;
}

std::vector<LabelVector> labels(const std::vector<LabeledSentence>& pool) {
  std::vector<LabelVector> out;
  for (const auto& item : pool) out.push_back(item.labels);
  return out;
}

std::unique_ptr<Classifier> load_classifier(const std::string& model, const std::string& endpoint) {
  if (!endpoint.empty()) return std::make_unique<ExternalClassifier>(endpoint);
  if (model.empty()) throw UsageError("either --model or --endpoint is required");
  return std::make_unique<LinearClassifier>(LinearClassifier::load(model));
}

Category parse_category(const std::string& name) {
  for (Category c : kCategories) {
    if (to_string(c) == name) return c;
  }
  throw UsageError("unknown category '" + name + "' (incident, effects, advice)");
}

std::vector<LabelVector> cut_at(std::span<const PredictionTriple> predictions, const HeadCuts& cuts) {
  std::vector<LabelVector> out;
  for (const auto& p : predictions) out.push_back(LabelVector::of(p[0] >= cuts[0], p[1] >= cuts[1], p[2] >= cuts[2]));
  return out;
}

LinearClassifier train_on(const std::vector<LabeledSentence>& pool, const Hyperparameters& hyper,
                          const std::string& embeddings, const std::string& version) {
  if (embeddings.empty()) return train_tfidf_classifier(texts(pool), labels(pool), hyper, version);
  auto table = std::make_shared<const EmbeddingTable>(load_embeddings(embeddings));
  auto featurizer = std::make_shared<const EmbeddingFeaturizer>(table, embeddings);
  std::vector<FeatureVector> xs;
  for (const auto& item : pool) xs.push_back(featurizer->transform(item.sentence.text));
  const auto ys = labels(pool);
  return LinearClassifier(featurizer, train_linear(xs, ys, hyper), version);
}

// Answers keyed by sentence; a sentence without an answer closes the channel.
std::map<SentenceKey, LabelVector> read_answers(const std::string& path) {
  std::map<SentenceKey, LabelVector> answers;
  for (const auto& item : read_snapshot(path)) answers[key_of(item.sentence)] = item.labels;
  return answers;
}

std::atomic<ServiceServer*> g_server{nullptr};

void stop_on_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentence triage for survivor-support forum posts"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--data-dir", g.data_dir, "Directory holding lexicons/, dictionaries/ and config.json")
      ->capture_default_str();
  app.add_option("--seed", g.seed, "Seed for training and sampling (overrides the config)");
  std::string kernels_name;
  app.add_option("--kernels", kernels_name, "Kernel backend: scalar or avx2 (default: best available)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse raw post records and write normalized posts");
  std::string ingest_in, ingest_out;
  ingest->add_option("--in", ingest_in, "Line-delimited post records")->required();
  ingest->add_option("--out", ingest_out, "Normalized posts (JSONL)")->required();

  // filter
  auto* filter = app.add_subcommand("filter", "Judge post titles and split relevant posts into sentences");
  std::string filter_posts, filter_verdicts, filter_sentences;
  filter->add_option("--posts", filter_posts)->required();
  filter->add_option("--verdicts", filter_verdicts, "Per-post verdicts (JSONL)")->required();
  filter->add_option("--sentences", filter_sentences, "Sentences of relevant posts (JSONL)");

  // mine
  auto* mine = app.add_subcommand("mine", "Mine candidate sentences with the keyword lexicons");
  std::string mine_in, mine_out;
  mine->add_option("--sentences", mine_in)->required();
  mine->add_option("--out", mine_out)->required();

  // expand
  auto* expand = app.add_subcommand("expand", "Expand a keyword file with thesaurus synonyms");
  std::string expand_seeds, expand_thesaurus, expand_out;
  expand->add_option("--seeds", expand_seeds)->required();
  expand->add_option("--thesaurus", expand_thesaurus)->required();
  expand->add_option("--out", expand_out)->required();

  // train
  auto* train = app.add_subcommand("train", "Train the linear multilabel classifier");
  std::string train_in, train_out, train_embeddings, train_version = "cli";
  train->add_option("--labeled", train_in, "Labeled sentences (snapshot JSONL)")->required();
  train->add_option("--out", train_out, "Model file (JSON)")->required();
  train->add_option("--embeddings", train_embeddings, "Word-vector file; default is TF-IDF features");
  train->add_option("--version", train_version, "Model version tag")->capture_default_str();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "k-fold cross-validation of the classifier");
  std::string eval_in, eval_out;
  std::optional<std::size_t> eval_folds;
  evaluate->add_option("--labeled", eval_in)->required();
  evaluate->add_option("--out", eval_out, "Report (JSON)")->required();
  evaluate->add_option("--folds", eval_folds, "Folds (default from config)");

  // roc
  auto* roc = app.add_subcommand("roc", "ROC of one category's misclassifications against its probability");
  std::string roc_model, roc_endpoint, roc_in, roc_out, roc_category = "incident";
  roc->add_option("--model", roc_model);
  roc->add_option("--endpoint", roc_endpoint, "External inference service");
  roc->add_option("--labeled", roc_in)->required();
  roc->add_option("--category", roc_category)->capture_default_str();
  roc->add_option("--out", roc_out, "Curve points (CSV)")->required();

  // calibrate and cycle
  std::string cal_pool, cal_sample, cal_out, cal_embeddings;
  std::optional<std::size_t> cal_tune;
  auto add_calibrate_options = [&](CLI::App* cmd) {
    cmd->add_option("--pool", cal_pool, "Current labeled pool L (snapshot JSONL)")->required();
    cmd->add_option("--sample", cal_sample, "Labeled calibration sample U' (snapshot JSONL)")->required();
    cmd->add_option("--tune", cal_tune, "Items of U' added to training (V); the rest (T) calibrate");
    cmd->add_option("--embeddings", cal_embeddings);
    cmd->add_option("--out", cal_out, "Policy file (JSON)")->required();
  };
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Calibrate per-category query thresholds");
  add_calibrate_options(calibrate_cmd);
  auto* cycle = app.add_subcommand("cycle", "Active-learning cycles");
  cycle->require_subcommand(1);
  auto* cycle_calibrate = cycle->add_subcommand("calibrate", "Calibrate per-category query thresholds");
  add_calibrate_options(cycle_calibrate);
  auto* cycle_run = cycle->add_subcommand("run", "Run labeling cycles");
  std::string run_pool, run_unlabeled, run_policy, run_store, run_answers, run_service, run_host = "127.0.0.1";
  std::optional<std::size_t> run_batch, run_cycles;
  int run_port = 8080;
  bool run_recalibrate = false;
  cycle_run->add_option("--pool", run_pool, "Seed labeled pool (snapshot JSONL)")->required();
  cycle_run->add_option("--unlabeled", run_unlabeled, "Unlabeled sentences (JSONL)")->required();
  cycle_run->add_option("--policy", run_policy, "Policy file; default thresholds otherwise");
  cycle_run->add_option("--store", run_store, "Snapshot directory")->required();
  cycle_run->add_option("--batch-size", run_batch);
  cycle_run->add_option("--cycles", run_cycles);
  cycle_run->add_option("--answers", run_answers, "Human labels for queried sentences (snapshot JSONL)");
  cycle_run->add_option("--service", run_service, "Annotation service config; labels come over HTTP");
  cycle_run->add_option("--host", run_host)->capture_default_str();
  cycle_run->add_option("--port", run_port)->capture_default_str();
  cycle_run->add_flag("--recalibrate", run_recalibrate, "Recalibrate thresholds from each cycle's queried items");

  // extract
  auto* extract_cmd = app.add_subcommand("extract", "Extract incident, effects and advice sentences from posts");
  std::string ex_posts, ex_model, ex_endpoint, ex_format = "plain", ex_out;
  bool ex_no_title = false;
  extract_cmd->add_option("--posts", ex_posts)->required();
  extract_cmd->add_option("--model", ex_model);
  extract_cmd->add_option("--endpoint", ex_endpoint, "External inference service");
  extract_cmd->add_option("--format", ex_format, "plain, json or highlighted")->capture_default_str();
  extract_cmd->add_flag("--no-title", ex_no_title, "Omit the post title in plain output");
  extract_cmd->add_option("--out", ex_out, "Output file (default stdout)");

  // psycho-report
  auto* psycho = app.add_subcommand("psycho-report", "Dictionary word-rate means per sentence category");
  std::string ps_in, ps_dictionary, ps_model, ps_format = "csv", ps_out;
  psycho->add_option("--labeled", ps_in)->required();
  psycho->add_option("--dictionary", ps_dictionary, "Dictionary file (default from config)");
  psycho->add_option("--model", ps_model, "Label sentences with this model instead of the stored labels");
  psycho->add_option("--format", ps_format, "csv or json")->capture_default_str();
  psycho->add_option("--out", ps_out, "Output file (default stdout)");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the annotation service");
  std::string sv_config, sv_host = "127.0.0.1", sv_sentences;
  int sv_port = 8080;
  bool sv_single = false;
  std::size_t sv_cycle = 1;
  serve->add_option("--service", sv_config, "Service config (accounts, log path)")->required();
  serve->add_option("--host", sv_host)->capture_default_str();
  serve->add_option("--port", sv_port)->capture_default_str();
  serve->add_option("--open", sv_sentences, "Open a labeling cycle over these sentences (JSONL)");
  serve->add_option("--cycle", sv_cycle, "Cycle number for --open")->capture_default_str();
  serve->add_flag("--single", sv_single, "One annotator per task");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  try {
    if (!kernels_name.empty()) {
      if (kernels_name == "scalar") {
        kernels::select(kernels::Backend::kScalar);
      } else if (kernels_name == "avx2") {
        kernels::select(kernels::Backend::kAvx2);
      } else {
        throw UsageError("unknown kernel backend '" + kernels_name + "'");
      }
    }
    const Config config = resolve_config(g);

    if (ingest->parsed()) {
      const auto parsed = load_posts(ingest_in);
      write_jsonl(ingest_out, parsed.posts);
      std::size_t deleted = 0;
      for (const auto& p : parsed.posts) deleted += p.deleted;
      for (const auto& issue : parsed.issues) std::cerr << ingest_in << ":" << issue.line << ": " << issue.message << "\n";
      std::cout << "posts " << parsed.posts.size() << ", deleted " << deleted << ", skipped " << parsed.issues.size()
                << "\n";
    } else if (filter->parsed()) {
      const auto parsed = load_posts(filter_posts);
      const auto advice = load_keyword_set(config.lexicon_dir / "advice.txt");
      const auto verdicts = filter_relevant(parsed.posts, advice);
      write_jsonl(filter_verdicts, verdicts);
      std::size_t relevant = 0;
      std::vector<Sentence> sentences;
      const auto splitter = splitter_of(config);
      for (std::size_t i = 0; i < verdicts.size(); ++i) {
        if (!verdicts[i].relevant) continue;
        ++relevant;
        for (auto& s : split_sentences(parsed.posts[i].id, parsed.posts[i].body, splitter)) sentences.push_back(s);
      }
      if (!filter_sentences.empty()) write_jsonl(filter_sentences, sentences);
      std::cout << "relevant " << relevant << " of " << verdicts.size() << " posts, " << sentences.size()
                << " sentences\n";
    } else if (mine->parsed()) {
      const auto lexicons = load_lexicons(config.lexicon_dir);
      const auto candidates = mine_candidates(load_sentences(mine_in), lexicons);
      write_jsonl(mine_out, candidates);
      std::cout << "candidates " << candidates.size() << "\n";
    } else if (expand->parsed()) {
      const auto result = expand_synonyms(load_keyword_set(expand_seeds), fs::path(expand_thesaurus));
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      write_keyword_set(expand_out, result.set, "expanded from " + expand_seeds);
      std::cout << "terms " << result.set.size() << "\n";
    } else if (train->parsed()) {
      const auto pool = read_labeled(train_in);
      const auto model = train_on(pool, config.hyper, train_embeddings, train_version);
      model.save(train_out);
      std::cout << "trained on " << pool.size() << " sentences, " << model.model().dim() << " features\n";
    } else if (evaluate->parsed()) {
      const auto pool = read_labeled(eval_in);
      const auto gold = labels(pool);
      const auto all = texts(pool);
      const std::size_t k = eval_folds.value_or(config.folds);
      const auto report = kfold_cv(
          gold, k,
          [&](std::span<const std::size_t> tr, std::span<const std::size_t> te) {
            std::vector<std::string> tx, ex;
            std::vector<LabelVector> ty;
            for (auto i : tr) {
              tx.push_back(all[i]);
              ty.push_back(gold[i]);
            }
            for (auto i : te) ex.push_back(all[i]);
            const auto m = train_tfidf_classifier(tx, ty, config.hyper, "fold");
            return cut_at(m.predict(ex), config.cuts);
          },
          config.hyper.seed);
      auto out = open_out(eval_out);
      out << json(report).dump(2) << '\n';
      std::cout << "macro F1 " << report.mean.macro.f1 << " over " << k << " folds\n";
    } else if (roc->parsed()) {
      const auto classifier = load_classifier(roc_model, roc_endpoint);
      const auto pool = read_labeled(roc_in);
      const auto c = static_cast<std::size_t>(parse_category(roc_category));
      const auto predictions = classifier->predict(texts(pool));
      std::vector<double> scores;
      std::vector<bool> misclassified;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        scores.push_back(predictions[i][c]);
        misclassified.push_back((predictions[i][c] >= config.cuts[c]) != pool[i].labels[c]);
      }
      const auto curve = roc_analysis(scores, misclassified);
      auto out = open_out(roc_out);
      out << "threshold,tpr,fpr\n";
      out.precision(17);
      for (const auto& p : curve.points) out << p.threshold << ',' << p.tpr << ',' << p.fpr << '\n';
      std::cout << roc_category << ": auc " << curve.auc << ", youden threshold " << curve.youden_threshold
                << ", J " << curve.youden_j << ", misclassified " << curve.positives << " of "
                << curve.positives + curve.negatives << "\n";
    } else if (calibrate_cmd->parsed() || cycle_calibrate->parsed()) {
      const auto pool = read_labeled(cal_pool);
      const auto sample = read_labeled(cal_sample);
      const std::size_t tune = cal_tune.value_or(config.calibration_tune);
      const auto split = split_calibration(sample.size(), tune, config.policy.seed);
      auto training = pool;
      for (auto i : split.tune) training.push_back(sample[i]);
      const auto model = train_on(training, config.hyper, cal_embeddings, "calibration");
      std::vector<std::string> held;
      std::vector<LabelVector> human;
      for (auto i : split.holdout) {
        held.push_back(sample[i].sentence.text);
        human.push_back(sample[i].labels);
      }
      const auto result = calibrate(model.predict(held), human, config.policy.seed, config.cuts[0]);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      save_policy(cal_out, result.policy);
      std::cout << "thresholds";
      for (double t : result.policy.thresholds) std::cout << ' ' << t;
      std::cout << " from " << held.size() << " held-out items\n";
    } else if (cycle_run->parsed()) {
      if (run_answers.empty() == run_service.empty()) throw UsageError("give exactly one of --answers or --service");
      auto policy = run_policy.empty() ? config.policy : load_policy(run_policy);
      auto state = initial_state(read_labeled(run_pool), policy);
      const auto lexicons = load_lexicons(config.lexicon_dir);
      const auto unlabeled = load_sentences(run_unlabeled);
      SnapshotStore store(run_store);
      const auto trainer = tfidf_trainer(config.hyper);
      CycleOptions options;
      options.recalibrate = run_recalibrate;

      std::unique_ptr<AnnotationChannel> channel;
      std::unique_ptr<AnnotationService> service;
      std::unique_ptr<ServiceServer> server;
      std::thread serving;
      std::map<SentenceKey, LabelVector> answers;
      if (!run_answers.empty()) {
        answers = read_answers(run_answers);
        channel = std::make_unique<OracleChannel>([&](const Sentence& s) -> std::optional<LabelVector> {
          const auto it = answers.find(key_of(s));
          if (it == answers.end()) return std::nullopt;
          return it->second;
        });
      } else {
        service = std::make_unique<AnnotationService>(load_service_config(run_service));
        server = std::make_unique<ServiceServer>(*service);
        const int port = server->bind(run_host, run_port);
        serving = std::thread([&] { server->serve(); });
        server->wait_until_ready();
        std::cout << "annotation service on http://" << run_host << ":" << port << std::endl;
        channel = std::make_unique<ServiceChannel>(*service);
      }

      const std::size_t batch_size = run_batch.value_or(config.batch_size);
      const std::size_t cycles = run_cycles.value_or(config.cycles);
      std::set<SentenceKey> in_pool;
      for (const auto& item : state.pool) in_pool.insert(key_of(item.sentence));
      try {
        for (std::size_t i = 0; i < cycles; ++i) {
          std::vector<Sentence> remaining;
          for (const auto& s : unlabeled) {
            if (!in_pool.count(key_of(s))) remaining.push_back(s);
          }
          const auto batch = sample_unlabeled(remaining, lexicons, batch_size,
                                              derive_seed(config.policy.seed, state.cycle_index + 1));
          auto report = run_cycle(state, batch, *channel, trainer, &store, options);
          for (const auto& s : batch) in_pool.insert(key_of(s));
          state = std::move(report.state);
          std::cout << "cycle " << state.cycle_index << ": queried " << report.query.items.size() << ", overrides "
                    << report.overrides << ", |L| = " << state.pool.size() << std::endl;
        }
      } catch (...) {
        if (server) {
          server->stop();
          serving.join();
        }
        throw;
      }
      if (server) {
        server->stop();
        serving.join();
      }
      save_policy(store.directory() / "policy.json", state.policy);
      return 0;
    } else if (extract_cmd->parsed()) {
      const auto classifier = load_classifier(ex_model, ex_endpoint);
      const auto format = parse_render_format(ex_format);
      const auto parsed = load_posts(ex_posts);
      const auto splitter = splitter_of(config);
      std::ofstream file;
      if (!ex_out.empty()) file = open_out(ex_out);
      std::ostream& out = ex_out.empty() ? std::cout : file;
      for (const auto& post : parsed.posts) {
        const auto result = extract(post, *classifier, config.cuts, splitter);
        auto text = render(result, format, RenderOptions{!ex_no_title});
        if (format == RenderFormat::kJson) text = json::parse(text).dump();
        out << text;
        if (text.empty() || text.back() != '\n') out << '\n';
      }
    } else if (psycho->parsed()) {
      const auto dictionary = load_dictionary(ps_dictionary.empty() ? config.dictionary : fs::path(ps_dictionary));
      const auto pool = read_labeled(ps_in);
      std::vector<ScoredInput> inputs;
      std::string source = "gold";
      if (!ps_model.empty()) {
        const auto model = LinearClassifier::load(ps_model);
        const auto predicted = cut_at(model.predict(texts(pool)), config.cuts);
        for (std::size_t i = 0; i < pool.size(); ++i) inputs.push_back({pool[i].sentence.text, predicted[i]});
        source = "model";
      } else {
        for (const auto& item : pool) inputs.push_back({item.sentence.text, item.labels});
      }
      const auto report = category_report(inputs, dictionary, source);
      std::string text;
      if (ps_format == "csv") {
        text = report_csv(report);
      } else if (ps_format == "json") {
        text = report_json(report).dump(2) + "\n";
      } else {
        throw UsageError("unknown report format '" + ps_format + "' (csv, json)");
      }
      if (ps_out.empty()) {
        std::cout << text;
      } else {
        open_out(ps_out) << text;
      }
    } else if (serve->parsed()) {
      AnnotationService service(load_service_config(sv_config));
      if (!sv_sentences.empty()) {
        const auto tasks = service.open_cycle(sv_cycle, load_sentences(sv_sentences), sv_single);
        std::cout << "opened cycle " << sv_cycle << " with " << tasks.size() << " tasks" << std::endl;
      }
      ServiceServer server(service);
      const int port = server.bind(sv_host, sv_port);
      g_server = &server;
      std::signal(SIGINT, stop_on_signal);
      std::signal(SIGTERM, stop_on_signal);
      std::cout << "annotation service on http://" << sv_host << ":" << port << std::endl;
      server.serve();
      g_server = nullptr;
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kData);
  }
}
