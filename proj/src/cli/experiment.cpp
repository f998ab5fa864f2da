#include "langlab/cli/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "json.hpp"
#include "langlab/analysis/clustering.hpp"
#include "langlab/analysis/trajectory.hpp"
#include "langlab/core/errors.hpp"
#include "langlab/core/text.hpp"
#include "langlab/corpora/corpus.hpp"
#include "langlab/langspace/store.hpp"
#include "langlab/seq2seq/model.hpp"
#include "langlab/tagger/model.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace langlab::cli {

std::string task_name(TaskKind task) {
  switch (task) {
    case TaskKind::G2p: return "g2p";
    case TaskKind::Reconstruction: return "reconstruction";
    case TaskKind::Inflection: return "inflection";
    case TaskKind::Tagging: return "tagging";
  }
  throw std::logic_error("unhandled task kind");
}

TaskKind parse_task(const std::string& name) {
  if (name == "g2p") return TaskKind::G2p;
  if (name == "reconstruction") return TaskKind::Reconstruction;
  if (name == "inflection") return TaskKind::Inflection;
  if (name == "tagging") return TaskKind::Tagging;
  throw ConfigError("unknown task kind '" + name +
                    "' (g2p, reconstruction, inflection, tagging)");
}

namespace {

std::string trimmed(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

const std::map<std::string, std::set<std::string>> kKnownKeys = {
    {"task", {"kind"}},
    {"data", {"train", "dev", "language", "dev_fraction"}},
    {"embeddings", {"source", "path", "dimension", "seed"}},
    {"wals", {"languages", "features", "values"}},
    {"eval", {"category", "split", "folds", "family", "seed", "k", "metric"}},
    {"training",
     {"iterations", "snapshot_every", "batch_size", "seed", "learning_rate",
      "char_embedding_dim", "encoder_hidden", "decoder_hidden", "attention_dim",
      "max_decode_length", "char_lstm_hidden", "word_lstm_hidden", "word_lstm_layers",
      "max_epochs", "patience"}},
    {"output", {"dir"}},
};

/// Flat section.key -> value view of the INI text, with structural errors
/// (unknown sections/keys, duplicates) reported against `origin`.
class Fields {
 public:
  Fields(const std::string& text, std::string origin) : origin_(std::move(origin)) {
    std::string section;
    for (const std::string& raw : split(text, '\n')) {
      const std::string line = trimmed(raw);
      if (line.empty() || line.front() == '#') continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail(line, "malformed section header");
        section = trimmed(std::string_view(line).substr(1, line.size() - 2));
        if (kKnownKeys.find(section) == kKnownKeys.end())
          fail("[" + section + "]", "unknown section");
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) fail(line, "expected key = value");
      if (section.empty()) fail(line, "key before any [section] header");
      const std::string key = trimmed(std::string_view(line).substr(0, eq));
      if (kKnownKeys.at(section).find(key) == kKnownKeys.at(section).end())
        fail(section + "." + key, "unknown key");
      if (!kv_.emplace(section + "." + key, trimmed(std::string_view(line).substr(eq + 1)))
               .second)
        fail(section + "." + key, "duplicate key");
    }
  }

  [[noreturn]] void fail(const std::string& what, const std::string& message) const {
    throw ConfigError(origin_ + ": " + what + ": " + message);
  }

  bool has(const std::string& key) const { return kv_.find(key) != kv_.end(); }

  std::string require(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end() || it->second.empty()) fail(key, "missing required key");
    return it->second;
  }

  std::string get(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }

  void forbid(const std::string& key, const std::string& why) const {
    if (has(key)) fail(key, why);
  }

  Index get_index(const std::string& key, Index fallback, Index min) const {
    auto it = kv_.find(key);
    const Index v = it == kv_.end()
                        ? fallback
                        : static_cast<Index>(parse_int(it->second, origin_ + ": " + key));
    if (v < min) fail(key, "must be at least " + std::to_string(min));
    return v;
  }

  std::optional<Index> get_optional_index(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return get_index(key, 0, 1);
  }

  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    return static_cast<std::uint64_t>(parse_int(it->second, origin_ + ": " + key));
  }

  Scalar get_scalar(const std::string& key, Scalar fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_double(it->second, origin_ + ": " + key);
  }

  std::string existing_path(const std::string& key) const {
    const std::string path = require(key);
    if (!fs::exists(path)) fail(key, "path does not exist: " + path);
    return path;
  }

 private:
  std::string origin_;
  std::map<std::string, std::string> kv_;
};

}  // namespace

ExperimentConfig parse_experiment_config_text(const std::string& text,
                                              const std::string& origin) {
  const Fields f(text, origin);
  ExperimentConfig cfg;

  cfg.task = parse_task(f.require("task.kind"));
  const bool tagging = cfg.task == TaskKind::Tagging;

  cfg.train_path = f.existing_path("data.train");
  if (tagging) {
    if (fs::is_directory(cfg.train_path)) {
      f.forbid("data.language", "not used when data.train is a directory of <code>.conllu files");
    } else {
      cfg.language = f.require("data.language");
    }
    if (f.has("data.dev")) cfg.dev_path = f.existing_path("data.dev");
    cfg.dev_fraction = f.get_scalar("data.dev_fraction", 0.1);
    if (!(cfg.dev_fraction > 0.0) || !(cfg.dev_fraction < 1.0))
      f.fail("data.dev_fraction", "must lie strictly between 0 and 1");
  } else {
    f.forbid("data.dev", "only applies to tagging");
    f.forbid("data.language", "only applies to tagging");
    f.forbid("data.dev_fraction", "only applies to tagging");
  }

  const std::string source = f.require("embeddings.source");
  if (source == "pretrained") {
    cfg.random_embeddings = false;
    cfg.pretrained_path = f.existing_path("embeddings.path");
    f.forbid("embeddings.dimension", "the pretrained file fixes the dimension");
  } else if (source == "random") {
    cfg.random_embeddings = true;
    f.forbid("embeddings.path", "random initialization takes no file");
    cfg.embedding_dim = f.get_index("embeddings.dimension", 64, 1);
  } else {
    f.fail("embeddings.source", "expected 'pretrained' or 'random'");
  }
  cfg.embedding_seed = f.get_seed("embeddings.seed", 1);

  cfg.wals_languages = f.existing_path("wals.languages");
  cfg.wals_features = f.existing_path("wals.features");
  cfg.wals_values = f.existing_path("wals.values");

  cfg.category = f.get("eval.category", "all");
  if (cfg.category != "phonology" && cfg.category != "morphology" &&
      cfg.category != "word_order" && cfg.category != "all")
    f.fail("eval.category", "expected phonology, morphology, word_order, or all");
  cfg.split.mode = typology::parse_split_mode(f.get("eval.split", "random"));
  if (cfg.split.mode == typology::SplitMode::Random) {
    cfg.split.folds = f.get_index("eval.folds", 3, 2);
    f.forbid("eval.family", "only applies to family-holdout splits");
  } else {
    f.forbid("eval.folds", "only applies to the random split");
    cfg.split.held_out_family = f.require("eval.family");
  }
  cfg.split.seed = f.get_seed("eval.seed", 1);
  cfg.k = static_cast<int>(f.get_index("eval.k", 1, 1));
  cfg.metric = typology::parse_metric(f.get("eval.metric", "euclidean"));

  if (tagging) {
    f.forbid("training.iterations", "tagging trains in epochs; use max_epochs");
    cfg.max_epochs = f.get_optional_index("training.max_epochs");
    cfg.patience = f.get_optional_index("training.patience");
    for (const char* key : {"training.encoder_hidden", "training.decoder_hidden",
                            "training.attention_dim", "training.max_decode_length"})
      f.forbid(key, "only applies to the sequence tasks");
    cfg.char_lstm_hidden = f.get_optional_index("training.char_lstm_hidden");
    cfg.word_lstm_hidden = f.get_optional_index("training.word_lstm_hidden");
    cfg.word_lstm_layers = f.get_optional_index("training.word_lstm_layers");
  } else {
    cfg.iterations = f.get_index("training.iterations", 500, 1);
    for (const char* key : {"training.max_epochs", "training.patience",
                            "training.char_lstm_hidden", "training.word_lstm_hidden",
                            "training.word_lstm_layers"})
      f.forbid(key, "only applies to tagging");
    cfg.encoder_hidden = f.get_optional_index("training.encoder_hidden");
    cfg.decoder_hidden = f.get_optional_index("training.decoder_hidden");
    cfg.attention_dim = f.get_optional_index("training.attention_dim");
    cfg.max_decode_length = f.get_optional_index("training.max_decode_length");
  }
  cfg.char_embedding_dim = f.get_optional_index("training.char_embedding_dim");
  cfg.snapshot_every = f.get_index("training.snapshot_every", 50, 1);
  cfg.batch_size = f.get_index("training.batch_size", 0, 0);
  cfg.seed = f.get_seed("training.seed", 1);
  cfg.learning_rate = f.get_scalar("training.learning_rate", 0.001);
  if (!(cfg.learning_rate > 0.0)) f.fail("training.learning_rate", "must be positive");

  cfg.out_dir = f.require("output.dir");
  return cfg;
}

ExperimentConfig parse_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment_config_text(text.str(), path);
}

std::vector<std::string> category_feature_ids(const corpora::WalsTable& wals,
                                              const std::string& category) {
  if (category == "all") {
    std::vector<std::string> ids;
    for (const corpora::WalsFeature& feature : wals.features()) ids.push_back(feature.id);
    return ids;
  }
  return wals.feature_ids(corpora::parse_category(category));
}

namespace {

std::string iter_tag(Index iteration) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%06lld", static_cast<long long>(iteration));
  return buf;
}

std::string frame_text(const langspace::EmbeddingFrame& frame) {
  std::string out = "d=" + std::to_string(frame.dimension()) + "\n";
  for (std::size_t i = 0; i < frame.codes.size(); ++i) {
    out += frame.codes[i];
    for (Index j = 0; j < frame.dimension(); ++j) {
      out += ' ';
      out += format_g17(frame.vectors(static_cast<Index>(i), j));
    }
    out += '\n';
  }
  return out;
}

langspace::EmbeddingStore make_store(const ExperimentConfig& cfg,
                                     const std::vector<std::string>& languages) {
  if (cfg.random_embeddings)
    return langspace::EmbeddingStore::init_random(languages, cfg.embedding_dim,
                                                  cfg.embedding_seed);
  auto store = langspace::EmbeddingStore::load_pretrained(cfg.pretrained_path);
  store.ensure_languages(languages, cfg.embedding_seed);
  return store;
}

std::vector<corpora::TaggedSentence> load_tagged(const std::string& path,
                                                 const std::string& language) {
  if (!fs::is_directory(path)) return corpora::parse_conllu(path, language);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path))
    if (entry.is_regular_file() && entry.path().extension() == ".conllu")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no .conllu files under " + path);
  std::vector<corpora::TaggedSentence> corpus;
  for (const fs::path& file : files) {
    auto part = corpora::parse_conllu(file.string(), file.stem().string());
    corpus.insert(corpus.end(), part.begin(), part.end());
  }
  return corpus;
}

struct TrainOutcome {
  std::string loss_index;  // "iteration" or "epoch"
  std::vector<std::pair<Index, Scalar>> loss_history;
  langspace::SnapshotSeries snapshots;
  Scalar task_accuracy = 0.0;  // exact match (sequence) / dev tokens (tagging)
};

TrainOutcome run_sequence_task(const ExperimentConfig& cfg, const fs::path& out) {
  std::vector<corpora::SeqPair> corpus;
  switch (cfg.task) {
    case TaskKind::G2p: corpus = corpora::parse_g2p(cfg.train_path); break;
    case TaskKind::Reconstruction: corpus = corpora::parse_asjp(cfg.train_path); break;
    default: corpus = corpora::parse_sigmorphon(cfg.train_path); break;
  }
  auto store = make_store(cfg, corpora::language_codes(corpus));

  seq2seq::Seq2SeqConfig mc;
  mc.char_embedding_dim = cfg.char_embedding_dim.value_or(mc.char_embedding_dim);
  mc.encoder_hidden = cfg.encoder_hidden.value_or(mc.encoder_hidden);
  mc.decoder_hidden = cfg.decoder_hidden.value_or(mc.decoder_hidden);
  mc.attention_dim = cfg.attention_dim.value_or(mc.attention_dim);
  mc.max_decode_length = cfg.max_decode_length.value_or(mc.max_decode_length);
  mc.language_dim = store.dimension();
  mc.use_tag_features = cfg.task == TaskKind::Inflection;
  if (cfg.batch_size > 0) mc.batch_size = cfg.batch_size;
  mc.seed = cfg.seed;
  mc.optimizer.lr = cfg.learning_rate;

  seq2seq::Seq2SeqModel model(mc, corpora::build_vocab(corpus), corpora::build_tag_set(corpus),
                              std::move(store));
  auto run = seq2seq::train(model, corpus, cfg.iterations, cfg.snapshot_every);
  model.params().save((out / "model.params").string());

  TrainOutcome outcome;
  outcome.loss_index = "iteration";
  outcome.loss_history = std::move(run.loss_history);
  outcome.snapshots = std::move(run.snapshots);
  outcome.task_accuracy = seq2seq::exact_match_accuracy(model, corpus);
  return outcome;
}

TrainOutcome run_tagging_task(const ExperimentConfig& cfg, const fs::path& out) {
  auto corpus = load_tagged(cfg.train_path, cfg.language);
  std::vector<corpora::TaggedSentence> train_part;
  std::vector<corpora::TaggedSentence> dev_part;
  if (!cfg.dev_path.empty()) {
    train_part = std::move(corpus);
    dev_part = load_tagged(cfg.dev_path, cfg.language);
  } else {
    std::tie(train_part, dev_part) =
        tagger::make_dev_split(corpus, cfg.dev_fraction, cfg.seed);
    if (dev_part.empty())
      throw DataError("the dev split came up empty; provide data.dev or more sentences");
  }
  std::vector<std::string> languages = corpora::language_codes(train_part);
  for (const std::string& code : corpora::language_codes(dev_part))
    if (!std::binary_search(languages.begin(), languages.end(), code))
      throw DataError("dev language '" + code + "' does not occur in the training data");
  auto store = make_store(cfg, languages);

  tagger::TaggerConfig tc;
  tc.char_embedding_dim = cfg.char_embedding_dim.value_or(tc.char_embedding_dim);
  tc.char_lstm_hidden = cfg.char_lstm_hidden.value_or(tc.char_lstm_hidden);
  tc.word_lstm_hidden = cfg.word_lstm_hidden.value_or(tc.word_lstm_hidden);
  tc.word_lstm_layers = cfg.word_lstm_layers.value_or(tc.word_lstm_layers);
  tc.max_epochs = cfg.max_epochs.value_or(tc.max_epochs);
  tc.patience = cfg.patience.value_or(tc.patience);
  tc.language_dim = store.dimension();
  if (cfg.batch_size > 0) tc.batch_size = cfg.batch_size;
  tc.seed = cfg.seed;
  tc.optimizer.lr = cfg.learning_rate;

  // the tagger's character alphabet must cover dev tokens too
  auto all_sentences = train_part;
  all_sentences.insert(all_sentences.end(), dev_part.begin(), dev_part.end());
  tagger::TaggerModel model(tc, corpora::build_vocab(all_sentences),
                            corpora::build_tag_set(train_part), std::move(store));
  auto run = tagger::train_tagger(model, train_part, dev_part);
  model.params().save((out / "model.params").string());

  std::string dev_tsv = "epoch\taccuracy\n";
  for (std::size_t e = 0; e < run.dev_accuracy.size(); ++e)
    dev_tsv += std::to_string(e + 1) + "\t" + format_g17(run.dev_accuracy[e]) + "\n";
  write_file_atomic((out / "dev_accuracy.tsv").string(), dev_tsv);
  write_file_atomic((out / "predictions.tsv").string(),
                    tagger::format_predictions(model, dev_part));

  TrainOutcome outcome;
  outcome.loss_index = "epoch";
  outcome.loss_history = std::move(run.loss_history);
  outcome.snapshots = std::move(run.snapshots);
  outcome.task_accuracy = tagger::token_accuracy(model, dev_part);
  return outcome;
}

std::string predictions_tsv(const typology::EvalResult& result) {
  std::string out = "feature_id\tlanguage\tgold\tknn\tbaseline\n";
  for (const typology::FeatureEval& f : result.features)
    for (const typology::Prediction& p : f.predictions)
      out += f.feature_id + "\t" + p.language + "\t" + p.gold + "\t" + p.knn + "\t" +
             p.baseline + "\n";
  return out;
}

json split_to_json(const ExperimentConfig& cfg) {
  return json{{"mode", typology::split_mode_name(cfg.split.mode)},
              {"folds", cfg.split.folds},
              {"family", cfg.split.held_out_family},
              {"seed", cfg.split.seed},
              {"k", cfg.k},
              {"metric", typology::metric_name(cfg.metric)}};
}

json config_to_json(const ExperimentConfig& cfg) {
  json j{{"task", task_name(cfg.task)},
         {"data", json{{"train", cfg.train_path}}},
         {"embeddings",
          cfg.random_embeddings
              ? json{{"source", "random"},
                     {"dimension", cfg.embedding_dim},
                     {"seed", cfg.embedding_seed}}
              : json{{"source", "pretrained"},
                     {"path", cfg.pretrained_path},
                     {"seed", cfg.embedding_seed}}},
         {"wals", json{{"languages", cfg.wals_languages},
                       {"features", cfg.wals_features},
                       {"values", cfg.wals_values}}},
         {"eval", split_to_json(cfg)},
         {"category", cfg.category},
         {"training", json{{"snapshot_every", cfg.snapshot_every},
                           {"batch_size", cfg.batch_size},
                           {"seed", cfg.seed},
                           {"learning_rate", cfg.learning_rate}}},
         {"output", cfg.out_dir}};
  if (cfg.task == TaskKind::Tagging) {
    if (!cfg.dev_path.empty()) j["data"]["dev"] = cfg.dev_path;
    if (!cfg.language.empty()) j["data"]["language"] = cfg.language;
    j["data"]["dev_fraction"] = cfg.dev_fraction;
  } else {
    j["training"]["iterations"] = cfg.iterations;
  }
  auto set_if = [&](const char* key, const std::optional<Index>& v) {
    if (v) j["training"][key] = *v;
  };
  set_if("char_embedding_dim", cfg.char_embedding_dim);
  set_if("encoder_hidden", cfg.encoder_hidden);
  set_if("decoder_hidden", cfg.decoder_hidden);
  set_if("attention_dim", cfg.attention_dim);
  set_if("max_decode_length", cfg.max_decode_length);
  set_if("char_lstm_hidden", cfg.char_lstm_hidden);
  set_if("word_lstm_hidden", cfg.word_lstm_hidden);
  set_if("word_lstm_layers", cfg.word_lstm_layers);
  set_if("max_epochs", cfg.max_epochs);
  set_if("patience", cfg.patience);
  return j;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void run_experiment_impl(const ExperimentConfig& cfg, const fs::path& out) {
  const auto wals =
      corpora::parse_wals(cfg.wals_languages, cfg.wals_features, cfg.wals_values);
  const bool all_feature_mode = cfg.split.mode == typology::SplitMode::AllFeatures;
  const std::vector<std::string> feature_ids =
      category_feature_ids(wals, all_feature_mode ? "all" : cfg.category);
  if (feature_ids.empty())
    throw DataError("category '" + cfg.category + "' selects no WALS features");

  TrainOutcome outcome = cfg.task == TaskKind::Tagging ? run_tagging_task(cfg, out)
                                                       : run_sequence_task(cfg, out);

  std::string loss_tsv = outcome.loss_index + "\tloss\n";
  for (const auto& [index, loss] : outcome.loss_history)
    loss_tsv += std::to_string(index) + "\t" + format_g17(loss) + "\n";
  write_file_atomic((out / "loss.tsv").string(), loss_tsv);

  fs::create_directories(out / "snapshots");
  fs::create_directories(out / "eval");
  const langspace::SnapshotSeries& series = outcome.snapshots;
  std::vector<typology::EvalResult> results;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const std::string tag = iter_tag(series.iteration_at(s));
    write_file_atomic((out / "snapshots" / ("emb_" + tag + ".txt")).string(),
                      frame_text(series.frame_at(s)));
    results.push_back(
        typology::evaluate(series.frame_at(s), wals, feature_ids, cfg.split, cfg.k, cfg.metric));
    write_file_atomic((out / "eval" / ("result_" + tag + ".tsv")).string(),
                      typology::to_tsv(results.back()));
    write_file_atomic((out / "eval" / ("predictions_" + tag + ".tsv")).string(),
                      predictions_tsv(results.back()));
  }

  // per-feature accuracy curves, assembled from the fixed-fold snapshot evals
  fs::create_directories(out / "trajectories");
  const typology::EvalResult& first = results.front();
  for (const typology::FeatureEval& fe : first.features) {
    analysis::FeatureAccuracyTrajectory traj;
    traj.feature_id = fe.feature_id;
    bool complete = true;
    for (std::size_t s = 0; s < results.size(); ++s) {
      const auto& features = results[s].features;
      auto it = std::find_if(features.begin(), features.end(),
                             [&](const auto& g) { return g.feature_id == fe.feature_id; });
      if (it == features.end()) {
        complete = false;
        break;
      }
      traj.points.push_back(analysis::TrajectoryPoint{series.iteration_at(s), it->knn_accuracy,
                                                      it->baseline_accuracy});
    }
    if (complete)
      write_file_atomic((out / "trajectories" / (fe.feature_id + ".tsv")).string(),
                        analysis::to_tsv(traj));
  }

  const langspace::EmbeddingFrame& final_frame = series.frame_at(series.size() - 1);
  if (final_frame.codes.size() >= 2) {
    const auto tree =
        analysis::upgma(analysis::embedding_distance_matrix(final_frame, final_frame.codes));
    write_file_atomic((out / "tree.nwk").string(), analysis::to_newick(tree) + "\n");
    write_file_atomic((out / "tree.svg").string(), analysis::render_dendrogram_svg(tree));
  }

  json snapshots_json = json::array();
  for (std::size_t s = 0; s < results.size(); ++s) {
    const typology::EvalResult& r = results[s];
    json by_category = json::object();
    std::map<std::string, std::vector<const typology::FeatureEval*>> groups;
    for (const typology::FeatureEval& fe : r.features)
      groups[corpora::category_name(
                 corpora::categorize_chapter(wals.find_feature(fe.feature_id)->chapter))]
          .push_back(&fe);
    for (const auto& [name, members] : groups) {
      Scalar acc = 0.0;
      Scalar base = 0.0;
      for (const auto* fe : members) {
        acc += fe->knn_accuracy;
        base += fe->baseline_accuracy;
      }
      by_category[name] = json{{"accuracy", acc / static_cast<Scalar>(members.size())},
                               {"baseline", base / static_cast<Scalar>(members.size())},
                               {"n_features", members.size()}};
    }
    snapshots_json.push_back(json{{"iteration", series.iteration_at(s)},
                                  {"mean_accuracy", r.mean_accuracy()},
                                  {"mean_baseline", r.mean_baseline()},
                                  {"by_category", by_category}});
  }

  const typology::EvalResult& last = results.back();
  constexpr Index kTrials = 10000;
  json significance{
      {"trials", kTrials},
      {"final_vs_baseline",
       typology::significance(last.knn_predictions(), last.baseline_predictions(),
                              last.gold_values(), kTrials, cfg.split.seed)},
      {"final_vs_initial",
       typology::significance(last.knn_predictions(), first.knn_predictions(),
                              first.gold_values(), kTrials, cfg.split.seed)}};

  std::vector<std::string> evaluated;
  std::vector<std::string> single_class;
  for (const typology::FeatureEval& fe : first.features) {
    evaluated.push_back(fe.feature_id);
    if (fe.single_class) single_class.push_back(fe.feature_id);
  }
  json results_json{{"task", task_name(cfg.task)},
                    {"task_accuracy", outcome.task_accuracy},
                    {"category", all_feature_mode ? "all" : cfg.category},
                    {"split", split_to_json(cfg)},
                    {"features", evaluated},
                    {"single_class_features", single_class},
                    {"snapshots", snapshots_json},
                    {"significance", significance}};
  write_file_atomic((out / "results.json").string(), results_json.dump(2) + "\n");

  json manifest{{"tool", "langlab"},
                {"version", "0.1.0"},
                {"created", utc_timestamp()},
                {"config", config_to_json(cfg)},
                {"seeds", json{{"training", cfg.seed},
                               {"embeddings", cfg.embedding_seed},
                               {"eval", cfg.split.seed}}}};
  write_file_atomic((out / "manifest.json").string(), manifest.dump(2) + "\n");
}

}  // namespace

void run_experiment(const ExperimentConfig& cfg) {
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  std::error_code ec;
  fs::remove(out / "FAILED", ec);  // a fresh attempt clears any stale marker
  try {
    run_experiment_impl(cfg, out);
  } catch (const std::exception& e) {
    write_file_atomic((out / "FAILED").string(), std::string(e.what()) + "\n");
    throw;
  }
}

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

struct PredictionRow {
  std::string feature_id;
  std::string language;
  std::string gold;
  std::string knn;
  std::string baseline;
};

std::vector<PredictionRow> read_predictions(const fs::path& run_dir, Index iteration) {
  const fs::path path = run_dir / "eval" / ("predictions_" + iter_tag(iteration) + ".tsv");
  const std::vector<std::string> lines = read_lines(path.string());
  if (lines.empty() || lines.front() != "feature_id\tlanguage\tgold\tknn\tbaseline")
    throw DataError(path.string() + ": not a predictions table");
  std::vector<PredictionRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cols = split(lines[i], '\t');
    if (cols.size() != 5)
      throw DataError(path.string() + " line " + std::to_string(i + 1) + ": expected 5 columns");
    rows.push_back(PredictionRow{cols[0], cols[1], cols[2], cols[3], cols[4]});
  }
  std::sort(rows.begin(), rows.end(), [](const PredictionRow& a, const PredictionRow& b) {
    if (a.feature_id != b.feature_id) return a.feature_id < b.feature_id;
    return a.language < b.language;
  });
  return rows;
}

std::string fixed4(Scalar v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string compare_runs(const std::string& dir_a, const std::string& dir_b) {
  const json ra = read_json_file(fs::path(dir_a) / "results.json");
  const json rb = read_json_file(fs::path(dir_b) / "results.json");

  if (ra.at("split") != rb.at("split"))
    throw DataError("runs were evaluated under different splits; comparison needs one split");

  std::vector<std::string> fa = ra.at("features").get<std::vector<std::string>>();
  std::vector<std::string> fb = rb.at("features").get<std::vector<std::string>>();
  std::sort(fa.begin(), fa.end());
  std::sort(fb.begin(), fb.end());
  if (fa != fb) {
    std::vector<std::string> diff;
    std::set_symmetric_difference(fa.begin(), fa.end(), fb.begin(), fb.end(),
                                  std::back_inserter(diff));
    throw DataError("feature sets differ between runs: " + join(diff, " "));
  }

  const Index it_a = ra.at("snapshots").back().at("iteration").get<Index>();
  const Index it_b = rb.at("snapshots").back().at("iteration").get<Index>();
  const auto pa = read_predictions(dir_a, it_a);
  const auto pb = read_predictions(dir_b, it_b);
  if (pa.size() != pb.size())
    throw DataError("runs predict different language sets; comparison needs aligned folds");
  std::vector<std::string> gold;
  std::vector<std::string> knn_a;
  std::vector<std::string> knn_b;
  std::vector<std::string> baseline;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].feature_id != pb[i].feature_id || pa[i].language != pb[i].language ||
        pa[i].gold != pb[i].gold || pa[i].baseline != pb[i].baseline)
      throw DataError("prediction tables are not aligned at row " + std::to_string(i + 1) +
                      "; comparison needs identical folds and gold data");
    gold.push_back(pa[i].gold);
    knn_a.push_back(pa[i].knn);
    knn_b.push_back(pb[i].knn);
    baseline.push_back(pa[i].baseline);
  }

  const std::uint64_t seed = ra.at("split").at("seed").get<std::uint64_t>();
  constexpr Index kTrials = 10000;
  const Scalar p_ab = typology::significance(knn_a, knn_b, gold, kTrials, seed);
  const Scalar p_a_base = typology::significance(knn_a, baseline, gold, kTrials, seed);
  const Scalar p_b_base = typology::significance(knn_b, baseline, gold, kTrials, seed);

  const json& final_a = ra.at("snapshots").back();
  const json& final_b = rb.at("snapshots").back();
  std::vector<std::string> categories;
  for (const auto& [name, value] : final_a.at("by_category").items()) categories.push_back(name);

  const Scalar acc_a = final_a.at("mean_accuracy").get<Scalar>();
  const Scalar acc_b = final_b.at("mean_accuracy").get<Scalar>();
  const bool star_a = p_ab < 0.05 && acc_a > acc_b;
  const bool star_b = p_ab < 0.05 && acc_b > acc_a;

  auto padded = [](std::string text, std::size_t width) {
    if (text.size() < width) text.resize(width, ' ');
    return text;
  };
  std::vector<std::size_t> widths{9};  // "overall" plus star room
  for (const std::string& cat : categories) widths.push_back(std::max<std::size_t>(cat.size(), 7) + 2);

  auto row = [&](const std::string& label, const json& snap, const char* acc_key,
                 const char* cat_key, bool star) {
    std::string line = padded(label, 12);
    line += padded(fixed4(snap.at(acc_key).get<Scalar>()) + (star ? "*" : ""), widths[0]);
    for (std::size_t c = 0; c < categories.size(); ++c)
      line += padded(fixed4(snap.at("by_category").at(categories[c]).at(cat_key).get<Scalar>()),
                     widths[c + 1]);
    return line + "\n";
  };

  std::string head = padded("system", 12) + padded("overall", widths[0]);
  for (std::size_t c = 0; c < categories.size(); ++c)
    head += padded(categories[c], widths[c + 1]);
  std::string table = head + "\n";
  table += row("baseline", final_a, "mean_baseline", "baseline", false);
  table += row("knn_a", final_a, "mean_accuracy", "accuracy", star_a);
  table += row("knn_b", final_b, "mean_accuracy", "accuracy", star_b);
  table += "\n";
  table += "knn_a = " + dir_a + " (" + ra.at("task").get<std::string>() + ")\n";
  table += "knn_b = " + dir_b + " (" + rb.at("task").get<std::string>() + ")\n";
  table += "p(knn_a vs knn_b) = " + fixed4(p_ab) + "\n";
  table += "p(knn_a vs baseline) = " + fixed4(p_a_base) + "\n";
  table += "p(knn_b vs baseline) = " + fixed4(p_b_base) + "\n";
  table += "* = significantly better of the two systems (p < 0.05)\n";
  return table;
}

}  // namespace langlab::cli
