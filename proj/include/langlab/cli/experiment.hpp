#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "langlab/corpora/wals.hpp"
#include "langlab/typology/eval.hpp"

namespace langlab::cli {

enum class TaskKind { G2p, Reconstruction, Inflection, Tagging };
std::string task_name(TaskKind task);
TaskKind parse_task(const std::string& name);

/// A full experiment read from one INI-style config file (diff-friendly
/// `[section]` headers over `key = value` lines, `#` comments).
///
///   [task]        kind = g2p | reconstruction | inflection | tagging
///   [data]        train = <path>; dev = <path> (tagging only, optional);
///                 language = <code> (tagging from a single CoNLL-U file);
///                 dev_fraction = <percent as 0..1, default 0.1>
///   [embeddings]  source = pretrained | random; path = <file> (pretrained);
///                 dimension = <d> (random, default 64); seed = <n>
///   [wals]        languages / features / values = <path>
///   [eval]        category = phonology|morphology|word_order|all;
///                 split = random|unseen_family|all_features; folds; family;
///                 seed; k; metric = euclidean|cosine
///   [training]    iterations (sequence tasks) | max_epochs + patience
///                 (tagging); snapshot_every; batch_size; seed;
///                 learning_rate; model size overrides (char_embedding_dim,
///                 encoder_hidden, decoder_hidden, attention_dim,
///                 max_decode_length, char_lstm_hidden, word_lstm_hidden,
///                 word_lstm_layers)
///   [output]      dir = <directory>
struct ExperimentConfig {
  TaskKind task = TaskKind::G2p;

  std::string train_path;
  std::string dev_path;      // tagging only
  std::string language;      // tagging from a single file
  Scalar dev_fraction = 0.1;

  bool random_embeddings = false;
  std::string pretrained_path;       // when !random_embeddings
  Index embedding_dim = 64;          // when random_embeddings
  std::uint64_t embedding_seed = 1;

  std::string wals_languages;
  std::string wals_features;
  std::string wals_values;

  std::string category = "all";  // feature selection
  typology::SplitSpec split;
  int k = 1;
  typology::Metric metric = typology::Metric::Euclidean;

  Index iterations = 500;      // sequence tasks
  Index snapshot_every = 50;
  Index batch_size = 0;        // 0 = task default
  std::uint64_t seed = 1;
  Scalar learning_rate = 0.001;
  std::optional<Index> char_embedding_dim;
  std::optional<Index> encoder_hidden;
  std::optional<Index> decoder_hidden;
  std::optional<Index> attention_dim;
  std::optional<Index> max_decode_length;
  std::optional<Index> char_lstm_hidden;
  std::optional<Index> word_lstm_hidden;
  std::optional<Index> word_lstm_layers;
  std::optional<Index> max_epochs;
  std::optional<Index> patience;

  std::string out_dir;
};

/// Parses and validates config text; `origin` names the source in errors.
/// Throws ConfigError naming the first offending section.key; referenced
/// paths must exist.
ExperimentConfig parse_experiment_config_text(const std::string& text, const std::string& origin);
ExperimentConfig parse_experiment_config(const std::string& path);

/// The feature ids a category name selects from the catalog ("all" = every
/// feature).
std::vector<std::string> category_feature_ids(const corpora::WalsTable& wals,
                                              const std::string& category);

/// Runs the full loop: load data, build the task model over the configured
/// embeddings, train with snapshots, evaluate typology at every snapshot,
/// and write reports under out_dir (loss/eval/trajectory TSVs, embedding
/// snapshots, dendrogram, manifest.json, results.json). Deterministic given
/// the config; leaves a FAILED marker file when it aborts partway.
void run_experiment(const ExperimentConfig& config);

/// Three-row comparison (most-frequent baseline, run A, run B) per feature
/// category from two completed run directories evaluated under the same
/// split. The significantly better system of A and B (randomization test,
/// p < 0.05) is starred; instance-level p-values are listed below the table.
/// Rejects runs whose feature sets differ, listing the symmetric difference.
std::string compare_runs(const std::string& dir_a, const std::string& dir_b);

}  // namespace langlab::cli
