#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "langlab/corpora/wals.hpp"
#include "langlab/langspace/store.hpp"

namespace langlab::typology {

enum class Metric { Euclidean, Cosine };
std::string metric_name(Metric metric);
/// Inverse of metric_name; rejects unknown names.
Metric parse_metric(const std::string& name);

/// One language's entry in a feature's evaluation pool.
struct LabeledPoint {
  std::string language;
  Vec embedding;
  std::string value;

  bool operator==(const LabeledPoint&) const = default;
};

Scalar point_distance(const Vec& a, const Vec& b, Metric metric);

/// Value of the k nearest training points (majority vote). Ties break on
/// smallest distance, then lexicographically smallest language code; vote
/// ties on the lexicographically smallest value.
std::string knn_predict(const std::vector<LabeledPoint>& train, const Vec& query, int k = 1,
                        Metric metric = Metric::Euclidean);

/// Modal value; ties break lexicographically.
std::string modal_value(const std::vector<std::string>& values);

/// Accuracy of predicting the modal training value for every test item.
Scalar most_frequent_baseline(const std::vector<std::string>& train_values,
                              const std::vector<std::string>& test_values);

/// Seeded partition into `folds` disjoint subsets whose sizes differ by at
/// most one; each fold is returned sorted.
std::vector<std::vector<std::string>> make_folds(const std::vector<std::string>& languages,
                                                 Index folds, std::uint64_t seed);

/// Evaluation pool of one WALS feature: the languages that both carry a coded
/// value and have an embedding.
struct FeatureDataset {
  std::string feature_id;
  std::vector<LabeledPoint> points;  // sorted by language code, no duplicates
};

FeatureDataset make_feature_dataset(const langspace::EmbeddingFrame& embeddings,
                                    const corpora::WalsTable& wals,
                                    const std::string& feature_id);

/// (train, test): test carries every dataset language whose WALS family is
/// `family`, train the rest. Rejects an absent family and an empty train side.
std::pair<std::vector<LabeledPoint>, std::vector<LabeledPoint>> unseen_family_split(
    const FeatureDataset& dataset, const corpora::WalsTable& wals, const std::string& family);

enum class SplitMode { Random, UnseenFamily, AllFeatures };
std::string split_mode_name(SplitMode mode);
SplitMode parse_split_mode(const std::string& name);

struct SplitSpec {
  SplitMode mode = SplitMode::Random;
  Index folds = 3;                // Random mode
  std::string held_out_family;    // required outside Random mode
  std::uint64_t seed = 1;
};

struct Prediction {
  std::string language;
  std::string gold;
  std::string knn;
  std::string baseline;

  bool operator==(const Prediction&) const = default;
};

struct FeatureEval {
  std::string feature_id;
  Index n_languages = 0;  // evaluation pool size
  bool single_class = false;
  Scalar knn_accuracy = 0.0;
  Scalar baseline_accuracy = 0.0;
  std::vector<Prediction> predictions;  // one per held-out language
};

struct EvalResult {
  std::vector<FeatureEval> features;

  /// Arithmetic mean of the per-feature accuracies. Single-class features
  /// (both systems trivially at 1.0) can be excluded.
  Scalar mean_accuracy(bool include_single_class = true) const;
  Scalar mean_baseline(bool include_single_class = true) const;

  /// Flattened across features in order — aligned inputs for significance().
  std::vector<std::string> knn_predictions() const;
  std::vector<std::string> baseline_predictions() const;
  std::vector<std::string> gold_values() const;
};

/// Per-feature k-NN vs. most-frequent-value evaluation over identical splits.
/// Random mode runs fold-wise cross-validation (fold count clamped to the
/// pool size per feature); the family modes hold one family out entirely
/// and skip features the held-out family never codes. Features with fewer
/// than two pooled languages are skipped; if nothing remains, rejects.
EvalResult evaluate(const langspace::EmbeddingFrame& embeddings, const corpora::WalsTable& wals,
                    const std::vector<std::string>& feature_ids, const SplitSpec& split,
                    int k = 1, Metric metric = Metric::Euclidean);

/// TSV with header: feature_id, accuracy, baseline, n_languages.
std::string to_tsv(const EvalResult& result);

/// Two-sided approximate-randomization p-value for the accuracy difference
/// between two aligned prediction vectors: (count + 1) / (trials + 1) over
/// seeded coin-flip swaps. Symmetric in its first two arguments.
Scalar significance(const std::vector<std::string>& predictions_a,
                    const std::vector<std::string>& predictions_b,
                    const std::vector<std::string>& gold, Index trials, std::uint64_t seed);

}  // namespace langlab::typology
