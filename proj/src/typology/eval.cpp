#include "langlab/typology/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include "langlab/core/errors.hpp"
#include "langlab/core/text.hpp"
#include "langlab/langspace/similarity.hpp"

namespace langlab::typology {

std::string metric_name(Metric metric) {
  return metric == Metric::Euclidean ? "euclidean" : "cosine";
}

Metric parse_metric(const std::string& name) {
  if (name == "euclidean") return Metric::Euclidean;
  if (name == "cosine") return Metric::Cosine;
  throw ConfigError("unknown distance metric '" + name + "' (euclidean, cosine)");
}

Scalar point_distance(const Vec& a, const Vec& b, Metric metric) {
  if (a.size() != b.size())
    throw std::invalid_argument("distance between vectors of sizes " + std::to_string(a.size()) +
                                " and " + std::to_string(b.size()));
  if (metric == Metric::Euclidean) return (a - b).norm();
  return langspace::cosine_distance(a, b);
}

std::string knn_predict(const std::vector<LabeledPoint>& train, const Vec& query, int k,
                        Metric metric) {
  if (train.empty()) throw std::invalid_argument("k-NN needs a non-empty training set");
  if (k < 1) throw std::invalid_argument("k must be at least 1");

  std::vector<std::pair<Scalar, const LabeledPoint*>> ranked;
  ranked.reserve(train.size());
  for (const LabeledPoint& p : train)
    ranked.emplace_back(point_distance(p.embedding, query, metric), &p);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second->language < b.second->language;
  });

  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
  std::map<std::string, int> votes;
  for (std::size_t i = 0; i < take; ++i) ++votes[ranked[i].second->value];
  // std::map iterates values in lexicographic order, so the first maximum wins ties
  std::string best;
  int most = -1;
  for (const auto& [value, count] : votes)
    if (count > most) {
      most = count;
      best = value;
    }
  return best;
}

std::string modal_value(const std::vector<std::string>& values) {
  if (values.empty()) throw std::invalid_argument("modal value of an empty list");
  std::map<std::string, int> counts;
  for (const std::string& v : values) ++counts[v];
  std::string best;
  int most = -1;
  for (const auto& [value, count] : counts)
    if (count > most) {
      most = count;
      best = value;
    }
  return best;
}

Scalar most_frequent_baseline(const std::vector<std::string>& train_values,
                              const std::vector<std::string>& test_values) {
  if (test_values.empty()) throw std::invalid_argument("baseline needs a non-empty test set");
  const std::string guess = modal_value(train_values);
  std::size_t hits = 0;
  for (const std::string& v : test_values)
    if (v == guess) ++hits;
  return static_cast<Scalar>(hits) / static_cast<Scalar>(test_values.size());
}

std::vector<std::vector<std::string>> make_folds(const std::vector<std::string>& languages,
                                                 Index folds, std::uint64_t seed) {
  if (folds < 1) throw std::invalid_argument("fold count must be at least 1");
  if (static_cast<Index>(languages.size()) < folds)
    throw std::invalid_argument("cannot split " + std::to_string(languages.size()) +
                                " languages into " + std::to_string(folds) + " folds");
  std::vector<std::string> shuffled = languages;
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);

  std::vector<std::vector<std::string>> out(static_cast<std::size_t>(folds));
  const std::size_t base = shuffled.size() / static_cast<std::size_t>(folds);
  const std::size_t extra = shuffled.size() % static_cast<std::size_t>(folds);
  std::size_t cursor = 0;
  for (std::size_t f = 0; f < out.size(); ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    out[f].assign(shuffled.begin() + static_cast<std::ptrdiff_t>(cursor),
                  shuffled.begin() + static_cast<std::ptrdiff_t>(cursor + size));
    std::sort(out[f].begin(), out[f].end());
    cursor += size;
  }
  return out;
}

FeatureDataset make_feature_dataset(const langspace::EmbeddingFrame& embeddings,
                                    const corpora::WalsTable& wals,
                                    const std::string& feature_id) {
  if (wals.find_feature(feature_id) == nullptr)
    throw DataError("unknown WALS feature '" + feature_id + "'");
  FeatureDataset out;
  out.feature_id = feature_id;
  for (const auto& [code, value] : wals.feature_values(feature_id))
    if (embeddings.has(code))
      out.points.push_back(LabeledPoint{code, embeddings.vector_of(code), value});
  return out;
}

std::pair<std::vector<LabeledPoint>, std::vector<LabeledPoint>> unseen_family_split(
    const FeatureDataset& dataset, const corpora::WalsTable& wals, const std::string& family) {
  std::pair<std::vector<LabeledPoint>, std::vector<LabeledPoint>> out;
  for (const LabeledPoint& p : dataset.points) {
    const corpora::LanguageInfo* info = wals.find_language(p.language);
    if (info == nullptr)
      throw DataError("language '" + p.language + "' has embeddings but no WALS entry");
    (info->family == family ? out.second : out.first).push_back(p);
  }
  if (out.second.empty())
    throw DataError("family '" + family + "' has no language in the evaluation pool of '" +
                    dataset.feature_id + "'");
  if (out.first.empty())
    throw DataError("family '" + family + "' covers the whole evaluation pool of '" +
                    dataset.feature_id + "'");
  return out;
}

std::string split_mode_name(SplitMode mode) {
  switch (mode) {
    case SplitMode::Random: return "random";
    case SplitMode::UnseenFamily: return "unseen_family";
    case SplitMode::AllFeatures: return "all_features";
  }
  throw std::logic_error("unhandled split mode");
}

SplitMode parse_split_mode(const std::string& name) {
  if (name == "random") return SplitMode::Random;
  if (name == "unseen_family") return SplitMode::UnseenFamily;
  if (name == "all_features") return SplitMode::AllFeatures;
  throw ConfigError("unknown split mode '" + name + "' (random, unseen_family, all_features)");
}

namespace {

Scalar mean_over(const std::vector<FeatureEval>& features, bool include_single_class,
                 Scalar FeatureEval::* field) {
  Scalar total = 0.0;
  std::size_t n = 0;
  for (const FeatureEval& f : features) {
    if (!include_single_class && f.single_class) continue;
    total += f.*field;
    ++n;
  }
  if (n == 0) throw DataError("no features left to average");
  return total / static_cast<Scalar>(n);
}

}  // namespace

Scalar EvalResult::mean_accuracy(bool include_single_class) const {
  return mean_over(features, include_single_class, &FeatureEval::knn_accuracy);
}

Scalar EvalResult::mean_baseline(bool include_single_class) const {
  return mean_over(features, include_single_class, &FeatureEval::baseline_accuracy);
}

std::vector<std::string> EvalResult::knn_predictions() const {
  std::vector<std::string> out;
  for (const FeatureEval& f : features)
    for (const Prediction& p : f.predictions) out.push_back(p.knn);
  return out;
}

std::vector<std::string> EvalResult::baseline_predictions() const {
  std::vector<std::string> out;
  for (const FeatureEval& f : features)
    for (const Prediction& p : f.predictions) out.push_back(p.baseline);
  return out;
}

std::vector<std::string> EvalResult::gold_values() const {
  std::vector<std::string> out;
  for (const FeatureEval& f : features)
    for (const Prediction& p : f.predictions) out.push_back(p.gold);
  return out;
}

namespace {

/// Scores one train/test division, appending one Prediction per test point.
void score_split(const std::vector<LabeledPoint>& train, const std::vector<LabeledPoint>& test,
                 int k, Metric metric, std::vector<Prediction>& out) {
  std::vector<std::string> train_values;
  train_values.reserve(train.size());
  for (const LabeledPoint& p : train) train_values.push_back(p.value);
  const std::string guess = modal_value(train_values);
  for (const LabeledPoint& p : test)
    out.push_back(Prediction{p.language, p.value, knn_predict(train, p.embedding, k, metric),
                             guess});
}

}  // namespace

EvalResult evaluate(const langspace::EmbeddingFrame& embeddings, const corpora::WalsTable& wals,
                    const std::vector<std::string>& feature_ids, const SplitSpec& split,
                    int k, Metric metric) {
  if (feature_ids.empty()) throw DataError("no features requested");
  if (split.mode == SplitMode::Random) {
    if (split.folds < 2) throw ConfigError("random mode needs at least 2 folds");
  } else if (split.held_out_family.empty()) {
    throw ConfigError("family modes need a held-out family");
  }

  EvalResult result;
  for (const std::string& fid : feature_ids) {
    FeatureDataset ds = make_feature_dataset(embeddings, wals, fid);
    if (ds.points.size() < 2) continue;

    FeatureEval fe;
    fe.feature_id = fid;
    fe.n_languages = static_cast<Index>(ds.points.size());
    std::set<std::string> classes;
    for (const LabeledPoint& p : ds.points) classes.insert(p.value);
    fe.single_class = classes.size() == 1;

    if (split.mode == SplitMode::Random) {
      std::vector<std::string> codes;
      codes.reserve(ds.points.size());
      for (const LabeledPoint& p : ds.points) codes.push_back(p.language);
      const Index folds = std::min<Index>(split.folds, fe.n_languages);
      for (const std::vector<std::string>& held_out : make_folds(codes, folds, split.seed)) {
        std::vector<LabeledPoint> train, test;
        for (const LabeledPoint& p : ds.points)
          (std::binary_search(held_out.begin(), held_out.end(), p.language) ? test : train)
              .push_back(p);
        score_split(train, test, k, metric, fe.predictions);
      }
    } else {
      try {
        auto [train, test] = unseen_family_split(ds, wals, split.held_out_family);
        score_split(train, test, k, metric, fe.predictions);
      } catch (const DataError&) {
        continue;  // the family never codes this feature, or covers its whole pool
      }
    }

    std::size_t knn_hits = 0;
    std::size_t baseline_hits = 0;
    for (const Prediction& p : fe.predictions) {
      if (p.knn == p.gold) ++knn_hits;
      if (p.baseline == p.gold) ++baseline_hits;
    }
    fe.knn_accuracy = static_cast<Scalar>(knn_hits) / static_cast<Scalar>(fe.predictions.size());
    fe.baseline_accuracy =
        static_cast<Scalar>(baseline_hits) / static_cast<Scalar>(fe.predictions.size());
    result.features.push_back(std::move(fe));
  }

  if (result.features.empty())
    throw DataError("no evaluable features: every requested feature lacks a usable pool");
  return result;
}

std::string to_tsv(const EvalResult& result) {
  std::string out = "feature_id\taccuracy\tbaseline\tn_languages\n";
  for (const FeatureEval& f : result.features)
    out += f.feature_id + "\t" + format_g17(f.knn_accuracy) + "\t" +
           format_g17(f.baseline_accuracy) + "\t" + std::to_string(f.n_languages) + "\n";
  return out;
}

Scalar significance(const std::vector<std::string>& predictions_a,
                    const std::vector<std::string>& predictions_b,
                    const std::vector<std::string>& gold, Index trials, std::uint64_t seed) {
  if (predictions_a.size() != predictions_b.size() || predictions_a.size() != gold.size())
    throw std::invalid_argument("prediction and gold vectors must have equal length");
  if (predictions_a.empty()) throw std::invalid_argument("nothing to compare");
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");

  const std::size_t n = gold.size();
  std::vector<char> a_hit(n), b_hit(n);
  for (std::size_t i = 0; i < n; ++i) {
    a_hit[i] = predictions_a[i] == gold[i];
    b_hit[i] = predictions_b[i] == gold[i];
  }
  auto diff_of = [&](const std::vector<char>& a, const std::vector<char>& b) {
    int delta = 0;
    for (std::size_t i = 0; i < n; ++i) delta += static_cast<int>(a[i]) - static_cast<int>(b[i]);
    return std::abs(static_cast<Scalar>(delta)) / static_cast<Scalar>(n);
  };
  const Scalar observed = diff_of(a_hit, b_hit);

  std::mt19937_64 rng(seed);
  Index at_least = 0;
  std::vector<char> a_trial(n), b_trial(n);
  for (Index t = 0; t < trials; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const bool swap = (rng() & 1ull) != 0;
      a_trial[i] = swap ? b_hit[i] : a_hit[i];
      b_trial[i] = swap ? a_hit[i] : b_hit[i];
    }
    if (diff_of(a_trial, b_trial) >= observed - 1e-12) ++at_least;
  }
  return static_cast<Scalar>(at_least + 1) / static_cast<Scalar>(trials + 1);
}

}  // namespace langlab::typology
