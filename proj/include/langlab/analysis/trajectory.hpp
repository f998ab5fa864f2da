#pragma once

#include <string>
#include <vector>

#include "langlab/langspace/store.hpp"
#include "langlab/typology/eval.hpp"

namespace langlab::analysis {

struct TrajectoryPoint {
  Index iteration = 0;
  Scalar knn_accuracy = 0.0;
  Scalar baseline_accuracy = 0.0;

  bool operator==(const TrajectoryPoint&) const = default;
};

/// One feature's prediction accuracy across a run's embedding snapshots.
struct FeatureAccuracyTrajectory {
  std::string feature_id;
  std::vector<TrajectoryPoint> points;  // one per snapshot, in recording order
};

/// Evaluates the feature at every snapshot of the series under one fixed
/// fold assignment (the split's seed and the unchanging language pool pin
/// the folds), so the curve isolates embedding movement.
FeatureAccuracyTrajectory accuracy_trajectory(const langspace::SnapshotSeries& series,
                                              const corpora::WalsTable& wals,
                                              const std::string& feature_id,
                                              const typology::SplitSpec& split, int k = 1,
                                              typology::Metric metric = typology::Metric::Euclidean);

/// TSV with header: iteration, accuracy, baseline.
std::string to_tsv(const FeatureAccuracyTrajectory& trajectory);

struct RankedFeature {
  std::string feature_id;
  std::string chapter;
  Scalar accuracy = 0.0;

  bool operator==(const RankedFeature&) const = default;
};

/// Best and worst `n` features by accuracy (descending, ties on feature id),
/// labeled with their WALS chapters. Needs at least 2n evaluated features.
struct FeatureRanking {
  std::vector<RankedFeature> top;
  std::vector<RankedFeature> bottom;  // the n lowest, still sorted descending
};

FeatureRanking rank_features(const typology::EvalResult& result,
                             const corpora::WalsTable& wals, Index n);

/// TSV rows "feature_id<TAB>chapter<TAB>accuracy%" with two decimals,
/// top block first, then a blank line, then the bottom block.
std::string to_tsv(const FeatureRanking& ranking);

}  // namespace langlab::analysis
