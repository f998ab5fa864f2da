#include "langlab/analysis/trajectory.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "langlab/core/errors.hpp"
#include "langlab/core/text.hpp"

namespace langlab::analysis {

FeatureAccuracyTrajectory accuracy_trajectory(const langspace::SnapshotSeries& series,
                                              const corpora::WalsTable& wals,
                                              const std::string& feature_id,
                                              const typology::SplitSpec& split, int k,
                                              typology::Metric metric) {
  if (series.empty()) throw DataError("trajectory needs at least one snapshot");
  FeatureAccuracyTrajectory out;
  out.feature_id = feature_id;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const typology::EvalResult result =
        typology::evaluate(series.frame_at(s), wals, {feature_id}, split, k, metric);
    const typology::FeatureEval& fe = result.features.front();
    out.points.push_back(TrajectoryPoint{series.iteration_at(s), fe.knn_accuracy,
                                         fe.baseline_accuracy});
  }
  return out;
}

std::string to_tsv(const FeatureAccuracyTrajectory& trajectory) {
  std::string out = "iteration\taccuracy\tbaseline\n";
  for (const TrajectoryPoint& p : trajectory.points)
    out += std::to_string(p.iteration) + "\t" + format_g17(p.knn_accuracy) + "\t" +
           format_g17(p.baseline_accuracy) + "\n";
  return out;
}

FeatureRanking rank_features(const typology::EvalResult& result,
                             const corpora::WalsTable& wals, Index n) {
  if (n < 1) throw std::invalid_argument("ranking size must be at least 1");
  if (static_cast<Index>(result.features.size()) < 2 * n)
    throw std::invalid_argument("ranking " + std::to_string(n) + " from each end needs at least " +
                                std::to_string(2 * n) + " features, have " +
                                std::to_string(result.features.size()));

  std::vector<RankedFeature> all;
  all.reserve(result.features.size());
  for (const typology::FeatureEval& fe : result.features) {
    const corpora::WalsFeature* feature = wals.find_feature(fe.feature_id);
    if (feature == nullptr)
      throw DataError("feature '" + fe.feature_id + "' is not in the WALS catalog");
    all.push_back(RankedFeature{fe.feature_id, feature->chapter, fe.knn_accuracy});
  }
  std::sort(all.begin(), all.end(), [](const RankedFeature& a, const RankedFeature& b) {
    if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
    return a.feature_id < b.feature_id;
  });

  FeatureRanking out;
  out.top.assign(all.begin(), all.begin() + n);
  out.bottom.assign(all.end() - n, all.end());
  return out;
}

std::string to_tsv(const FeatureRanking& ranking) {
  auto row = [](const RankedFeature& f) {
    char pct[32];
    std::snprintf(pct, sizeof pct, "%.2f", f.accuracy * 100.0);
    return f.feature_id + "\t" + f.chapter + "\t" + pct + "\n";
  };
  std::string out = "feature_id\tchapter\taccuracy\n";
  for (const RankedFeature& f : ranking.top) out += row(f);
  out += "\n";
  for (const RankedFeature& f : ranking.bottom) out += row(f);
  return out;
}

}  // namespace langlab::analysis
