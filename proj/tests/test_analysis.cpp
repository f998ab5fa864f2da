#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "langlab/analysis/clustering.hpp"
#include "langlab/analysis/trajectory.hpp"
#include "langlab/core/errors.hpp"
#include "langlab/core/text.hpp"

using namespace langlab;
using namespace langlab::analysis;
using corpora::LanguageInfo;
using corpora::WalsFeature;
using corpora::WalsTable;
using langspace::EmbeddingFrame;
using langspace::SnapshotSeries;

namespace {

EmbeddingFrame frame_of(std::vector<std::pair<std::string, Vec>> rows) {
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  EmbeddingFrame f;
  f.vectors.resize(static_cast<Index>(rows.size()), rows.front().second.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    f.codes.push_back(rows[i].first);
    f.vectors.row(static_cast<Index>(i)) = rows[i].second;
  }
  return f;
}

Vec vec2(Scalar a, Scalar b) {
  Vec v(2);
  v << a, b;
  return v;
}

DistanceMatrix make_dm(std::vector<std::string> codes,
                       const std::vector<std::vector<Scalar>>& entries) {
  DistanceMatrix d;
  d.languages = std::move(codes);
  const Index n = static_cast<Index>(d.languages.size());
  d.distances.resize(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      d.distances(i, j) = entries[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return d;
}

/// Minimal well-formedness scan: every open tag is closed in LIFO order and
/// nothing outside a tag contains a stray '<'.
bool xml_well_formed(const std::string& text) {
  std::vector<std::string> stack;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find('<', pos);
    if (open == std::string::npos) break;
    const std::size_t close = text.find('>', open);
    if (close == std::string::npos) return false;
    std::string tag = text.substr(open + 1, close - open - 1);
    if (tag.find('<') != std::string::npos) return false;
    if (!tag.empty() && tag.front() == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
    } else if (!tag.empty() && tag.back() != '/') {
      stack.push_back(tag.substr(0, tag.find_first_of(" \t\n")));
    }
    pos = close + 1;
  }
  return stack.empty();
}

/// Values of `attr` on every <line> whose class is `cls`.
std::vector<Scalar> line_attr(const std::string& svg, const std::string& cls,
                              const std::string& attr) {
  std::vector<Scalar> out;
  const std::string marker = "class=\"" + cls + "\"";
  std::size_t pos = 0;
  while ((pos = svg.find(marker, pos)) != std::string::npos) {
    const std::size_t end = svg.find('\n', pos);
    const std::size_t at = svg.find(attr + "=\"", pos);
    REQUIRE(at != std::string::npos);
    REQUIRE(at < end);
    const std::size_t start = at + attr.size() + 2;
    out.push_back(std::stod(svg.substr(start, svg.find('"', start) - start)));
    pos = end;
  }
  return out;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("embedding distances are one minus cosine") {
  auto same = frame_of({{"aa", vec2(1, 2)}, {"bb", vec2(2, 4)}, {"cc", vec2(0.5, 1)}});
  auto d0 = embedding_distance_matrix(same, {"aa", "bb", "cc"});
  CHECK(d0.distances.isZero(1e-15));  // colinear vectors everywhere

  auto ortho = frame_of({{"aa", vec2(1, 0)}, {"bb", vec2(0, 3)}});
  auto d1 = embedding_distance_matrix(ortho, {"aa", "bb"});
  CHECK(d1.distances(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(d1.distances(1, 0) == d1.distances(0, 1));
  CHECK(d1.distances(0, 0) == 0.0);

  // hand computation: cos((1,0),(1,1)) = 1/sqrt(2)
  auto three = frame_of({{"aa", vec2(1, 0)}, {"bb", vec2(0, 1)}, {"cc", vec2(1, 1)}});
  auto d2 = embedding_distance_matrix(three, {"aa", "bb", "cc"});
  CHECK(d2.distances(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(d2.distances(0, 2) == doctest::Approx(0.29289321881345254).epsilon(1e-14));
  CHECK(d2.distances(1, 2) == doctest::Approx(0.29289321881345254).epsilon(1e-14));
  CHECK_NOTHROW(validate_distance_matrix(d2));

  CHECK_THROWS_AS(embedding_distance_matrix(ortho, {"aa", "zz"}), DataError);
  CHECK_THROWS_AS(embedding_distance_matrix(ortho, {}), std::invalid_argument);
}

TEST_CASE("distance matrix invariants are enforced") {
  auto good = make_dm({"aa", "bb"}, {{0, 2}, {2, 0}});
  CHECK_NOTHROW(validate_distance_matrix(good));

  auto asym = good;
  asym.distances(0, 1) = 2.1;
  CHECK_THROWS_AS(validate_distance_matrix(asym), std::invalid_argument);

  auto diag = good;
  diag.distances(1, 1) = 0.5;
  CHECK_THROWS_AS(validate_distance_matrix(diag), std::invalid_argument);

  auto negative = make_dm({"aa", "bb"}, {{0, -1}, {-1, 0}});
  CHECK_THROWS_AS(validate_distance_matrix(negative), std::invalid_argument);

  auto mismatched = good;
  mismatched.languages.push_back("cc");
  CHECK_THROWS_AS(validate_distance_matrix(mismatched), std::invalid_argument);

  auto dupes = good;
  dupes.languages[1] = "aa";
  CHECK_THROWS_AS(validate_distance_matrix(dupes), std::invalid_argument);

  CHECK_THROWS_AS(upgma(asym), std::invalid_argument);
}

TEST_CASE("two languages merge once at half their distance") {
  auto tree = upgma(make_dm({"aa", "bb"}, {{0, 2}, {2, 0}}));
  REQUIRE(tree.nodes.size() == 3);
  CHECK(tree.leaf_count == 2);
  CHECK(tree.root().height == 1.0);
  CHECK(tree.nodes[static_cast<std::size_t>(tree.root().left)].label == "aa");
  CHECK(tree.nodes[static_cast<std::size_t>(tree.root().right)].label == "bb");
  CHECK(to_newick(tree) == "(aa:1,bb:1);");
  CHECK(is_ultrametric(tree));
  CHECK(tree.leaves() == std::vector<std::string>{"aa", "bb"});

  CHECK_THROWS_AS(upgma(make_dm({"aa"}, {{0}})), std::invalid_argument);
}

TEST_CASE("three-leaf clustering follows the hand trace") {
  // d(aa,bb)=2, d(aa,cc)=d(bb,cc)=6: merge {aa,bb} at 1, then the root at
  // average(6,6)/2 = 3
  auto tree = upgma(make_dm({"aa", "bb", "cc"}, {{0, 2, 6}, {2, 0, 6}, {6, 6, 0}}));
  REQUIRE(tree.nodes.size() == 5);
  const DendrogramNode& first = tree.nodes[3];
  CHECK(first.height == 1.0);
  CHECK(tree.nodes[static_cast<std::size_t>(first.left)].label == "aa");
  CHECK(tree.nodes[static_cast<std::size_t>(first.right)].label == "bb");
  CHECK(tree.root().height == 3.0);
  CHECK(to_newick(tree) == "((aa:1,bb:1):2,cc:3);");
  CHECK(is_ultrametric(tree));
}

TEST_CASE("four-leaf clustering averages cross-pair distances") {
  // d(aa,bb)=2, d(cc,dd)=4, all cross pairs 10: heights 1, 2, 5
  auto tree = upgma(make_dm({"aa", "bb", "cc", "dd"}, {{0, 2, 10, 10},
                                                       {2, 0, 10, 10},
                                                       {10, 10, 0, 4},
                                                       {10, 10, 4, 0}}));
  REQUIRE(tree.nodes.size() == 7);
  CHECK(tree.nodes[4].height == 1.0);  // {aa,bb}
  CHECK(tree.nodes[5].height == 2.0);  // {cc,dd}
  CHECK(tree.nodes[6].height == 5.0);  // root
  CHECK(to_newick(tree) == "((aa:1,bb:1):4,(cc:2,dd:2):3);");
  CHECK(is_ultrametric(tree));
}

TEST_CASE("equal distances break ties on the smallest label pair") {
  auto tree = upgma(make_dm({"cc", "aa", "bb"}, {{0, 4, 4}, {4, 0, 4}, {4, 4, 0}}));
  const DendrogramNode& first = tree.nodes[3];
  CHECK(first.height == 2.0);
  CHECK(tree.nodes[static_cast<std::size_t>(first.left)].label == "aa");
  CHECK(tree.nodes[static_cast<std::size_t>(first.right)].label == "bb");
  CHECK(tree.root().height == 2.0);  // linkage is still 4 — flat tree
  CHECK(is_ultrametric(tree));
}

TEST_CASE("random matrices always yield ultrametric trees") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<Scalar> unif(0.1, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 3 + static_cast<Index>(rng() % 6);
    std::vector<std::string> codes;
    for (Index i = 0; i < n; ++i) codes.push_back("l" + std::to_string(i));
    Mat m = Mat::Zero(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) m(i, j) = m(j, i) = unif(rng);
    DistanceMatrix d{codes, m};
    auto tree = upgma(d);
    CHECK(is_ultrametric(tree));
    CHECK(tree.nodes.size() == static_cast<std::size_t>(2 * n - 1));
    auto leaves = tree.leaves();
    CHECK(std::set<std::string>(leaves.begin(), leaves.end()) ==
          std::set<std::string>(codes.begin(), codes.end()));
  }
}

TEST_CASE("dendrogram SVG is well-formed and to scale") {
  auto dm = make_dm({"aa", "bb", "cc"}, {{0, 2, 6}, {2, 0, 6}, {6, 6, 0}});
  auto tree = upgma(dm);
  const std::string svg = render_dendrogram_svg(tree);

  CHECK(svg.starts_with("<svg"));
  CHECK(xml_well_formed(svg));
  CHECK(svg.find(">aa</text>") != std::string::npos);
  CHECK(svg.find(">bb</text>") != std::string::npos);
  CHECK(svg.find(">cc</text>") != std::string::npos);
  CHECK(line_attr(svg, "merge", "x1").size() == 2);  // one junction per merge

  // two-leaf tree: both labels, exactly one junction
  const std::string small = render_dendrogram_svg(upgma(make_dm({"xx", "yy"}, {{0, 2}, {2, 0}})));
  CHECK(small.find(">xx</text>") != std::string::npos);
  CHECK(small.find(">yy</text>") != std::string::npos);
  CHECK(line_attr(small, "merge", "x1").size() == 1);
  CHECK(xml_well_formed(small));

  // doubling every distance doubles each junction's offset from height zero
  auto doubled_dm = dm;
  doubled_dm.distances *= 2.0;
  const std::string doubled = render_dendrogram_svg(upgma(doubled_dm));
  auto x = line_attr(svg, "merge", "x1");
  auto x2 = line_attr(doubled, "merge", "x1");
  auto leaf_x = line_attr(svg, "leaf", "x1");
  REQUIRE(!leaf_x.empty());
  const Scalar x0 = leaf_x.front();  // leaf stems start at height zero
  for (Scalar v : leaf_x) CHECK(v == x0);
  std::sort(x.begin(), x.end());
  std::sort(x2.begin(), x2.end());
  REQUIRE(x.size() == x2.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(x2[i] - x0 == doctest::Approx(2.0 * (x[i] - x0)).epsilon(1e-12));
}

namespace {

/// 24 languages, one binary feature encoded in dimension 0 with the given
/// separation and N(0, 0.05) noise elsewhere.
EmbeddingFrame planted_frame(Scalar separation, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<Scalar> noise(0.0, 0.05);
  std::vector<std::pair<std::string, Vec>> rows;
  for (int i = 0; i < 24; ++i) {
    Vec e(6);
    for (Index j = 0; j < 6; ++j) e[j] = noise(rng);
    if (i % 2 == 1) e[0] += separation;
    rows.emplace_back((i < 10 ? "p0" : "p") + std::to_string(i), e);
  }
  return frame_of(std::move(rows));
}

WalsTable planted_wals() {
  std::vector<LanguageInfo> langs;
  std::map<std::pair<std::string, std::string>, std::string> values;
  for (int i = 0; i < 24; ++i) {
    std::string code = (i < 10 ? "p0" : "p") + std::to_string(i);
    langs.push_back(LanguageInfo{code, code, "F" + std::to_string(i % 4), "g"});
    values[{code, "1A"}] = i % 2 == 1 ? "large" : "small";
  }
  return WalsTable(std::move(langs), {{"1A", "Planted", "Phonology"}}, std::move(values));
}

}  // namespace

TEST_CASE("frozen embeddings give a flat trajectory") {
  auto frame = planted_frame(1.0, 3);
  SnapshotSeries series;
  series.record(0, frame);
  series.record(50, frame);
  series.record(100, frame);

  typology::SplitSpec split;
  split.seed = 4;
  auto traj = accuracy_trajectory(series, planted_wals(), "1A", split);
  CHECK(traj.feature_id == "1A");
  REQUIRE(traj.points.size() == 3);
  CHECK(traj.points[0].iteration == 0);
  CHECK(traj.points[1].iteration == 50);
  CHECK(traj.points[2].iteration == 100);
  for (const auto& p : traj.points) {
    CHECK(p.knn_accuracy == traj.points[0].knn_accuracy);
    CHECK(p.baseline_accuracy == traj.points[0].baseline_accuracy);
    CHECK(p.knn_accuracy >= 0.0);
    CHECK(p.knn_accuracy <= 1.0);
  }

  // bit-for-bit reproducible from the same immutable series
  auto again = accuracy_trajectory(series, planted_wals(), "1A", split);
  CHECK(again.points == traj.points);

  CHECK_THROWS_AS(accuracy_trajectory(SnapshotSeries{}, planted_wals(), "1A", split), DataError);
}

TEST_CASE("a sharpening signal yields a non-decreasing trajectory") {
  // the class separation in dimension 0 grows across snapshots while the
  // fold assignment stays fixed, so accuracy can only move with the signal
  SnapshotSeries series;
  Index iter = 0;
  for (Scalar sep : {0.0, 0.8, 1.6, 2.4}) {
    series.record(iter, planted_frame(sep, 21));  // same noise draw every time
    iter += 50;
  }
  typology::SplitSpec split;
  split.seed = 8;
  auto traj = accuracy_trajectory(series, planted_wals(), "1A", split);
  REQUIRE(traj.points.size() == 4);
  for (std::size_t i = 1; i < traj.points.size(); ++i)
    CHECK(traj.points[i].knn_accuracy >= traj.points[i - 1].knn_accuracy);
  CHECK(traj.points.back().knn_accuracy >= 0.9);  // fully separated by the end
  for (std::size_t i = 1; i < traj.points.size(); ++i)
    CHECK(traj.points[i].baseline_accuracy == traj.points[0].baseline_accuracy);
}

TEST_CASE("trajectories serialize as TSV") {
  FeatureAccuracyTrajectory traj;
  traj.feature_id = "1A";
  traj.points.push_back(TrajectoryPoint{0, 0.5, 0.25});
  traj.points.push_back(TrajectoryPoint{50, 0.75, 0.25});
  CHECK(to_tsv(traj) == "iteration\taccuracy\tbaseline\n0\t0.5\t0.25\n50\t0.75\t0.25\n");
}

TEST_CASE("feature ranking slices both ends of the accuracy ordering") {
  WalsTable wals({{"zz", "Z", "F", "g"}},
                 {{"1A", "One", "Phonology"},
                  {"2A", "Two", "Morphology"},
                  {"3A", "Three", "Word Order"},
                  {"4A", "Four", "Phonology"}},
                 {});
  typology::EvalResult result;
  result.features.push_back(typology::FeatureEval{"1A", 9, false, 0.9, 0.5, {}});
  result.features.push_back(typology::FeatureEval{"2A", 9, false, 0.5, 0.5, {}});
  result.features.push_back(typology::FeatureEval{"3A", 9, false, 0.1, 0.5, {}});

  auto ranked = rank_features(result, wals, 1);
  REQUIRE(ranked.top.size() == 1);
  REQUIRE(ranked.bottom.size() == 1);
  CHECK(ranked.top[0] == RankedFeature{"1A", "Phonology", 0.9});
  CHECK(ranked.bottom[0] == RankedFeature{"3A", "Word Order", 0.1});

  CHECK_THROWS_AS(rank_features(result, wals, 2), std::invalid_argument);  // needs 4
  CHECK_THROWS_AS(rank_features(result, wals, 0), std::invalid_argument);

  // n = |features|/2 partitions the list; ties order by feature id
  result.features.push_back(typology::FeatureEval{"4A", 9, false, 0.5, 0.5, {}});
  auto half = rank_features(result, wals, 2);
  CHECK(half.top[0].feature_id == "1A");
  CHECK(half.top[1].feature_id == "2A");  // 0.5 tie: "2A" < "4A"
  CHECK(half.bottom[0].feature_id == "4A");
  CHECK(half.bottom[1].feature_id == "3A");
  std::set<std::string> ids;
  for (const auto& f : half.top) ids.insert(f.feature_id);
  for (const auto& f : half.bottom) ids.insert(f.feature_id);
  CHECK(ids.size() == 4);  // disjoint top and bottom

  typology::EvalResult unknown;
  unknown.features.push_back(typology::FeatureEval{"9Z", 3, false, 0.5, 0.5, {}});
  unknown.features.push_back(typology::FeatureEval{"1A", 3, false, 0.5, 0.5, {}});
  CHECK_THROWS_AS(rank_features(unknown, wals, 1), DataError);
}

TEST_CASE("rankings format accuracies as percentages") {
  WalsTable wals({{"zz", "Z", "F", "g"}},
                 {{"6A", "Uvulars", "Phonology"}, {"7A", "Glottalized", "Phonology"}}, {});
  typology::EvalResult result;
  result.features.push_back(typology::FeatureEval{"6A", 5, false, 0.8945, 0.5, {}});
  result.features.push_back(typology::FeatureEval{"7A", 5, false, 0.25, 0.5, {}});
  const std::string tsv = to_tsv(rank_features(result, wals, 1));
  CHECK(tsv.starts_with("feature_id\tchapter\taccuracy\n"));
  CHECK(tsv.find("6A\tPhonology\t89.45\n") != std::string::npos);
  CHECK(tsv.find("7A\tPhonology\t25.00\n") != std::string::npos);
}

}  // TEST_SUITE
