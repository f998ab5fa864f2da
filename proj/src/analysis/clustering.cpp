#include "langlab/analysis/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <utility>

#include "langlab/core/errors.hpp"
#include "langlab/core/text.hpp"
#include "langlab/langspace/similarity.hpp"

namespace langlab::analysis {

void validate_distance_matrix(const DistanceMatrix& d) {
  const Index n = static_cast<Index>(d.languages.size());
  if (n == 0) throw std::invalid_argument("distance matrix without languages");
  if (d.distances.rows() != n || d.distances.cols() != n)
    throw std::invalid_argument("distance matrix is " + std::to_string(d.distances.rows()) + "x" +
                                std::to_string(d.distances.cols()) + " for " + std::to_string(n) +
                                " languages");
  std::set<std::string> unique;
  for (const std::string& code : d.languages) {
    if (code.empty()) throw std::invalid_argument("empty language code in distance matrix");
    if (!unique.insert(code).second)
      throw std::invalid_argument("duplicate language '" + code + "' in distance matrix");
  }
  for (Index i = 0; i < n; ++i) {
    if (std::abs(d.distances(i, i)) > 1e-12)
      throw std::invalid_argument("non-zero self-distance for '" + d.languages[i] + "'");
    for (Index j = 0; j < n; ++j) {
      if (!(d.distances(i, j) >= 0.0))
        throw std::invalid_argument("negative or non-finite distance between '" +
                                    d.languages[i] + "' and '" + d.languages[j] + "'");
      if (std::abs(d.distances(i, j) - d.distances(j, i)) > 1e-12)
        throw std::invalid_argument("asymmetric distances between '" + d.languages[i] +
                                    "' and '" + d.languages[j] + "'");
    }
  }
}

DistanceMatrix embedding_distance_matrix(const langspace::EmbeddingFrame& embeddings,
                                         const std::vector<std::string>& languages) {
  if (languages.empty()) throw std::invalid_argument("no languages to compare");
  for (const std::string& code : languages)
    if (!embeddings.has(code)) throw DataError("no embedding for language '" + code + "'");

  DistanceMatrix out;
  out.languages = languages;
  const Index n = static_cast<Index>(languages.size());
  out.distances = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const Vec vi = embeddings.vector_of(languages[static_cast<std::size_t>(i)]);
    for (Index j = i + 1; j < n; ++j) {
      const Scalar dist =
          langspace::cosine_distance(vi, embeddings.vector_of(languages[static_cast<std::size_t>(j)]));
      out.distances(i, j) = dist;
      out.distances(j, i) = dist;
    }
  }
  validate_distance_matrix(out);
  return out;
}

std::vector<std::string> Dendrogram::leaves() const {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(leaf_count));
  for (int i = 0; i < leaf_count; ++i) out.push_back(nodes[static_cast<std::size_t>(i)].label);
  return out;
}

bool is_ultrametric(const Dendrogram& tree, Scalar tol) {
  for (const DendrogramNode& node : tree.nodes) {
    if (node.is_leaf()) continue;
    if (tree.nodes[static_cast<std::size_t>(node.left)].height > node.height + tol) return false;
    if (tree.nodes[static_cast<std::size_t>(node.right)].height > node.height + tol) return false;
  }
  return true;
}

Dendrogram upgma(const DistanceMatrix& d) {
  validate_distance_matrix(d);
  const std::size_t n = d.languages.size();
  if (n < 2) throw std::invalid_argument("clustering needs at least two languages");

  Dendrogram tree;
  tree.leaf_count = static_cast<int>(n);
  for (const std::string& code : d.languages)
    tree.nodes.push_back(DendrogramNode{code, 0.0, -1, -1});

  struct Cluster {
    int node;
    std::vector<Index> members;  // leaf indices into the original matrix
    std::string label;           // lexicographically smallest leaf code
  };
  std::vector<Cluster> active;
  for (std::size_t i = 0; i < n; ++i)
    active.push_back(Cluster{static_cast<int>(i), {static_cast<Index>(i)}, d.languages[i]});

  // unweighted linkage: mean distance over all cross pairs of original leaves
  auto linkage = [&d](const Cluster& a, const Cluster& b) {
    Scalar total = 0.0;
    for (Index la : a.members)
      for (Index lb : b.members) total += d.distances(la, lb);
    return total / static_cast<Scalar>(a.members.size() * b.members.size());
  };

  while (active.size() > 1) {
    std::size_t bi = 0;
    std::size_t bj = 1;
    Scalar best = 0.0;
    std::pair<std::string, std::string> best_pair;
    bool have = false;
    for (std::size_t i = 0; i < active.size(); ++i)
      for (std::size_t j = i + 1; j < active.size(); ++j) {
        const Scalar dist = linkage(active[i], active[j]);
        std::pair<std::string, std::string> pair = std::minmax(active[i].label, active[j].label);
        if (!have || dist < best || (dist == best && pair < best_pair)) {
          have = true;
          best = dist;
          best_pair = pair;
          bi = i;
          bj = j;
        }
      }

    Cluster& a = active[bi];
    Cluster& b = active[bj];
    const bool a_first = a.label < b.label;
    DendrogramNode node;
    node.height = best / 2.0;
    node.left = a_first ? a.node : b.node;
    node.right = a_first ? b.node : a.node;

    Cluster merged;
    merged.node = static_cast<int>(tree.nodes.size());
    merged.members = a.members;
    merged.members.insert(merged.members.end(), b.members.begin(), b.members.end());
    merged.label = std::min(a.label, b.label);
    tree.nodes.push_back(node);

    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bi));
    active.push_back(std::move(merged));
  }
  return tree;
}

namespace {

std::string newick_of(const Dendrogram& tree, int idx, Scalar parent_height) {
  const DendrogramNode& node = tree.nodes[static_cast<std::size_t>(idx)];
  std::string body = node.is_leaf()
                         ? node.label
                         : "(" + newick_of(tree, node.left, node.height) + "," +
                               newick_of(tree, node.right, node.height) + ")";
  return body + ":" + format_g17(parent_height - node.height);
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

}  // namespace

std::string to_newick(const Dendrogram& tree) {
  const DendrogramNode& r = tree.root();
  return "(" + newick_of(tree, r.left, r.height) + "," + newick_of(tree, r.right, r.height) +
         ");";
}

std::string render_dendrogram_svg(const Dendrogram& tree) {
  constexpr Scalar kLabelCol = 100.0;   // x of height zero, after the label column
  constexpr Scalar kPxPerHeight = 80.0; // fixed scale keeps offsets linear in height
  constexpr Scalar kRowH = 24.0;
  constexpr Scalar kMargin = 20.0;

  const Scalar width = kLabelCol + tree.root().height * kPxPerHeight + kMargin;
  const Scalar height = 2.0 * kMargin + static_cast<Scalar>(tree.leaf_count) * kRowH;

  std::string body;
  int next_slot = 0;
  auto x_of = [&](const DendrogramNode& node) { return kLabelCol + node.height * kPxPerHeight; };
  auto line = [&](const char* cls, Scalar x1, Scalar y1, Scalar x2, Scalar y2) {
    body += "  <line class=\"" + std::string(cls) + "\" x1=\"" + format_g17(x1) + "\" y1=\"" +
            format_g17(y1) + "\" x2=\"" + format_g17(x2) + "\" y2=\"" + format_g17(y2) +
            "\" stroke=\"black\"/>\n";
  };

  // returns the node's vertical position; emits its subtree's segments
  auto place = [&](auto&& self, int idx) -> Scalar {
    const DendrogramNode& node = tree.nodes[static_cast<std::size_t>(idx)];
    if (node.is_leaf()) {
      const Scalar y = kMargin + (static_cast<Scalar>(next_slot++) + 0.5) * kRowH;
      body += "  <text x=\"" + format_g17(kLabelCol - 6.0) + "\" y=\"" + format_g17(y + 4.0) +
              "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"12\">" +
              xml_escape(node.label) + "</text>\n";
      return y;
    }
    const Scalar yl = self(self, node.left);
    const Scalar yr = self(self, node.right);
    const Scalar x = x_of(node);
    const DendrogramNode& left = tree.nodes[static_cast<std::size_t>(node.left)];
    const DendrogramNode& right = tree.nodes[static_cast<std::size_t>(node.right)];
    line(left.is_leaf() ? "leaf" : "branch", x_of(left), yl, x, yl);
    line(right.is_leaf() ? "leaf" : "branch", x_of(right), yr, x, yr);
    line("merge", x, yl, x, yr);
    return (yl + yr) / 2.0;
  };
  place(place, static_cast<int>(tree.nodes.size()) - 1);

  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_g17(width) +
         "\" height=\"" + format_g17(height) + "\" viewBox=\"0 0 " + format_g17(width) + " " +
         format_g17(height) + "\">\n" + body + "</svg>\n";
}

}  // namespace langlab::analysis
