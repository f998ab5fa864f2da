#pragma once

#include <string>
#include <vector>

#include "langlab/langspace/store.hpp"

namespace langlab::analysis {

/// Pairwise dissimilarities over an ordered language list.
struct DistanceMatrix {
  std::vector<std::string> languages;
  Mat distances;  // square, symmetric, zero diagonal, non-negative
};

/// Rejects (std::invalid_argument) any violation: size mismatch, duplicate or
/// empty codes, negative entries, |diagonal| > 1e-12, asymmetry > 1e-12.
void validate_distance_matrix(const DistanceMatrix& d);

/// Cosine distances (1 - cosine similarity) between language embeddings.
DistanceMatrix embedding_distance_matrix(const langspace::EmbeddingFrame& embeddings,
                                         const std::vector<std::string>& languages);

/// One node of a merge tree: the first `leaf_count` nodes are the leaves (in
/// the distance matrix's language order), later nodes are merges in creation
/// order, the last node the root.
struct DendrogramNode {
  std::string label;      // leaf: language code; merge: empty
  Scalar height = 0.0;    // merge height; 0 for leaves
  int left = -1;          // child node indices; -1 for leaves
  int right = -1;

  bool is_leaf() const { return left < 0; }
};

struct Dendrogram {
  std::vector<DendrogramNode> nodes;
  int leaf_count = 0;

  const DendrogramNode& root() const { return nodes.back(); }
  /// Leaf labels in the order the input distance matrix listed them.
  std::vector<std::string> leaves() const;
};

/// Merge heights never decrease from any node to its parent (within tol).
bool is_ultrametric(const Dendrogram& tree, Scalar tol = 1e-12);

/// Average-linkage agglomerative clustering: repeatedly merge the two
/// clusters with the smallest mean cross-pair distance, at height distance/2.
/// Cluster labels (their lexicographically smallest leaf) break distance
/// ties and order each merge's children. Needs at least two languages.
Dendrogram upgma(const DistanceMatrix& d);

/// Newick text with branch lengths (parent height minus child height),
/// e.g. "((aa:1,bb:1):2,cc:3);".
std::string to_newick(const Dendrogram& tree);

/// Standalone SVG: leaf labels on the left, merges drawn rightward with a
/// fixed pixels-per-height scale, so junction offsets are linear in height.
/// Horizontal leaf stems carry class "leaf", merge connectors class "merge".
std::string render_dendrogram_svg(const Dendrogram& tree);

}  // namespace langlab::analysis
