#pragma once

#include <algorithm>
#include <stdexcept>

#include "langlab/core/types.hpp"

namespace langlab::langspace {

/// Cosine similarity between two vectors (any Eigen vector expressions).
/// Symmetric, scale-invariant, clamped into [-1, 1] against rounding.
template <typename DerivedA, typename DerivedB>
Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                         const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine_similarity: dimension mismatch");
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (na == 0.0 || nb == 0.0)
    throw std::invalid_argument("cosine_similarity: zero vector has no direction");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

/// Clustering distance: 1 - cosine, in [0, 2].
template <typename DerivedA, typename DerivedB>
Scalar cosine_distance(const Eigen::MatrixBase<DerivedA>& a,
                       const Eigen::MatrixBase<DerivedB>& b) {
  return 1.0 - cosine_similarity(a, b);
}

}  // namespace langlab::langspace
