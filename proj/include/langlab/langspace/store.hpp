#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "langlab/core/types.hpp"
#include "langlab/nn/parameters.hpp"
#include "langlab/nn/tensor.hpp"

namespace langlab::langspace {

/// Immutable view of an embedding table: sorted language codes with one
/// matrix row each. The common currency of snapshotting and analysis.
struct EmbeddingFrame {
  std::vector<std::string> codes;  // sorted, unique
  Mat vectors;                     // codes.size() rows

  Index dimension() const { return vectors.cols(); }
  bool has(const std::string& code) const;
  Index row_of(const std::string& code) const;  // throws on absent code
  Vec vector_of(const std::string& code) const;

  bool operator==(const EmbeddingFrame& other) const {
    return codes == other.codes && vectors.rows() == other.vectors.rows() &&
           vectors.cols() == other.vectors.cols() && (vectors.array() == other.vectors.array()).all();
  }
};

/// The live language-embedding table every task model conditions on. One row
/// per language, fixed dimension; lookups of absent languages throw rather
/// than inventing vectors.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;

  /// Reads the embedding file format: first line `d=<dim>`, then one line
  /// `code v1 ... vd` per language.
  static EmbeddingStore load_pretrained(const std::string& path);
  /// Gaussian(0, 0.1) vectors for the given codes, deterministic per seed.
  static EmbeddingStore init_random(const std::vector<std::string>& codes, Index dimension,
                                    std::uint64_t seed);

  Index dimension() const { return dimension_; }
  std::size_t size() const { return codes_.size(); }
  bool has(const std::string& code) const;
  const std::vector<std::string>& codes() const { return codes_; }

  Index row_of(const std::string& code) const;  // throws on absent code
  Vec vector_of(const std::string& code) const;

  /// The [n x d] table tensor models index with embed_lookup.
  const nn::Tensor& table() const { return table_; }
  bool trainable() const;

  /// Adds Gaussian(0, 0.1) rows for any codes not yet present (task languages
  /// outside the pretrained inventory). Must precede attach().
  void ensure_languages(const std::vector<std::string>& codes, std::uint64_t seed);

  /// Turns the table into a trainable, row-sparsely updated parameter.
  void attach(nn::ParameterSet& params, const std::string& name = "language_embeddings");

  void save(const std::string& path) const;

  /// Deep copy of the current values.
  EmbeddingFrame frame() const;

 private:
  Index dimension_ = 0;
  std::vector<std::string> codes_;  // sorted; row k of the table is codes_[k]
  nn::Tensor table_;
};

/// Frozen copies of the embedding table along a training run, keyed by a
/// strictly increasing iteration index; index 0 is the pre-training state.
class SnapshotSeries {
 public:
  void record(Index iteration, EmbeddingFrame frame);
  void record(Index iteration, const EmbeddingStore& store) { record(iteration, store.frame()); }

  std::size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  const std::vector<Index>& iterations() const { return iterations_; }
  Index iteration_at(std::size_t k) const { return iterations_.at(k); }
  const EmbeddingFrame& frame_at(std::size_t k) const { return frames_.at(k); }

 private:
  std::vector<Index> iterations_;
  std::vector<EmbeddingFrame> frames_;
};

/// Cosine similarity of two languages across every snapshot, in iteration order.
std::vector<std::pair<Index, Scalar>> trajectory(const SnapshotSeries& series,
                                                 const std::string& lang_a,
                                                 const std::string& lang_b);

}  // namespace langlab::langspace
