#include "langlab/langspace/store.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>

#include "langlab/core/errors.hpp"
#include "langlab/core/text.hpp"
#include "langlab/langspace/similarity.hpp"

namespace langlab::langspace {

namespace {

Index sorted_row_of(const std::vector<std::string>& codes, const std::string& code) {
  auto it = std::lower_bound(codes.begin(), codes.end(), code);
  if (it == codes.end() || *it != code) return -1;
  return static_cast<Index>(it - codes.begin());
}

}  // namespace

bool EmbeddingFrame::has(const std::string& code) const {
  return sorted_row_of(codes, code) >= 0;
}

Index EmbeddingFrame::row_of(const std::string& code) const {
  Index r = sorted_row_of(codes, code);
  if (r < 0) throw std::out_of_range("no embedding for language '" + code + "'");
  return r;
}

Vec EmbeddingFrame::vector_of(const std::string& code) const {
  return vectors.row(row_of(code)).transpose();
}

EmbeddingStore EmbeddingStore::load_pretrained(const std::string& path) {
  const auto lines = read_lines(path);
  std::size_t at = 0;
  while (at < lines.size() && is_comment_or_blank(lines[at])) ++at;
  if (at == lines.size() || lines[at].rfind("d=", 0) != 0)
    throw DataError(path + ": expected a first line of the form d=<dimension>");
  const Index d = parse_int(lines[at].substr(2), path + ": dimension");
  if (d < 1) throw DataError(path + ": dimension must be at least 1");
  ++at;

  std::vector<std::pair<std::string, Vec>> rows;
  for (; at < lines.size(); ++at) {
    if (is_comment_or_blank(lines[at])) continue;
    auto tokens = split_ws(lines[at]);
    if (static_cast<Index>(tokens.size()) != d + 1)
      throw DataError(path + ":" + std::to_string(at + 1) + ": expected a code plus " +
                      std::to_string(d) + " values");
    Vec v(d);
    for (Index j = 0; j < d; ++j)
      v[j] = parse_double(tokens[static_cast<std::size_t>(j) + 1],
                          path + ":" + std::to_string(at + 1));
    if (!v.allFinite())
      throw DataError(path + ":" + std::to_string(at + 1) + ": non-finite embedding entry");
    rows.emplace_back(tokens[0], std::move(v));
  }

  if (rows.empty()) throw DataError(path + ": embedding file lists no languages");
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].first == rows[i - 1].first)
      throw DataError(path + ": duplicate language code '" + rows[i].first + "'");

  EmbeddingStore store;
  store.dimension_ = d;
  Vec flat(static_cast<Index>(rows.size()) * d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    store.codes_.push_back(rows[i].first);
    flat.segment(static_cast<Index>(i) * d, d) = rows[i].second;
  }
  store.table_ = nn::Tensor::from_values({static_cast<Index>(rows.size()), d}, std::move(flat));
  return store;
}

EmbeddingStore EmbeddingStore::init_random(const std::vector<std::string>& codes, Index dimension,
                                           std::uint64_t seed) {
  if (dimension < 1) throw std::invalid_argument("embedding dimension must be at least 1");
  if (codes.empty()) throw DataError("embedding store needs at least one language");
  std::set<std::string> unique(codes.begin(), codes.end());
  if (unique.size() != codes.size())
    throw DataError("duplicate language code in embedding initialization");

  EmbeddingStore store;
  store.dimension_ = dimension;
  store.codes_.assign(unique.begin(), unique.end());
  std::mt19937_64 rng(seed);
  std::normal_distribution<Scalar> gauss(0.0, 0.1);
  Vec flat(static_cast<Index>(store.codes_.size()) * dimension);
  for (Index i = 0; i < flat.size(); ++i) flat[i] = gauss(rng);
  store.table_ =
      nn::Tensor::from_values({static_cast<Index>(store.codes_.size()), dimension}, std::move(flat));
  return store;
}

bool EmbeddingStore::has(const std::string& code) const {
  return sorted_row_of(codes_, code) >= 0;
}

Index EmbeddingStore::row_of(const std::string& code) const {
  Index r = sorted_row_of(codes_, code);
  if (r < 0) throw std::out_of_range("no embedding for language '" + code + "'");
  return r;
}

Vec EmbeddingStore::vector_of(const std::string& code) const {
  return table_.values().segment(row_of(code) * dimension_, dimension_);
}

bool EmbeddingStore::trainable() const {
  return table_.defined() && table_.requires_grad();
}

void EmbeddingStore::ensure_languages(const std::vector<std::string>& codes, std::uint64_t seed) {
  if (trainable())
    throw std::logic_error("ensure_languages must run before the store is attached to a model");
  std::set<std::string> missing;
  for (const std::string& code : codes)
    if (!has(code)) missing.insert(code);
  if (missing.empty()) return;
  if (!table_.defined())
    throw std::logic_error("ensure_languages needs an initialized store to take its dimension from");

  std::vector<std::string> merged = codes_;
  merged.insert(merged.end(), missing.begin(), missing.end());
  std::sort(merged.begin(), merged.end());

  std::mt19937_64 rng(seed);
  std::normal_distribution<Scalar> gauss(0.0, 0.1);
  const Index d = dimension_;
  Vec flat(static_cast<Index>(merged.size()) * d);
  for (std::size_t i = 0; i < merged.size(); ++i) {
    auto seg = flat.segment(static_cast<Index>(i) * d, d);
    if (has(merged[i])) {
      seg = table_.values().segment(row_of(merged[i]) * d, d);
    } else {
      for (Index j = 0; j < d; ++j) seg[j] = gauss(rng);
    }
  }
  codes_ = std::move(merged);
  table_ = nn::Tensor::from_values({static_cast<Index>(codes_.size()), d}, std::move(flat));
}

void EmbeddingStore::attach(nn::ParameterSet& params, const std::string& name) {
  if (!table_.defined()) throw std::logic_error("cannot attach an empty embedding store");
  if (trainable()) throw std::logic_error("embedding store is already attached");
  table_.impl()->requires_grad = true;
  params.adopt(name, table_);
  params.mark_row_sparse(name);
}

void EmbeddingStore::save(const std::string& path) const {
  std::string out = "d=" + std::to_string(dimension_) + "\n";
  for (std::size_t i = 0; i < codes_.size(); ++i) {
    out += codes_[i];
    const auto row = table_.values().segment(static_cast<Index>(i) * dimension_, dimension_);
    for (Index j = 0; j < dimension_; ++j) {
      out += ' ';
      out += format_g17(row[j]);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

EmbeddingFrame EmbeddingStore::frame() const {
  EmbeddingFrame f;
  f.codes = codes_;
  f.vectors = Mat(static_cast<Index>(codes_.size()), dimension_);
  if (!codes_.empty()) f.vectors = ConstMatMap(table_.values().data(), f.vectors.rows(), dimension_);
  return f;
}

void SnapshotSeries::record(Index iteration, EmbeddingFrame frame) {
  if (!iterations_.empty() && iteration <= iterations_.back())
    throw std::invalid_argument("snapshot iterations must strictly increase");
  if (iteration < 0) throw std::invalid_argument("snapshot iteration must be non-negative");
  iterations_.push_back(iteration);
  frames_.push_back(std::move(frame));
}

std::vector<std::pair<Index, Scalar>> trajectory(const SnapshotSeries& series,
                                                 const std::string& lang_a,
                                                 const std::string& lang_b) {
  std::vector<std::pair<Index, Scalar>> out;
  out.reserve(series.size());
  for (std::size_t k = 0; k < series.size(); ++k) {
    const EmbeddingFrame& f = series.frame_at(k);
    if (!f.has(lang_a) || !f.has(lang_b))
      throw DataError("trajectory: snapshot " + std::to_string(series.iteration_at(k)) +
                      " lacks language '" + (f.has(lang_a) ? lang_b : lang_a) + "'");
    out.emplace_back(series.iteration_at(k),
                     cosine_similarity(f.vector_of(lang_a), f.vector_of(lang_b)));
  }
  return out;
}

}  // namespace langlab::langspace
