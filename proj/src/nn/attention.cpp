#include "langlab/nn/attention.hpp"

#include <stdexcept>
#include <vector>

namespace langlab::nn {

AttentionParams attention_params(ParameterSet& params, const std::string& prefix,
                                 Index query_dim, Index enc_dim, Index att_dim) {
  if (query_dim <= 0 || enc_dim <= 0 || att_dim <= 0)
    throw std::invalid_argument("attention_params: dimensions must be positive");
  AttentionParams p;
  p.w = ensure_uniform(params, prefix + ".W", {att_dim, query_dim + enc_dim});
  p.b = ensure_values(params, prefix + ".b", {att_dim}, Vec::Zero(att_dim));
  p.v = ensure_uniform(params, prefix + ".v", {att_dim});
  p.query_dim = query_dim;
  p.enc_dim = enc_dim;
  return p;
}

AttendResult attend(const AttentionParams& p, const Tensor& query,
                    std::span<const Tensor> encodings) {
  if (encodings.empty()) throw std::invalid_argument("attend: no encodings");
  if (query.ndim() != 1 || query.dim(0) != p.query_dim)
    throw std::invalid_argument("attend: query width does not match parameters");

  std::vector<Tensor> scores;
  scores.reserve(encodings.size());
  for (const Tensor& e : encodings) {
    if (e.ndim() != 1 || e.dim(0) != p.enc_dim)
      throw std::invalid_argument("attend: encoding width does not match parameters");
    scores.push_back(dot(p.v, tanh(add(matvec(p.w, concat({query, e})), p.b))));
  }

  Tensor weights = softmax(concat(std::span<const Tensor>(scores)));
  Tensor context = scale(encodings[0], slice(weights, 0, 1));
  for (std::size_t j = 1; j < encodings.size(); ++j)
    context = add(context, scale(encodings[j], slice(weights, static_cast<Index>(j), 1)));
  return {context, weights};
}

}  // namespace langlab::nn
