#pragma once

#include <span>
#include <string>

#include "langlab/nn/ops.hpp"
#include "langlab/nn/parameters.hpp"
#include "langlab/nn/tensor.hpp"

namespace langlab::nn {

/// Additive attention scorer: score_j = v . tanh(W [query, encoding_j] + b).
struct AttentionParams {
  Tensor w;  // [att_dim x (query_dim + enc_dim)]
  Tensor b;  // [att_dim]
  Tensor v;  // [att_dim]
  Index query_dim = 0;
  Index enc_dim = 0;
};

/// Fetches or creates "<prefix>.W" / "<prefix>.b" / "<prefix>.v".
AttentionParams attention_params(ParameterSet& params, const std::string& prefix,
                                 Index query_dim, Index enc_dim, Index att_dim);

struct AttendResult {
  Tensor context;  // convex combination of the encodings, width enc_dim
  Tensor weights;  // softmax scores, one per encoding
};

/// Scores every encoding against the query and returns the weighted sum.
AttendResult attend(const AttentionParams& p, const Tensor& query,
                    std::span<const Tensor> encodings);

}  // namespace langlab::nn
