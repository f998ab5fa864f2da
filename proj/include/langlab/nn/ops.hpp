#pragma once

#include <initializer_list>
#include <span>

#include "langlab/nn/tensor.hpp"

namespace langlab::nn {

// Differentiable ops over 1-D vectors plus the 2-D lookup/matvec the models
// need. Each op validates shapes, computes the value with Eigen, and (when
// grad recording is on and an input requires grad) registers its backward.

/// Row `index` of a [V x d] table. Gradient flows only into that row.
Tensor embed_lookup(const Tensor& table, Index index);

/// w: [m x n], x: [n] -> [m].
Tensor matvec(const Tensor& w, const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);

/// Elementwise product.
Tensor mul(const Tensor& a, const Tensor& b);

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);

/// Concatenation of 1-D tensors.
Tensor concat(std::span<const Tensor> parts);
Tensor concat(std::initializer_list<Tensor> parts);

/// Contiguous [offset, offset+length) of a 1-D tensor.
Tensor slice(const Tensor& x, Index offset, Index length);

Tensor dot(const Tensor& a, const Tensor& b);

/// x scaled by a [1]-shaped factor.
Tensor scale(const Tensor& x, const Tensor& factor);

/// Max-subtracted softmax over a 1-D tensor.
Tensor softmax(const Tensor& x);

/// -log softmax(logits)[target], max-subtracted. Always finite for finite logits.
Tensor softmax_xent(const Tensor& logits, Index target);

}  // namespace langlab::nn
