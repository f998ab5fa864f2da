#include "langlab/nn/tensor.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace langlab::nn {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Index numel_of(const std::vector<Index>& shape) {
  Index n = 1;
  for (Index d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor shape entries must be positive");
    n *= d;
  }
  return n;
}

Tensor Tensor::zeros(std::vector<Index> shape, bool requires_grad) {
  auto impl = std::make_shared<TensorImpl>();
  Index n = numel_of(shape);
  impl->shape = std::move(shape);
  impl->values = Vec::Zero(n);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::from_values(std::vector<Index> shape, Vec values, bool requires_grad) {
  if (numel_of(shape) != values.size())
    throw std::invalid_argument("tensor shape does not match value count");
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->values = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::vector(Vec values, bool requires_grad) {
  Index n = values.size();
  return from_values({n}, std::move(values), requires_grad);
}

Tensor Tensor::scalar(Scalar value, bool requires_grad) {
  Vec v(1);
  v[0] = value;
  return from_values({1}, std::move(v), requires_grad);
}

const Vec& Tensor::grad() const {
  if (!has_grad()) throw std::logic_error("tensor has no gradient buffer");
  return impl_->grad;
}

Vec& Tensor::ensure_grad() {
  if (!has_grad()) impl_->grad = Vec::Zero(impl_->values.size());
  return impl_->grad;
}

void Tensor::clear_grad() {
  if (has_grad()) impl_->grad.setZero();
}

ConstMatMap Tensor::matrix() const {
  if (ndim() != 2) throw std::invalid_argument("matrix() requires a 2-D tensor");
  return ConstMatMap(impl_->values.data(), impl_->shape[0], impl_->shape[1]);
}

MatMap Tensor::matrix() {
  if (ndim() != 2) throw std::invalid_argument("matrix() requires a 2-D tensor");
  return MatMap(impl_->values.data(), impl_->shape[0], impl_->shape[1]);
}

bool Tensor::all_finite() const { return impl_->values.allFinite(); }

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw std::invalid_argument("backward() requires a scalar loss");

  // Post-order DFS; reversing it gives an order where every consumer of a
  // node runs before the node itself.
  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> seen;
  std::vector<std::pair<TensorImpl*, std::size_t>> stack;
  stack.emplace_back(loss.impl(), 0);
  seen.insert(loss.impl());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorImpl* p = node->parents[next++].get();
      if (seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior grads are per-sweep scratch; leaf grads accumulate across sweeps.
  for (TensorImpl* node : order) {
    if (!node->is_leaf()) {
      if (node->grad.size() != node->values.size())
        node->grad = Vec::Zero(node->values.size());
      else
        node->grad.setZero();
    }
  }

  TensorImpl* root = loss.impl();
  if (root->grad.size() != root->values.size()) root->grad = Vec::Zero(root->values.size());
  root->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* node = *it;
    if (node->backward_fn) node->backward_fn(*node);
  }
}

}  // namespace langlab::nn
