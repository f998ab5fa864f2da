#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "langlab/core/types.hpp"

namespace langlab::nn {

class Tensor;

// One node of the dynamically recorded computation graph. Values are a flat
// row-major buffer; 2-D tensors get Eigen Map views over it.
struct TensorImpl {
  std::vector<Index> shape;
  Vec values;
  Vec grad;  // size 0 until first needed
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorImpl>> parents;
  std::function<void(TensorImpl&)> backward_fn;  // set only on recorded op outputs

  Index numel() const { return values.size(); }
  bool is_leaf() const { return !backward_fn; }
};

/// Shared handle to a graph node. Copies alias the same storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<Index> shape, bool requires_grad = false);
  static Tensor from_values(std::vector<Index> shape, Vec values, bool requires_grad = false);
  /// 1-D constant.
  static Tensor vector(Vec values, bool requires_grad = false);
  /// [1]-shaped constant.
  static Tensor scalar(Scalar value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<Index>& shape() const { return impl_->shape; }
  Index ndim() const { return static_cast<Index>(impl_->shape.size()); }
  Index numel() const { return impl_->values.size(); }
  Index dim(std::size_t i) const { return impl_->shape[i]; }

  const Vec& values() const { return impl_->values; }
  Vec& values() { return impl_->values; }
  Scalar value_at(Index i) const { return impl_->values[i]; }

  bool requires_grad() const { return impl_->requires_grad; }
  bool has_grad() const { return impl_->grad.size() == impl_->values.size(); }
  const Vec& grad() const;
  /// Allocates (zero) the gradient buffer if absent, then returns it.
  Vec& ensure_grad();
  void clear_grad();

  /// Row-major matrix view; tensor must be 2-D.
  ConstMatMap matrix() const;
  MatMap matrix();

  bool all_finite() const;

  TensorImpl* impl() const { return impl_.get(); }
  const std::shared_ptr<TensorImpl>& ptr() const { return impl_; }
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<TensorImpl> impl_;
};

/// Reverse-mode sweep from a scalar loss. Gradients of leaf tensors
/// (parameters, constants marked requires_grad) accumulate across calls;
/// interior nodes are re-seeded each call.
void backward(const Tensor& loss);

/// While any of these guards is alive on a thread, ops on that thread record
/// no graph: outputs are plain values. Makes frozen-model inference cheap and
/// safe to run concurrently.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

Index numel_of(const std::vector<Index>& shape);

}  // namespace langlab::nn
