#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "langlab/nn/tensor.hpp"

namespace langlab::testsupport {

/// Worst relative error between the recorded backward pass and central finite
/// differences, over every coordinate of every tensor in `wrt`. The forward
/// callback must rebuild its graph from current tensor values on each call
/// and return a scalar.
inline double gradcheck(const std::function<nn::Tensor()>& forward,
                        std::vector<nn::Tensor> wrt, double h = 1e-5) {
  using nn::Tensor;

  for (Tensor& t : wrt) {
    t.ensure_grad();
    t.clear_grad();
  }
  Tensor loss = forward();
  nn::backward(loss);

  double worst = 0.0;
  nn::NoGradGuard guard;
  for (Tensor& t : wrt) {
    const Vec analytic = t.grad();
    for (Index i = 0; i < t.numel(); ++i) {
      const double saved = t.values()[i];
      t.values()[i] = saved + h;
      const double up = forward().value_at(0);
      t.values()[i] = saved - h;
      const double down = forward().value_at(0);
      t.values()[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-5});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace langlab::testsupport
