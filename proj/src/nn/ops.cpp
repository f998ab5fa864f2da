#include "langlab/nn/ops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace langlab::nn {

namespace {

Vec& grad_of(TensorImpl& t) {
  if (t.grad.size() != t.values.size()) t.grad = Vec::Zero(t.values.size());
  return t.grad;
}

bool should_record(std::initializer_list<const Tensor*> inputs) {
  if (!grad_enabled()) return false;
  for (const Tensor* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

void record(Tensor& out, std::initializer_list<const Tensor*> inputs,
            std::function<void(TensorImpl&)> backward_fn) {
  TensorImpl* impl = out.impl();
  impl->requires_grad = true;
  impl->parents.reserve(inputs.size());
  for (const Tensor* t : inputs) impl->parents.push_back(t->ptr());
  impl->backward_fn = std::move(backward_fn);
}

void require_1d(const Tensor& t, const char* op) {
  if (t.ndim() != 1) throw std::invalid_argument(std::string(op) + ": expected a 1-D tensor");
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

Tensor embed_lookup(const Tensor& table, Index index) {
  if (table.ndim() != 2) throw std::invalid_argument("embed_lookup: table must be 2-D");
  const Index rows = table.dim(0), cols = table.dim(1);
  if (index < 0 || index >= rows)
    throw std::out_of_range("embed_lookup: row index " + std::to_string(index) +
                            " out of range [0, " + std::to_string(rows) + ")");
  Tensor out = Tensor::from_values({cols}, table.values().segment(index * cols, cols));
  if (should_record({&table})) {
    record(out, {&table}, [index, cols](TensorImpl& o) {
      TensorImpl& t = *o.parents[0];
      if (t.requires_grad) grad_of(t).segment(index * cols, cols) += o.grad;
    });
  }
  return out;
}

Tensor matvec(const Tensor& w, const Tensor& x) {
  if (w.ndim() != 2) throw std::invalid_argument("matvec: weight must be 2-D");
  require_1d(x, "matvec");
  if (w.dim(1) != x.dim(0)) throw std::invalid_argument("matvec: inner dimensions disagree");
  const Index m = w.dim(0), n = w.dim(1);
  Tensor out = Tensor::from_values({m}, w.matrix() * x.values());
  if (should_record({&w, &x})) {
    record(out, {&w, &x}, [m, n](TensorImpl& o) {
      TensorImpl& win = *o.parents[0];
      TensorImpl& xin = *o.parents[1];
      if (win.requires_grad)
        MatMap(grad_of(win).data(), m, n).noalias() += o.grad * xin.values.transpose();
      if (xin.requires_grad)
        grad_of(xin).noalias() += ConstMatMap(win.values.data(), m, n).transpose() * o.grad;
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = Tensor::from_values(a.shape(), a.values() + b.values());
  if (should_record({&a, &b})) {
    record(out, {&a, &b}, [](TensorImpl& o) {
      for (auto& p : o.parents)
        if (p->requires_grad) grad_of(*p) += o.grad;
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out = Tensor::from_values(a.shape(), (a.values().array() * b.values().array()).matrix());
  if (should_record({&a, &b})) {
    record(out, {&a, &b}, [](TensorImpl& o) {
      TensorImpl& pa = *o.parents[0];
      TensorImpl& pb = *o.parents[1];
      if (pa.requires_grad) grad_of(pa).array() += o.grad.array() * pb.values.array();
      if (pb.requires_grad) grad_of(pb).array() += o.grad.array() * pa.values.array();
    });
  }
  return out;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out = Tensor::from_values(x.shape(), (1.0 / (1.0 + (-x.values().array()).exp())).matrix());
  if (should_record({&x})) {
    record(out, {&x}, [](TensorImpl& o) {
      TensorImpl& p = *o.parents[0];
      if (p.requires_grad)
        grad_of(p).array() += o.grad.array() * o.values.array() * (1.0 - o.values.array());
    });
  }
  return out;
}

Tensor tanh(const Tensor& x) {
  Tensor out = Tensor::from_values(x.shape(), x.values().array().tanh().matrix());
  if (should_record({&x})) {
    record(out, {&x}, [](TensorImpl& o) {
      TensorImpl& p = *o.parents[0];
      if (p.requires_grad)
        grad_of(p).array() += o.grad.array() * (1.0 - o.values.array().square());
    });
  }
  return out;
}

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  Index total = 0;
  for (const Tensor& t : parts) {
    require_1d(t, "concat");
    total += t.dim(0);
  }
  Vec v(total);
  Index at = 0;
  for (const Tensor& t : parts) {
    v.segment(at, t.dim(0)) = t.values();
    at += t.dim(0);
  }
  Tensor out = Tensor::from_values({total}, std::move(v));

  bool rec = grad_enabled();
  if (rec) {
    rec = false;
    for (const Tensor& t : parts) rec = rec || t.requires_grad();
  }
  if (rec) {
    TensorImpl* impl = out.impl();
    impl->requires_grad = true;
    for (const Tensor& t : parts) impl->parents.push_back(t.ptr());
    impl->backward_fn = [](TensorImpl& o) {
      Index at2 = 0;
      for (auto& p : o.parents) {
        const Index n = p->values.size();
        if (p->requires_grad) grad_of(*p) += o.grad.segment(at2, n);
        at2 += n;
      }
    };
  }
  return out;
}

Tensor concat(std::initializer_list<Tensor> parts) {
  std::vector<Tensor> v(parts);
  return concat(std::span<const Tensor>(v));
}

Tensor slice(const Tensor& x, Index offset, Index length) {
  require_1d(x, "slice");
  if (offset < 0 || length <= 0 || offset + length > x.dim(0))
    throw std::out_of_range("slice: range out of bounds");
  Tensor out = Tensor::from_values({length}, x.values().segment(offset, length));
  if (should_record({&x})) {
    record(out, {&x}, [offset, length](TensorImpl& o) {
      TensorImpl& p = *o.parents[0];
      if (p.requires_grad) grad_of(p).segment(offset, length) += o.grad;
    });
  }
  return out;
}

Tensor dot(const Tensor& a, const Tensor& b) {
  require_1d(a, "dot");
  require_same_shape(a, b, "dot");
  Tensor out = Tensor::scalar(a.values().dot(b.values()));
  if (should_record({&a, &b})) {
    record(out, {&a, &b}, [](TensorImpl& o) {
      TensorImpl& pa = *o.parents[0];
      TensorImpl& pb = *o.parents[1];
      const Scalar g = o.grad[0];
      if (pa.requires_grad) grad_of(pa) += g * pb.values;
      if (pb.requires_grad) grad_of(pb) += g * pa.values;
    });
  }
  return out;
}

Tensor scale(const Tensor& x, const Tensor& factor) {
  if (factor.numel() != 1) throw std::invalid_argument("scale: factor must be [1]-shaped");
  Tensor out = Tensor::from_values(x.shape(), x.values() * factor.value_at(0));
  if (should_record({&x, &factor})) {
    record(out, {&x, &factor}, [](TensorImpl& o) {
      TensorImpl& px = *o.parents[0];
      TensorImpl& pf = *o.parents[1];
      if (px.requires_grad) grad_of(px) += o.grad * pf.values[0];
      if (pf.requires_grad) grad_of(pf)[0] += o.grad.dot(px.values);
    });
  }
  return out;
}

Tensor softmax(const Tensor& x) {
  require_1d(x, "softmax");
  const Scalar m = x.values().maxCoeff();
  Vec e = (x.values().array() - m).exp().matrix();
  e /= e.sum();
  Tensor out = Tensor::from_values(x.shape(), std::move(e));
  if (should_record({&x})) {
    record(out, {&x}, [](TensorImpl& o) {
      TensorImpl& p = *o.parents[0];
      if (!p.requires_grad) return;
      const Scalar inner = o.grad.dot(o.values);
      grad_of(p).array() += o.values.array() * (o.grad.array() - inner);
    });
  }
  return out;
}

Tensor softmax_xent(const Tensor& logits, Index target) {
  require_1d(logits, "softmax_xent");
  const Index c = logits.dim(0);
  if (target < 0 || target >= c)
    throw std::out_of_range("softmax_xent: target " + std::to_string(target) +
                            " out of range [0, " + std::to_string(c) + ")");
  const Scalar m = logits.values().maxCoeff();
  const Vec shifted = (logits.values().array() - m).matrix();
  const Scalar lse = std::log(shifted.array().exp().sum());
  Scalar loss = lse - shifted[target];
  if (loss < 0.0) loss = 0.0;  // guard against rounding just below zero
  Tensor out = Tensor::scalar(loss);
  if (should_record({&logits})) {
    Vec probs = (shifted.array() - lse).exp().matrix();
    record(out, {&logits}, [target, probs = std::move(probs)](TensorImpl& o) {
      TensorImpl& p = *o.parents[0];
      if (!p.requires_grad) return;
      const Scalar g = o.grad[0];
      Vec& gp = grad_of(p);
      gp += g * probs;
      gp[target] -= g;
    });
  }
  return out;
}

}  // namespace langlab::nn
