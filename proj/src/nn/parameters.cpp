#include "langlab/nn/parameters.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "langlab/core/errors.hpp"
#include "langlab/core/text.hpp"

namespace langlab::nn {

ParameterSet::ParameterSet(std::uint64_t seed) : rng_(seed) {}

ParameterSet::Entry& ParameterSet::at(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return it->second;
}

const ParameterSet::Entry& ParameterSet::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return it->second;
}

void ParameterSet::adopt(const std::string& name, const Tensor& t) {
  if (name.empty() || name.find_first_of(" \t\n") != std::string::npos)
    throw std::invalid_argument("parameter names must be non-empty and whitespace-free");
  if (!t.defined() || !t.requires_grad())
    throw std::invalid_argument("parameter '" + name + "' must be a requires_grad tensor");
  if (entries_.contains(name))
    throw std::invalid_argument("duplicate parameter name '" + name + "'");
  entries_[name] = Entry{t, Vec(), Vec(), false};
}

Tensor ParameterSet::add_uniform(const std::string& name, std::vector<Index> shape,
                                 Scalar low, Scalar high) {
  std::uniform_real_distribution<Scalar> dist(low, high);
  Vec v(numel_of(shape));
  for (Index i = 0; i < v.size(); ++i) v[i] = dist(rng_);
  Tensor t = Tensor::from_values(std::move(shape), std::move(v), true);
  adopt(name, t);
  return t;
}

Tensor ParameterSet::add_gaussian(const std::string& name, std::vector<Index> shape,
                                  Scalar mean, Scalar stddev) {
  std::normal_distribution<Scalar> dist(mean, stddev);
  Vec v(numel_of(shape));
  for (Index i = 0; i < v.size(); ++i) v[i] = dist(rng_);
  Tensor t = Tensor::from_values(std::move(shape), std::move(v), true);
  adopt(name, t);
  return t;
}

Tensor ParameterSet::add_zeros(const std::string& name, std::vector<Index> shape) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  adopt(name, t);
  return t;
}

Tensor ParameterSet::add_values(const std::string& name, std::vector<Index> shape, Vec values) {
  Tensor t = Tensor::from_values(std::move(shape), std::move(values), true);
  adopt(name, t);
  return t;
}

bool ParameterSet::contains(const std::string& name) const { return entries_.contains(name); }

Tensor ParameterSet::get(const std::string& name) const { return at(name).tensor; }

std::vector<std::string> ParameterSet::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, entry] : entries_) out.push_back(name);
  return out;
}

Index ParameterSet::total_values() const {
  Index n = 0;
  for (const auto& [name, entry] : entries_) n += entry.tensor.numel();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& [name, entry] : entries_) {
    entry.tensor.ensure_grad();
    entry.tensor.clear_grad();
  }
}

void ParameterSet::scale_gradients(Scalar factor) {
  for (auto& [name, entry] : entries_)
    if (entry.tensor.has_grad()) entry.tensor.impl()->grad *= factor;
}

bool ParameterSet::all_finite() const {
  for (const auto& [name, entry] : entries_)
    if (!entry.tensor.all_finite()) return false;
  return true;
}

void ParameterSet::mark_row_sparse(const std::string& name) {
  Entry& e = at(name);
  if (e.tensor.ndim() != 2)
    throw std::invalid_argument("row-sparse updates require a 2-D parameter: '" + name + "'");
  e.row_sparse = true;
}

bool ParameterSet::is_row_sparse(const std::string& name) const { return at(name).row_sparse; }

std::map<std::string, Vec> ParameterSet::export_values() const {
  std::map<std::string, Vec> out;
  for (const auto& [name, entry] : entries_) out[name] = entry.tensor.values();
  return out;
}

void ParameterSet::import_values(const std::map<std::string, Vec>& values) {
  for (const auto& [name, vals] : values) {
    Entry& e = at(name);
    if (vals.size() != e.tensor.numel())
      throw std::invalid_argument("imported values for '" + name + "' have the wrong size");
    e.tensor.values() = vals;
  }
}

namespace {

void adam_update_span(Eigen::Ref<Vec> p, Eigen::Ref<Vec> m, Eigen::Ref<Vec> v,
                      const Eigen::Ref<const Vec>& g, const AdamOptions& o,
                      Scalar bc1, Scalar bc2) {
  m = o.beta1 * m + (1.0 - o.beta1) * g;
  v = (o.beta2 * v.array() + (1.0 - o.beta2) * g.array().square()).matrix();
  p.array() -= o.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + o.eps);
}

}  // namespace

void adam_step(ParameterSet& params, const AdamOptions& opts) {
  for (const auto& [name, entry] : params.entries_)
    if (!entry.tensor.has_grad())
      throw std::logic_error("adam_step: parameter '" + name + "' has no gradient");

  params.step_ += 1;
  const Scalar t = static_cast<Scalar>(params.step_);
  const Scalar bc1 = 1.0 - std::pow(opts.beta1, t);
  const Scalar bc2 = 1.0 - std::pow(opts.beta2, t);

  for (auto& [name, entry] : params.entries_) {
    Tensor& tensor = entry.tensor;
    Vec& g = tensor.impl()->grad;
    if (entry.m.size() == 0) {
      entry.m = Vec::Zero(tensor.numel());
      entry.v = Vec::Zero(tensor.numel());
    }
    if (entry.row_sparse) {
      // Untouched rows keep values *and* moments, so one language's update
      // never drifts another language's embedding.
      const Index rows = tensor.dim(0), cols = tensor.dim(1);
      for (Index r = 0; r < rows; ++r) {
        const Index off = r * cols;
        if (g.segment(off, cols).isZero(0.0)) continue;
        adam_update_span(tensor.values().segment(off, cols), entry.m.segment(off, cols),
                         entry.v.segment(off, cols), g.segment(off, cols), opts, bc1, bc2);
      }
    } else {
      adam_update_span(tensor.values(), entry.m, entry.v, g, opts, bc1, bc2);
    }
    g.setZero();
  }
}

void adam_step(ParameterSet& params, Scalar lr, Scalar beta1, Scalar beta2, Scalar eps) {
  adam_step(params, AdamOptions{lr, beta1, beta2, eps});
}

void sgd_step(ParameterSet& params, Scalar lr) {
  for (const auto& [name, entry] : params.entries_)
    if (!entry.tensor.has_grad())
      throw std::logic_error("sgd_step: parameter '" + name + "' has no gradient");
  params.step_ += 1;
  for (auto& [name, entry] : params.entries_) {
    Vec& g = entry.tensor.impl()->grad;
    entry.tensor.values() -= lr * g;
    g.setZero();
  }
}

namespace {

void check_shape(const Tensor& t, const std::vector<Index>& shape, const std::string& name) {
  if (t.shape() != shape)
    throw std::invalid_argument("parameter '" + name + "' exists with a different shape");
}

}  // namespace

Tensor ensure_uniform(ParameterSet& params, const std::string& name,
                      const std::vector<Index>& shape, Scalar low, Scalar high) {
  if (params.contains(name)) {
    Tensor t = params.get(name);
    check_shape(t, shape, name);
    return t;
  }
  return params.add_uniform(name, shape, low, high);
}

Tensor ensure_values(ParameterSet& params, const std::string& name,
                     const std::vector<Index>& shape, const Vec& values_if_new) {
  if (params.contains(name)) {
    Tensor t = params.get(name);
    check_shape(t, shape, name);
    return t;
  }
  return params.add_values(name, shape, values_if_new);
}

namespace {

void append_vec(std::string& out, const Vec& v) {
  for (Index i = 0; i < v.size(); ++i) {
    out += ' ';
    out += format_g17(v[i]);
  }
  out += '\n';
}

Vec parse_vec(const std::vector<std::string>& tokens, std::size_t from, Index n,
              const std::string& context) {
  if (tokens.size() != from + static_cast<std::size_t>(n))
    throw DataError(context + ": expected " + std::to_string(n) + " values");
  Vec v(n);
  for (Index i = 0; i < n; ++i)
    v[i] = parse_double(tokens[from + static_cast<std::size_t>(i)], context);
  return v;
}

}  // namespace

void ParameterSet::save(const std::string& path) const {
  std::string out = "langlab-params 1\n";
  out += "step " + std::to_string(step_) + "\n";
  out += "count " + std::to_string(entries_.size()) + "\n";
  for (const auto& [name, entry] : entries_) {
    out += "param " + name;
    out += ' ' + std::to_string(entry.tensor.ndim());
    for (Index d : entry.tensor.shape()) out += ' ' + std::to_string(d);
    out += entry.row_sparse ? " sparse" : " dense";
    out += entry.m.size() > 0 ? " moments\n" : " fresh\n";
    out += "values";
    append_vec(out, entry.tensor.values());
    if (entry.m.size() > 0) {
      out += "m";
      append_vec(out, entry.m);
      out += "v";
      append_vec(out, entry.v);
    }
  }
  write_file_atomic(path, out);
}

ParameterSet ParameterSet::load_file(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  std::size_t at = 0;
  auto next_tokens = [&](const char* want) -> std::vector<std::string> {
    if (at >= lines.size())
      throw DataError(path + ": truncated checkpoint, expected " + want);
    return split_ws(lines[at++]);
  };

  auto header = next_tokens("header");
  if (header.size() != 2 || header[0] != "langlab-params" || header[1] != "1")
    throw DataError(path + ": not a parameter checkpoint");

  ParameterSet out;
  auto step_line = next_tokens("step");
  if (step_line.size() != 2 || step_line[0] != "step")
    throw DataError(path + ": malformed step line");
  out.step_ = static_cast<std::uint64_t>(parse_int(step_line[1], path + ": step"));

  auto count_line = next_tokens("count");
  if (count_line.size() != 2 || count_line[0] != "count")
    throw DataError(path + ": malformed count line");
  const long long count = parse_int(count_line[1], path + ": count");

  for (long long i = 0; i < count; ++i) {
    auto head = next_tokens("param header");
    if (head.size() < 5 || head[0] != "param")
      throw DataError(path + ": malformed param header");
    const std::string& name = head[1];
    const long long ndim = parse_int(head[2], path + ": ndim");
    if (head.size() != static_cast<std::size_t>(ndim) + 5)
      throw DataError(path + ": param header for '" + name + "' has wrong arity");
    std::vector<Index> shape;
    for (long long d = 0; d < ndim; ++d)
      shape.push_back(parse_int(head[3 + static_cast<std::size_t>(d)], path + ": dim"));
    const std::string& sparse_tag = head[head.size() - 2];
    const std::string& moments_tag = head[head.size() - 1];
    if ((sparse_tag != "sparse" && sparse_tag != "dense") ||
        (moments_tag != "moments" && moments_tag != "fresh"))
      throw DataError(path + ": malformed tags for '" + name + "'");
    const Index n = numel_of(shape);

    auto values_line = next_tokens("values");
    if (values_line.empty() || values_line[0] != "values")
      throw DataError(path + ": missing values for '" + name + "'");
    Vec values = parse_vec(values_line, 1, n, path + ": values of '" + name + "'");
    out.add_values(name, shape, std::move(values));
    Entry& e = out.at(name);
    e.row_sparse = sparse_tag == "sparse";
    if (moments_tag == "moments") {
      auto m_line = next_tokens("m");
      if (m_line.empty() || m_line[0] != "m")
        throw DataError(path + ": missing first moments for '" + name + "'");
      e.m = parse_vec(m_line, 1, n, path + ": m of '" + name + "'");
      auto v_line = next_tokens("v");
      if (v_line.empty() || v_line[0] != "v")
        throw DataError(path + ": missing second moments for '" + name + "'");
      e.v = parse_vec(v_line, 1, n, path + ": v of '" + name + "'");
    }
  }
  if (at != lines.size()) throw DataError(path + ": trailing content after checkpoint");
  return out;
}

}  // namespace langlab::nn
