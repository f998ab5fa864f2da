#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "langlab/nn/tensor.hpp"

namespace langlab::nn {

struct AdamOptions {
  Scalar lr = 0.001;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar eps = 1e-8;
};

/// Named trainable tensors plus their optimizer state. A single instance owns
/// everything one model trains; not shareable across concurrent writers,
/// though recording-free inference on it is thread-safe.
class ParameterSet {
 public:
  explicit ParameterSet(std::uint64_t seed = 0);

  Tensor add_uniform(const std::string& name, std::vector<Index> shape,
                     Scalar low = -0.1, Scalar high = 0.1);
  Tensor add_gaussian(const std::string& name, std::vector<Index> shape,
                      Scalar mean, Scalar stddev);
  Tensor add_zeros(const std::string& name, std::vector<Index> shape);
  Tensor add_values(const std::string& name, std::vector<Index> shape, Vec values);
  /// Registers an externally created tensor (e.g. a shared embedding table).
  void adopt(const std::string& name, const Tensor& t);

  bool contains(const std::string& name) const;
  Tensor get(const std::string& name) const;
  /// Sorted parameter names.
  std::vector<std::string> names() const;
  std::size_t size() const { return entries_.size(); }
  Index total_values() const;

  void zero_grad();
  /// Multiplies every gradient in place (e.g. 1/batch for mean loss).
  void scale_gradients(Scalar factor);
  bool all_finite() const;

  /// Marks a 2-D parameter for row-sparse Adam: rows whose gradient is
  /// entirely zero keep both their values and their moment estimates, so an
  /// update touching language i leaves every other language's row bit-identical.
  void mark_row_sparse(const std::string& name);
  bool is_row_sparse(const std::string& name) const;

  std::uint64_t step_count() const { return step_; }

  std::mt19937_64& rng() { return rng_; }

  /// Copies of current parameter values, keyed by name (optimizer state excluded).
  std::map<std::string, Vec> export_values() const;
  /// Restores previously exported values; every name must exist with a
  /// matching size. Moments and step counter are left untouched.
  void import_values(const std::map<std::string, Vec>& values);

  /// Text checkpoint: name, shape, values (and any moment state) at 17
  /// significant digits, atomically written. Round-trips bit-exactly.
  void save(const std::string& path) const;
  static ParameterSet load_file(const std::string& path);

 private:
  friend void adam_step(ParameterSet&, const AdamOptions&);
  friend void sgd_step(ParameterSet&, Scalar);

  struct Entry {
    Tensor tensor;
    Vec m;  // first/second moment accumulators; size 0 until the first Adam step
    Vec v;
    bool row_sparse = false;
  };

  Entry& at(const std::string& name);
  const Entry& at(const std::string& name) const;

  std::map<std::string, Entry> entries_;  // ordered => deterministic iteration
  std::uint64_t step_ = 0;
  std::mt19937_64 rng_;
};

/// Existing parameter under this name (shape-validated) or a fresh draw from
/// uniform(low, high). Lets layer constructors serve both fresh models and
/// checkpoint-restored ones.
Tensor ensure_uniform(ParameterSet& params, const std::string& name,
                      const std::vector<Index>& shape, Scalar low = -0.1, Scalar high = 0.1);
/// Existing parameter (shape-validated) or a fresh one holding `values_if_new`.
Tensor ensure_values(ParameterSet& params, const std::string& name,
                     const std::vector<Index>& shape, const Vec& values_if_new);

/// One Adam update with bias correction: p -= lr * m_hat / (sqrt(v_hat) + eps).
/// Every parameter must have a populated gradient; gradients are cleared
/// afterwards and the step counter advances by one.
void adam_step(ParameterSet& params, const AdamOptions& opts = {});
void adam_step(ParameterSet& params, Scalar lr, Scalar beta1, Scalar beta2, Scalar eps);

/// Plain gradient descent; same gradient-clearing and step-counting contract.
void sgd_step(ParameterSet& params, Scalar lr);

}  // namespace langlab::nn
