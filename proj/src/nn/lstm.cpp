#include "langlab/nn/lstm.hpp"

#include <stdexcept>

namespace langlab::nn {

LstmParams lstm_params(ParameterSet& params, const std::string& prefix,
                       Index input_dim, Index hidden) {
  if (input_dim <= 0 || hidden <= 0)
    throw std::invalid_argument("lstm_params: dimensions must be positive");
  Vec bias = Vec::Zero(4 * hidden);
  bias.segment(hidden, hidden).setConstant(1.0);  // forget block
  LstmParams p;
  p.w = ensure_uniform(params, prefix + ".W", {4 * hidden, input_dim + hidden});
  p.b = ensure_values(params, prefix + ".b", {4 * hidden}, bias);
  p.input_dim = input_dim;
  p.hidden = hidden;
  return p;
}

LstmState lstm_initial_state(Index hidden) {
  return {Tensor::zeros({hidden}), Tensor::zeros({hidden})};
}

LstmState lstm_step(const LstmParams& p, const Tensor& input, const LstmState& state) {
  const Index h = p.hidden;
  if (input.ndim() != 1 || input.dim(0) != p.input_dim)
    throw std::invalid_argument("lstm_step: input width does not match parameters");
  if (state.hidden.ndim() != 1 || state.hidden.dim(0) != h ||
      state.cell.ndim() != 1 || state.cell.dim(0) != h)
    throw std::invalid_argument("lstm_step: state width does not match parameters");

  Tensor z = add(matvec(p.w, concat({input, state.hidden})), p.b);
  Tensor gi = sigmoid(slice(z, 0, h));
  Tensor gf = sigmoid(slice(z, h, h));
  Tensor gc = tanh(slice(z, 2 * h, h));
  Tensor go = sigmoid(slice(z, 3 * h, h));
  Tensor cell = add(mul(gf, state.cell), mul(gi, gc));
  return {mul(go, tanh(cell)), cell};
}

std::vector<LstmState> lstm_run(const LstmParams& p, std::span<const Tensor> inputs,
                                const LstmState& start) {
  std::vector<LstmState> states;
  states.reserve(inputs.size());
  LstmState s = start;
  for (const Tensor& x : inputs) {
    s = lstm_step(p, x, s);
    states.push_back(s);
  }
  return states;
}

std::vector<Tensor> bilstm_encode(const LstmParams& fwd, const LstmParams& bwd,
                                  std::span<const Tensor> inputs) {
  if (inputs.empty()) throw std::invalid_argument("bilstm_encode: empty input sequence");
  const std::size_t n = inputs.size();

  std::vector<LstmState> forward = lstm_run(fwd, inputs, lstm_initial_state(fwd.hidden));

  std::vector<Tensor> reversed(inputs.rbegin(), inputs.rend());
  std::vector<LstmState> backward = lstm_run(bwd, reversed, lstm_initial_state(bwd.hidden));

  std::vector<Tensor> out;
  out.reserve(n);
  for (std::size_t t = 0; t < n; ++t)
    out.push_back(concat({forward[t].hidden, backward[n - 1 - t].hidden}));
  return out;
}

}  // namespace langlab::nn
