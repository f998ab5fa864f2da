#pragma once

#include <span>
#include <string>
#include <vector>

#include "langlab/nn/ops.hpp"
#include "langlab/nn/parameters.hpp"
#include "langlab/nn/tensor.hpp"

namespace langlab::nn {

/// Fused-gate LSTM weights: one [4H x (d_in + H)] matrix over [input, hidden]
/// with gate blocks ordered input, forget, candidate, output, plus a [4H] bias.
struct LstmParams {
  Tensor w;
  Tensor b;
  Index input_dim = 0;
  Index hidden = 0;
};

/// Fetches or creates the parameters "<prefix>.W" / "<prefix>.b". Fresh
/// weights are uniform(-0.1, 0.1); fresh biases are zero except the forget
/// block, offset to +1.0 so early training does not forget everything.
LstmParams lstm_params(ParameterSet& params, const std::string& prefix,
                       Index input_dim, Index hidden);

struct LstmState {
  Tensor hidden;
  Tensor cell;
};

/// All-zero start state.
LstmState lstm_initial_state(Index hidden);

/// One step of the standard recurrence: logistic input/forget/output gates,
/// tanh candidate; differentiable through input, state, and parameters.
LstmState lstm_step(const LstmParams& p, const Tensor& input, const LstmState& state);

/// States after consuming each input, in input order (no initial state entry).
std::vector<LstmState> lstm_run(const LstmParams& p, std::span<const Tensor> inputs,
                                const LstmState& start);

/// Position t gets [forward hidden at t, backward hidden at t]. Output length
/// equals input length; each vector has width 2 * hidden.
std::vector<Tensor> bilstm_encode(const LstmParams& fwd, const LstmParams& bwd,
                                  std::span<const Tensor> inputs);

}  // namespace langlab::nn
