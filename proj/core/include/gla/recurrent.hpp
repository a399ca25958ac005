#pragma once

#include <optional>
#include <vector>

#include "gla/instance.hpp"

namespace gla {

struct ForwardTrace {
  SeqTensor out;
  // S_1 ... S_L when requested.
  std::optional<std::vector<State>> states;
  CostReport cost;
};

// Literal step-by-step recurrence:
//   S_t = (alpha_t^T beta_t) * S_{t-1} + k_t^T v_t,   o_t = q_t S_t,   S_0 = 0.
ForwardTrace forward_recurrent(const GlaInstance& inst, bool keep_states = false);

// Counter values forward_recurrent reports.
CostReport predict_recurrent_cost(std::size_t L, std::size_t dk, std::size_t dv);

// Loss <O, dO> of the recurrent form.
double recurrent_loss(const GlaInstance& inst, const SeqTensor& d_out);

// Reverse-mode through the stored states; exact gradients of <O, dO>.
GradBundle backward_recurrent_exact(const GlaInstance& inst, const SeqTensor& d_out);

// Central differences of <O, dO>, one scalar at a time. Log-gates are
// perturbed directly, so the result is in log-gate coordinates.
GradBundle backward_recurrent_fd(const GlaInstance& inst, const SeqTensor& d_out,
                                 double eps = 1e-5);

}  // namespace gla
