#pragma once

#include <stdexcept>

#include "gla/instance.hpp"

namespace gla {

// Raised when the cumulative log-decay spans more than the configured bound.
class DecayRangeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParallelOptions {
  // Largest |log_b[t] - log_b[i]| (or log_d) the quadratic form accepts.
  double max_exponent = 600.0;
};

// Largest within-sequence log-decay span over both gate sides.
double decay_dynamic_range(const CumulativeDecay& decay);

// O(L^2) form. o_t = sum_{i<=t} <q_t, k_i * b_t/b_i> (v_i * d_t/d_i), with every
// ratio taken as exp of a log-sum difference. The causal mask is the loop bound.
SeqTensor forward_parallel(const GlaInstance& inst, const ParallelOptions& options = {},
                           CostReport* cost = nullptr);

CostReport predict_parallel_cost(std::size_t L, std::size_t dk, std::size_t dv);

GradBundle backward_parallel(const GlaInstance& inst, const SeqTensor& d_out,
                             const ParallelOptions& options = {},
                             const BackwardOptions& backward = {});

// Closed-form gate gradients from the query/key/value gradients:
//   dlog_b[t] = q_t * dq_t - k_t * dk_t,   dlog_alpha = suffix_sum(dlog_b)
//   dlog_d[t] = o_t * do_t - v_t * dv_t,   dlog_beta  = suffix_sum(dlog_d)
// Fills dlog_b, dlog_d, dlog_alpha and dlog_beta of `grads`.
void assemble_gate_grads(const GlaInstance& inst, const SeqTensor& out, const SeqTensor& d_out,
                         GradBundle& grads, const BackwardOptions& backward = {},
                         FlopCounter* counter = nullptr);

}  // namespace gla
