#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>

#include "gla/gates.hpp"
#include "gla/tensor.hpp"

namespace gla {

// Inputs of one gated linear attention sequence.
class GlaInstance {
 public:
  GlaInstance() = default;
  GlaInstance(SeqTensor q, SeqTensor k, SeqTensor v, GateSeq gates);

  std::size_t length() const { return q_.rows(); }
  std::size_t dk() const { return q_.cols(); }
  std::size_t dv() const { return v_.cols(); }

  const SeqTensor& q() const { return q_; }
  const SeqTensor& k() const { return k_; }
  const SeqTensor& v() const { return v_; }
  const GateSeq& gates() const { return gates_; }

  friend bool operator==(const GlaInstance&, const GlaInstance&) = default;

 private:
  SeqTensor q_;
  SeqTensor k_;
  SeqTensor v_;
  GateSeq gates_;
};

// Gradients of the loss <O, dO> with respect to every input.
struct GradBundle {
  SeqTensor dq;
  SeqTensor dk;
  SeqTensor dv;
  SeqTensor dlog_alpha;
  SeqTensor dlog_beta;
  // Gradients w.r.t. the log cumulative decays, set by the closed-form passes.
  std::optional<SeqTensor> dlog_b;
  std::optional<SeqTensor> dlog_d;
};

struct BackwardOptions {
  // Debug switch: negates dlog_b so the gradient check can show it catches the wrong sign.
  bool flip_dlogb_sign = false;
};

// Exact operation and modeled slow-memory counters.
struct CostReport {
  std::uint64_t flops = 0;
  std::uint64_t state_writes = 0;
  std::uint64_t state_reads = 0;
  std::uint64_t recompute_passes = 0;

  std::uint64_t state_traffic() const { return state_writes + state_reads; }
  friend bool operator==(const CostReport&, const CostReport&) = default;
};

std::ostream& operator<<(std::ostream& os, const CostReport& cost);

void require_cotangent_shape(const GlaInstance& inst, const SeqTensor& d_out);

}  // namespace gla
