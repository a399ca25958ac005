#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "gla/tensor.hpp"

namespace gla {

// Log-gates for one sequence. log_alpha acts on the key dimension of the
// state, log_beta on the value dimension. Every entry is finite and <= 0.
class GateSeq {
 public:
  GateSeq() = default;
  GateSeq(SeqTensor log_alpha, SeqTensor log_beta);

  static GateSeq identity(std::size_t L, std::size_t dk, std::size_t dv);

  std::size_t length() const { return log_alpha_.rows(); }
  std::size_t dk() const { return log_alpha_.cols(); }
  std::size_t dv() const { return log_beta_.cols(); }
  const SeqTensor& log_alpha() const { return log_alpha_; }
  const SeqTensor& log_beta() const { return log_beta_; }

  friend bool operator==(const GateSeq&, const GateSeq&) = default;

 private:
  SeqTensor log_alpha_;
  SeqTensor log_beta_;
};

// Running log-sums log_b[t] = sum_{j<=t} log_alpha[j] (and log_d for beta).
struct CumulativeDecay {
  SeqTensor log_b;
  SeqTensor log_d;

  std::size_t length() const { return log_b.rows(); }
};

// Contiguous half-open chunks covering [0, L). All chunks have the nominal
// length except possibly a shorter final one.
class ChunkPlan {
 public:
  ChunkPlan(std::size_t L, std::size_t chunk);

  std::size_t length() const { return length_; }
  std::size_t chunk() const { return chunk_; }
  std::size_t num_chunks() const { return bounds_.size(); }
  const std::vector<std::pair<std::size_t, std::size_t>>& boundaries() const { return bounds_; }

 private:
  std::size_t length_;
  std::size_t chunk_;
  std::vector<std::pair<std::size_t, std::size_t>> bounds_;
};

// Chunk-relative decay factors for chunk [start, end). With p = start - 1
// (log_b[-1] := 0) and e = end - 1:
//   b_dagger[j] = exp(log_b[start+j] - log_b[p])   decay from the chunk start
//   b_prime[j]  = exp(log_b[e] - log_b[start+j])   decay to the chunk end
//   gamma_b     = exp(log_b[e] - log_b[p])         whole-chunk decay
// and likewise for the value side. b_prime[j] * b_dagger[j] == gamma_b.
struct ChunkDecays {
  std::size_t index = 0;
  std::size_t start = 0;
  std::size_t length = 0;
  SeqTensor b_prime;
  SeqTensor b_dagger;
  SeqTensor d_prime;
  SeqTensor d_dagger;
  SeqTensor gamma_b;  // 1 x dk
  SeqTensor gamma_d;  // 1 x dv
};

CumulativeDecay cumulative_log_decay(const GateSeq& gates, FlopCounter* counter = nullptr);

std::vector<ChunkDecays> chunk_relative_decays(const CumulativeDecay& decay, const ChunkPlan& plan,
                                               FlopCounter* counter = nullptr);

}  // namespace gla
