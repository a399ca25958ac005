#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "gla/instance.hpp"

namespace gla {

// materialize: every chunk-boundary state is written during the forward pass
// and read back by the backward pass. recompute: only the live state is kept
// and the backward pass replays the inter-chunk recurrence.
enum class ChunkPolicy { materialize, recompute };

std::string_view to_string(ChunkPolicy policy);
ChunkPolicy parse_policy(std::string_view text);

enum class Pass { forward, backward };

struct ChunkwiseForward {
  SeqTensor out;
  // S_[1] ... S_[N] (the state after each chunk), materialize only.
  std::optional<std::vector<State>> chunk_states;
  CostReport cost;
};

struct ChunkwiseBackward {
  GradBundle grads;
  // Includes the forward pass the backward runs internally.
  CostReport cost;
};

// Per chunk [s, e) with incoming state S:
//   O = ((Q * B†) S) * D† + ((Q~ K~^T) masked) V~ * D†,  Q~ = Q * B†, K~ = K / B†, V~ = V / D†
//   S_next = (gamma_b^T gamma_d) * S + (K * B')^T (V * D')
ChunkwiseForward forward_chunkwise(const GlaInstance& inst, const ChunkPlan& plan,
                                   ChunkPolicy policy);

ChunkwiseBackward backward_chunkwise(const GlaInstance& inst, const SeqTensor& d_out,
                                     const ChunkPlan& plan, ChunkPolicy policy,
                                     const BackwardOptions& backward = {});

// Closed-form counters; the instrumented passes must match these exactly.
CostReport predict_cost(std::size_t L, std::size_t dk, std::size_t dv, const ChunkPlan& plan,
                        ChunkPolicy policy, Pass pass = Pass::forward);

}  // namespace gla
