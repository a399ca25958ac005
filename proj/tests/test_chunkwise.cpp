#include <gtest/gtest.h>

#include "gla/gla.hpp"
#include "oracles.hpp"

namespace gla {
namespace {

constexpr ChunkPolicy kPolicies[] = {ChunkPolicy::materialize, ChunkPolicy::recompute};

TEST(Chunkwise, WholeSequenceChunkMatchesParallel) {
  const auto inst = make_instance(ModelKind::general(), 16, 3, 3, 1);
  EXPECT_LE(relative_error(forward_chunkwise(inst, ChunkPlan(16, 16), ChunkPolicy::materialize).out,
                           forward_parallel(inst)),
            1e-12);
}

TEST(Chunkwise, UnitChunksMatchRecurrent) {
  const auto inst = make_instance(ModelKind::general(), 16, 3, 3, 2);
  EXPECT_LE(relative_error(forward_chunkwise(inst, ChunkPlan(16, 1), ChunkPolicy::recompute).out,
                           forward_recurrent(inst).out),
            1e-12);
}

TEST(Chunkwise, RaggedFinalChunk) {
  const auto inst = make_instance(ModelKind::general(), 8, 2, 3, 3);
  EXPECT_LE(relative_error(forward_chunkwise(inst, ChunkPlan(8, 3), ChunkPolicy::materialize).out,
                           oracle::unrolled(inst)),
            1e-12);
}

TEST(Chunkwise, EveryChunkSizeMatchesRecurrent) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto inst = make_instance(ModelKind::general(), 21, 5, 4, seed);
    const auto ref = forward_recurrent(inst).out;
    for (std::size_t c = 1; c <= 21; ++c)
      for (ChunkPolicy p : kPolicies)
        EXPECT_LE(relative_error(forward_chunkwise(inst, ChunkPlan(21, c), p).out, ref), 1e-9)
            << "C=" << c;
  }
}

TEST(Chunkwise, Reductions) {
  const auto vanilla = make_instance(ModelKind::vanilla(), 24, 4, 3, 5);
  const auto retnet = make_instance(ModelKind::retnet(0.9), 24, 4, 3, 5);
  for (ChunkPolicy p : kPolicies) {
    EXPECT_LE(relative_error(forward_chunkwise(vanilla, ChunkPlan(24, 5), p).out,
                             oracle::masked_attention(vanilla.q(), vanilla.k(), vanilla.v())),
              1e-12);
    EXPECT_LE(relative_error(forward_chunkwise(retnet, ChunkPlan(24, 5), p).out,
                             oracle::retention(retnet.q(), retnet.k(), retnet.v(), 0.9)),
              1e-10);
  }
}

TEST(Chunkwise, StrongDecayBeyondParallelGuard) {
  const auto inst = make_instance(ModelKind::general(), 2048, 2, 2, 0, 0.05);
  EXPECT_THROW(forward_parallel(inst), DecayRangeError);
  EXPECT_LE(relative_error(forward_chunkwise(inst, ChunkPlan(2048, 32), ChunkPolicy::recompute).out,
                           forward_recurrent(inst).out),
            1e-9);
}

TEST(Chunkwise, MaterializedStatesMatchRecurrentStates) {
  const auto inst = make_instance(ModelKind::general(), 8, 2, 3, 4);
  const auto fwd = forward_chunkwise(inst, ChunkPlan(8, 2), ChunkPolicy::materialize);
  ASSERT_TRUE(fwd.chunk_states.has_value());
  ASSERT_EQ(fwd.chunk_states->size(), 4u);
  EXPECT_EQ(fwd.cost.state_writes, 4u);
  const auto trace = forward_recurrent(inst, true);
  for (std::size_t c = 0; c < 4; ++c)
    EXPECT_LE(relative_error((*fwd.chunk_states)[c].matrix(), (*trace.states)[2 * c + 1].matrix()),
              1e-12);
}

TEST(Chunkwise, RecomputeKeepsNoStates) {
  const auto inst = make_instance(ModelKind::general(), 8, 2, 3, 4);
  const auto fwd = forward_chunkwise(inst, ChunkPlan(8, 2), ChunkPolicy::recompute);
  EXPECT_FALSE(fwd.chunk_states.has_value());
  EXPECT_EQ(fwd.cost.state_writes, 0u);
  const auto bwd = backward_chunkwise(inst, make_cotangent(8, 3, 1), ChunkPlan(8, 2),
                                      ChunkPolicy::recompute);
  EXPECT_EQ(bwd.cost.state_writes, 0u);
  EXPECT_EQ(bwd.cost.state_reads, 0u);
  EXPECT_EQ(bwd.cost.recompute_passes, 4u);
}

TEST(Chunkwise, MaterializeBackwardReadsEarlierStates) {
  const auto inst = make_instance(ModelKind::general(), 8, 2, 3, 4);
  const auto bwd = backward_chunkwise(inst, make_cotangent(8, 3, 1), ChunkPlan(8, 2),
                                      ChunkPolicy::materialize);
  EXPECT_EQ(bwd.cost.state_writes, 4u);
  EXPECT_EQ(bwd.cost.state_reads, 3u);
  EXPECT_EQ(bwd.cost.recompute_passes, 0u);
}

TEST(Chunkwise, MeasuredCostEqualsPrediction) {
  struct Shape {
    std::size_t L, dk, dv, C;
  };
  const Shape shapes[] = {{1, 1, 1, 1},  {2, 1, 3, 1},  {7, 3, 2, 3},   {8, 2, 2, 4},
                          {9, 4, 1, 2},  {12, 2, 5, 5}, {16, 3, 3, 16}, {17, 2, 4, 4},
                          {20, 1, 2, 7}, {24, 4, 4, 6}, {31, 3, 1, 8},  {33, 2, 2, 32}};
  for (const auto& s : shapes) {
    const auto inst = make_instance(ModelKind::general(), s.L, s.dk, s.dv, s.L);
    const ChunkPlan plan(s.L, s.C);
    for (ChunkPolicy p : kPolicies) {
      EXPECT_EQ(forward_chunkwise(inst, plan, p).cost,
                predict_cost(s.L, s.dk, s.dv, plan, p, Pass::forward));
      EXPECT_EQ(backward_chunkwise(inst, make_cotangent(s.L, s.dv, 1), plan, p).cost,
                predict_cost(s.L, s.dk, s.dv, plan, p, Pass::backward));
    }
  }
}

TEST(Chunkwise, FrozenForwardFlopCount) {
  // L=8, C=4, dk=dv=2, two chunks:
  //   cumulative decay 7*4 = 28
  //   chunk 1: factors 72, scaled operands 40, masked scores 30, intra 32,
  //            output scale 8, state 28 = 210
  //   chunk 2: chunk 1 + inter 32 + state carry 12 = 254
  const auto inst = make_instance(ModelKind::general(), 8, 2, 2, 0);
  EXPECT_EQ(forward_chunkwise(inst, ChunkPlan(8, 4), ChunkPolicy::materialize).cost.flops, 492u);
}

TEST(Chunkwise, PlanMustCoverSequence) {
  const auto inst = make_instance(ModelKind::general(), 8, 2, 2, 0);
  EXPECT_THROW(forward_chunkwise(inst, ChunkPlan(9, 4), ChunkPolicy::materialize), ShapeError);
}

TEST(ChunkwiseBackward, MatchesFiniteDifferences) {
  const auto inst = shift_gates_for_fd(make_instance(ModelKind::general(), 12, 3, 2, 8), 1e-5);
  const auto d_out = make_cotangent(12, 2, 9);
  const auto fd = backward_recurrent_fd(inst, d_out, 1e-5);
  for (ChunkPolicy p : kPolicies) {
    const auto g = backward_chunkwise(inst, d_out, ChunkPlan(12, 4), p).grads;
    EXPECT_LE(relative_error(g.dq, fd.dq), 1e-6);
    EXPECT_LE(relative_error(g.dk, fd.dk), 1e-6);
    EXPECT_LE(relative_error(g.dv, fd.dv), 1e-6);
    EXPECT_LE(relative_error(g.dlog_alpha, fd.dlog_alpha), 1e-6);
    EXPECT_LE(relative_error(g.dlog_beta, fd.dlog_beta), 1e-6);
  }
}

TEST(ChunkwiseBackward, PoliciesAgree) {
  const auto inst = make_instance(ModelKind::general(), 19, 3, 4, 2);
  const auto d_out = make_cotangent(19, 4, 3);
  for (std::size_t c : {1, 4, 7, 19}) {
    const auto a = backward_chunkwise(inst, d_out, ChunkPlan(19, c), ChunkPolicy::materialize).grads;
    const auto b = backward_chunkwise(inst, d_out, ChunkPlan(19, c), ChunkPolicy::recompute).grads;
    EXPECT_LE(relative_error(a.dq, b.dq), 1e-12);
    EXPECT_LE(relative_error(a.dk, b.dk), 1e-12);
    EXPECT_LE(relative_error(a.dv, b.dv), 1e-12);
    EXPECT_LE(relative_error(a.dlog_alpha, b.dlog_alpha), 1e-12);
    EXPECT_LE(relative_error(a.dlog_beta, b.dlog_beta), 1e-12);
  }
}

TEST(ChunkwiseBackward, IndependentOfChunkSize) {
  const auto inst = make_instance(ModelKind::general(), 15, 2, 3, 5);
  const auto d_out = make_cotangent(15, 3, 6);
  const auto ref = backward_recurrent_exact(inst, d_out);
  for (std::size_t c = 1; c <= 15; ++c) {
    const auto g = backward_chunkwise(inst, d_out, ChunkPlan(15, c), ChunkPolicy::materialize).grads;
    EXPECT_LE(relative_error(g.dq, ref.dq), 1e-9) << "C=" << c;
    EXPECT_LE(relative_error(g.dk, ref.dk), 1e-9) << "C=" << c;
    EXPECT_LE(relative_error(g.dv, ref.dv), 1e-9) << "C=" << c;
    EXPECT_LE(relative_error(g.dlog_alpha, ref.dlog_alpha), 1e-9) << "C=" << c;
    EXPECT_LE(relative_error(g.dlog_beta, ref.dlog_beta), 1e-9) << "C=" << c;
  }
}

TEST(ChunkPolicy, Parse) {
  EXPECT_EQ(parse_policy("recompute"), ChunkPolicy::recompute);
  EXPECT_EQ(to_string(ChunkPolicy::materialize), "materialize");
  EXPECT_THROW(parse_policy("lazy"), DomainError);
}

}  // namespace
}  // namespace gla
