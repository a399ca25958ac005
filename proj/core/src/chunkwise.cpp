#include "gla/chunkwise.hpp"

#include <string>

#include "gemm.hpp"
#include "gla/parallel_form.hpp"

namespace gla {

std::string_view to_string(ChunkPolicy policy) {
  return policy == ChunkPolicy::materialize ? "materialize" : "recompute";
}

ChunkPolicy parse_policy(std::string_view text) {
  if (text == "materialize") return ChunkPolicy::materialize;
  if (text == "recompute") return ChunkPolicy::recompute;
  throw DomainError("unknown chunk policy '" + std::string(text) +
                    "' (expected materialize or recompute)");
}

namespace {

using u64 = std::uint64_t;

// Per-position quantities of one chunk. Nothing here is a dk x dv matrix, so
// keeping it across passes does not count as state traffic.
struct ChunkWork {
  ChunkDecays dec;
  std::size_t n = 0;
  std::vector<double> q_tilde;  // Q * B†      (n x dk)
  std::vector<double> k_tilde;  // K / B†      (n x dk)
  std::vector<double> v_tilde;  // V / D†      (n x dv)
  std::vector<double> k_prime;  // K * B'      (n x dk)
  std::vector<double> v_prime;  // V * D'      (n x dv)
  std::vector<double> attn;     // (Q~ K~^T) lower triangle, n x n
  // Backward only.
  std::vector<double> d_out_tilde;  // dO * D†  (n x dv)
  std::vector<double> d_attn;       // dO~ V~^T lower triangle, n x n
};

// rows x cols -> cols x rows, no arithmetic.
std::vector<double> transposed(const std::vector<double>& m, std::size_t rows, std::size_t cols) {
  std::vector<double> out(m.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = m[r * cols + c];
  return out;
}

// out[t][0..t] = sum_a x[t][a] * yT[a][0..t], ascending a.
void masked_gram(const std::vector<double>& x, const std::vector<double>& yT, std::size_t n,
                 std::size_t d, std::vector<double>& out, FlopCounter* counter) {
  out.assign(n * n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double* row = out.data() + t * n;
    const double* xt = x.data() + t * d;
    const std::size_t width = t + 1;
    for (std::size_t i = 0; i < width; ++i) row[i] = xt[0] * yT[i];
    for (std::size_t a = 1; a < d; ++a) {
      const double xa = xt[a];
      const double* ya = yT.data() + a * n;
      for (std::size_t i = 0; i < width; ++i) row[i] += xa * ya[i];
    }
    count(counter, width * (2 * d - 1));
  }
}

ChunkWork prepare_chunk(const GlaInstance& inst, ChunkDecays dec, FlopCounter* counter) {
  const std::size_t dk = inst.dk(), dv = inst.dv();
  ChunkWork w;
  w.n = dec.length;
  const std::size_t n = w.n;
  w.q_tilde.resize(n * dk);
  w.k_tilde.resize(n * dk);
  w.k_prime.resize(n * dk);
  w.v_tilde.resize(n * dv);
  w.v_prime.resize(n * dv);
  for (std::size_t t = 0; t < n; ++t) {
    auto q = inst.q().row(dec.start + t);
    auto k = inst.k().row(dec.start + t);
    auto v = inst.v().row(dec.start + t);
    auto bd = dec.b_dagger.row(t);
    auto bp = dec.b_prime.row(t);
    auto dd = dec.d_dagger.row(t);
    auto dp = dec.d_prime.row(t);
    for (std::size_t a = 0; a < dk; ++a) {
      w.q_tilde[t * dk + a] = q[a] * bd[a];
      w.k_tilde[t * dk + a] = k[a] / bd[a];
      w.k_prime[t * dk + a] = k[a] * bp[a];
    }
    for (std::size_t j = 0; j < dv; ++j) {
      w.v_tilde[t * dv + j] = v[j] / dd[j];
      w.v_prime[t * dv + j] = v[j] * dp[j];
    }
  }
  count(counter, 3 * static_cast<u64>(n) * dk + 2 * static_cast<u64>(n) * dv);
  masked_gram(w.q_tilde, transposed(w.k_tilde, n, dk), n, dk, w.attn, counter);
  w.dec = std::move(dec);
  return w;
}

// Writes the chunk's rows of O. `prev` is null for the zero initial state.
void chunk_output(const ChunkWork& w, const std::vector<double>* prev, std::size_t dk,
                  std::size_t dv, double* out, FlopCounter* counter) {
  for (std::size_t t = 0; t < w.n; ++t) {
    double* ot = out + t * dv;
    const double* arow = w.attn.data() + t * w.n;
    for (std::size_t j = 0; j < dv; ++j) ot[j] = arow[0] * w.v_tilde[j];
    for (std::size_t i = 1; i <= t; ++i) {
      const double a = arow[i];
      const double* vi = w.v_tilde.data() + i * dv;
      for (std::size_t j = 0; j < dv; ++j) ot[j] += a * vi[j];
    }
    count(counter, (2 * t + 1) * dv);
  }
  if (prev != nullptr) {
    detail::gemm(false, w.q_tilde.data(), dk, prev->data(), dv, out, dv, w.n, dv, dk, true);
    count(counter, static_cast<u64>(w.n) * (dv * (2 * dk - 1) + dv));
  }
  for (std::size_t t = 0; t < w.n; ++t) {
    double* ot = out + t * dv;
    auto dd = w.dec.d_dagger.row(t);
    for (std::size_t j = 0; j < dv; ++j) ot[j] *= dd[j];
  }
  count(counter, static_cast<u64>(w.n) * dv);
}

// S_next = (gamma_b^T gamma_d) * S_prev + K'^T V'.
std::vector<double> chunk_state_update(const ChunkWork& w, const std::vector<double>* prev,
                                       std::size_t dk, std::size_t dv, FlopCounter* counter) {
  std::vector<double> next(dk * dv);
  detail::gemm(true, w.k_prime.data(), dk, w.v_prime.data(), dv, next.data(), dv, dk, dv, w.n,
               false);
  count(counter, static_cast<u64>(dk) * dv * (2 * w.n - 1));
  if (prev != nullptr) {
    auto gb = w.dec.gamma_b.row(0);
    auto gd = w.dec.gamma_d.row(0);
    for (std::size_t a = 0; a < dk; ++a) {
      const double* srow = prev->data() + a * dv;
      double* row = next.data() + a * dv;
      for (std::size_t j = 0; j < dv; ++j) row[j] = (gb[a] * gd[j]) * srow[j] + row[j];
    }
    count(counter, 3 * static_cast<u64>(dk) * dv);
  }
  return next;
}

struct ForwardRun {
  std::vector<ChunkWork> works;
  std::vector<double> out;
  std::vector<std::vector<double>> states;  // materialize only
};

ForwardRun run_forward(const GlaInstance& inst, const ChunkPlan& plan, ChunkPolicy policy,
                       bool keep_works, FlopCounter* counter, CostReport& cost) {
  if (plan.length() != inst.length()) {
    throw ShapeError("chunk plan covers " + std::to_string(plan.length()) +
                     " positions but the instance has " + std::to_string(inst.length()));
  }
  const std::size_t dk = inst.dk(), dv = inst.dv();
  const CumulativeDecay decay = cumulative_log_decay(inst.gates(), counter);
  auto decays = chunk_relative_decays(decay, plan, counter);

  ForwardRun run;
  run.out.assign(inst.length() * dv, 0.0);
  if (keep_works) run.works.reserve(decays.size());
  std::vector<double> live;
  for (std::size_t c = 0; c < decays.size(); ++c) {
    ChunkWork w = prepare_chunk(inst, std::move(decays[c]), counter);
    const std::vector<double>* prev = c == 0 ? nullptr : &live;
    chunk_output(w, prev, dk, dv, run.out.data() + w.dec.start * dv, counter);
    live = chunk_state_update(w, prev, dk, dv, counter);
    if (keep_works) run.works.push_back(std::move(w));
    if (policy == ChunkPolicy::materialize) {
      run.states.push_back(live);
      ++cost.state_writes;
    }
  }
  return run;
}

}  // namespace

ChunkwiseForward forward_chunkwise(const GlaInstance& inst, const ChunkPlan& plan,
                                   ChunkPolicy policy) {
  FlopCounter counter;
  CostReport cost;
  ForwardRun run = run_forward(inst, plan, policy, false, &counter, cost);
  cost.flops = counter.flops;
  ChunkwiseForward result{SeqTensor(inst.length(), inst.dv(), std::move(run.out)), std::nullopt,
                          cost};
  if (policy == ChunkPolicy::materialize) {
    std::vector<State> states;
    states.reserve(run.states.size());
    for (auto& s : run.states) states.emplace_back(inst.dk(), inst.dv(), std::move(s));
    result.chunk_states = std::move(states);
  }
  return result;
}

ChunkwiseBackward backward_chunkwise(const GlaInstance& inst, const SeqTensor& d_out,
                                     const ChunkPlan& plan, ChunkPolicy policy,
                                     const BackwardOptions& backward) {
  require_cotangent_shape(inst, d_out);
  FlopCounter counter;
  CostReport cost;
  ForwardRun run = run_forward(inst, plan, policy, true, &counter, cost);
  const std::size_t L = inst.length(), dk = inst.dk(), dv = inst.dv();
  const std::size_t num_chunks = run.works.size();

  std::vector<double> dq(L * dk), dkey(L * dk), dval(L * dv);

  // Forward-direction sweep: dQ needs the state entering each chunk.
  std::vector<double> live;
  std::vector<double> dq_tilde(dk), inter(dk);
  for (std::size_t c = 0; c < num_chunks; ++c) {
    ChunkWork& w = run.works[c];
    const std::size_t n = w.n;
    const std::vector<double>* prev = nullptr;
    if (c > 0) {
      if (policy == ChunkPolicy::materialize) {
        prev = &run.states[c - 1];
        ++cost.state_reads;
      } else {
        prev = &live;
      }
    }

    w.d_out_tilde.resize(n * dv);
    for (std::size_t t = 0; t < n; ++t) {
      auto dot = d_out.row(w.dec.start + t);
      auto dd = w.dec.d_dagger.row(t);
      for (std::size_t j = 0; j < dv; ++j) w.d_out_tilde[t * dv + j] = dot[j] * dd[j];
    }
    count(&counter, static_cast<u64>(n) * dv);
    masked_gram(w.d_out_tilde, transposed(w.v_tilde, n, dv), n, dv, w.d_attn, &counter);

    const std::vector<double> prev_t =
        prev != nullptr ? transposed(*prev, dk, dv) : std::vector<double>{};
    for (std::size_t t = 0; t < n; ++t) {
      const double* drow = w.d_attn.data() + t * n;
      for (std::size_t a = 0; a < dk; ++a) dq_tilde[a] = drow[0] * w.k_tilde[a];
      for (std::size_t i = 1; i <= t; ++i) {
        const double g = drow[i];
        const double* ki = w.k_tilde.data() + i * dk;
        for (std::size_t a = 0; a < dk; ++a) dq_tilde[a] += g * ki[a];
      }
      count(&counter, (2 * t + 1) * dk);
      if (prev != nullptr) {
        const double* dot = w.d_out_tilde.data() + t * dv;
        for (std::size_t a = 0; a < dk; ++a) inter[a] = dot[0] * prev_t[a];
        for (std::size_t j = 1; j < dv; ++j) {
          const double g = dot[j];
          const double* scol = prev_t.data() + j * dk;
          for (std::size_t a = 0; a < dk; ++a) inter[a] += g * scol[a];
        }
        for (std::size_t a = 0; a < dk; ++a) dq_tilde[a] += inter[a];
        count(&counter, dk * (2 * dv - 1) + dk);
      }
      auto bd = w.dec.b_dagger.row(t);
      double* dqt = dq.data() + (w.dec.start + t) * dk;
      for (std::size_t a = 0; a < dk; ++a) dqt[a] = dq_tilde[a] * bd[a];
      count(&counter, dk);
    }

    if (policy == ChunkPolicy::recompute) {
      live = chunk_state_update(w, prev, dk, dv, &counter);
      ++cost.recompute_passes;
    }
  }

  // Reverse sweep: ds is the gradient w.r.t. the state leaving chunk c.
  std::vector<double> ds;
  bool has_ds = false;
  std::vector<double> acc_k(dk), acc_v(dv), tmp_v(dv);
  for (std::size_t c = num_chunks; c-- > 0;) {
    const ChunkWork& w = run.works[c];
    const std::size_t n = w.n;
    for (std::size_t i = 0; i < n; ++i) {
      const double* qi = w.q_tilde.data() + i * dk;
      const double* doi = w.d_out_tilde.data() + i * dv;
      const double g0 = w.d_attn[i * n + i];
      const double a0 = w.attn[i * n + i];
      for (std::size_t a = 0; a < dk; ++a) acc_k[a] = g0 * qi[a];
      for (std::size_t j = 0; j < dv; ++j) acc_v[j] = a0 * doi[j];
      for (std::size_t t = i + 1; t < n; ++t) {
        const double g = w.d_attn[t * n + i];
        const double at = w.attn[t * n + i];
        const double* qt = w.q_tilde.data() + t * dk;
        const double* dot = w.d_out_tilde.data() + t * dv;
        for (std::size_t a = 0; a < dk; ++a) acc_k[a] += g * qt[a];
        for (std::size_t j = 0; j < dv; ++j) acc_v[j] += at * dot[j];
      }
      count(&counter, (2 * (n - i) - 1) * (dk + dv));

      auto bd = w.dec.b_dagger.row(i);
      auto dd = w.dec.d_dagger.row(i);
      double* dki = dkey.data() + (w.dec.start + i) * dk;
      double* dvi = dval.data() + (w.dec.start + i) * dv;
      for (std::size_t a = 0; a < dk; ++a) dki[a] = acc_k[a] / bd[a];
      for (std::size_t j = 0; j < dv; ++j) dvi[j] = acc_v[j] / dd[j];
      count(&counter, dk + dv);

      if (has_ds) {
        // K' and V' feed the state leaving this chunk.
        auto bp = w.dec.b_prime.row(i);
        auto dp = w.dec.d_prime.row(i);
        const double* vpi = w.v_prime.data() + i * dv;
        const double* kpi = w.k_prime.data() + i * dk;
        for (std::size_t a = 0; a < dk; ++a) {
          const double* dsrow = ds.data() + a * dv;
          double s = dsrow[0] * vpi[0];
          for (std::size_t j = 1; j < dv; ++j) s += dsrow[j] * vpi[j];
          dki[a] += bp[a] * s;
        }
        for (std::size_t j = 0; j < dv; ++j) tmp_v[j] = kpi[0] * ds[j];
        for (std::size_t a = 1; a < dk; ++a) {
          const double ka = kpi[a];
          const double* dsrow = ds.data() + a * dv;
          for (std::size_t j = 0; j < dv; ++j) tmp_v[j] += ka * dsrow[j];
        }
        for (std::size_t j = 0; j < dv; ++j) dvi[j] += dp[j] * tmp_v[j];
        count(&counter, dk * (2 * dv + 1) + dv * (2 * dk + 1));
      }
    }

    if (c > 0) {
      // dS_prev = (gamma_b^T gamma_d) * dS + Q~^T dO~
      std::vector<double> next(dk * dv);
      detail::gemm(true, w.q_tilde.data(), dk, w.d_out_tilde.data(), dv, next.data(), dv, dk, dv,
                   n, false);
      count(&counter, static_cast<u64>(dk) * dv * (2 * n - 1));
      if (has_ds) {
        auto gb = w.dec.gamma_b.row(0);
        auto gd = w.dec.gamma_d.row(0);
        for (std::size_t a = 0; a < dk; ++a)
          for (std::size_t j = 0; j < dv; ++j)
            next[a * dv + j] = (gb[a] * gd[j]) * ds[a * dv + j] + next[a * dv + j];
        count(&counter, 3 * static_cast<u64>(dk) * dv);
      }
      ds = std::move(next);
      has_ds = true;
    }
  }

  const SeqTensor out(L, dv, std::move(run.out));
  GradBundle grads{SeqTensor(L, dk, std::move(dq)), SeqTensor(L, dk, std::move(dkey)),
                   SeqTensor(L, dv, std::move(dval)), {}, {}, std::nullopt, std::nullopt};
  assemble_gate_grads(inst, out, d_out, grads, backward, &counter);
  cost.flops = counter.flops;
  return ChunkwiseBackward{std::move(grads), cost};
}

CostReport predict_cost(std::size_t L, std::size_t dk_, std::size_t dv_, const ChunkPlan& plan,
                        ChunkPolicy policy, Pass pass) {
  if (plan.length() != L) throw ShapeError("chunk plan does not cover the sequence length");
  const u64 dk = dk_, dv = dv_, l = L;
  const u64 chunks = plan.num_chunks();
  CostReport cost;
  u64 flops = (l - 1) * (dk + dv);
  for (u64 c = 0; c < chunks; ++c) {
    const auto [s, e] = plan.boundaries()[c];
    const u64 n = e - s;
    const bool first = c == 0;
    const bool last = c + 1 == chunks;
    // Decay factors, scaled operands, masked Q~K~^T, intra output.
    flops += 4 * n * (dk + dv) + 2 * (dk + dv);
    flops += 3 * n * dk + 2 * n * dv;
    flops += n * (n + 1) / 2 * (2 * dk - 1) + n * n * dv;
    if (!first) flops += 2 * n * dk * dv;
    flops += n * dv;
    flops += dk * dv * (2 * n - 1) + (first ? 0 : 3 * dk * dv);
    if (pass == Pass::backward) {
      flops += n * dv + n * (n + 1) / 2 * (2 * dv - 1) + n * n * dk + n * dk;
      if (!first) flops += 2 * n * dk * dv;
      flops += n * n * (dk + dv) + n * (dk + dv);
      if (!last) flops += n * dk * (2 * dv + 1) + n * dv * (2 * dk + 1);
      if (!first) flops += dk * dv * (2 * n - 1) + (last ? 0 : 3 * dk * dv);
      if (policy == ChunkPolicy::recompute)
        flops += dk * dv * (2 * n - 1) + (first ? 0 : 3 * dk * dv);
    }
  }
  if (pass == Pass::backward) flops += 3 * l * (dk + dv) + (l - 1) * (dk + dv);
  cost.flops = flops;
  if (policy == ChunkPolicy::materialize) {
    cost.state_writes = chunks;
    if (pass == Pass::backward) cost.state_reads = chunks - 1;
  } else if (pass == Pass::backward) {
    cost.recompute_passes = chunks;
  }
  return cost;
}

}  // namespace gla
