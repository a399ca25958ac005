#include "gla/parallel_form.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gla {

namespace {

void guard_range(const CumulativeDecay& decay, const ParallelOptions& options) {
  const double range = decay_dynamic_range(decay);
  if (range > options.max_exponent) {
    std::ostringstream msg;
    msg << "decay dynamic range too large for parallel form; use chunkwise (log-decay span "
        << range << " exceeds " << options.max_exponent << ")";
    throw DecayRangeError(msg.str());
  }
}

std::vector<double> parallel_output(const GlaInstance& inst, const CumulativeDecay& decay,
                                    FlopCounter* counter) {
  const std::size_t L = inst.length(), dk = inst.dk(), dv = inst.dv();
  std::vector<double> out(L * dv, 0.0);
  std::vector<double> ed(dv);
  for (std::size_t t = 0; t < L; ++t) {
    auto qt = inst.q().row(t);
    auto lbt = decay.log_b.row(t);
    auto ldt = decay.log_d.row(t);
    double* ot = out.data() + t * dv;
    for (std::size_t i = 0; i <= t; ++i) {
      auto ki = inst.k().row(i);
      auto lbi = decay.log_b.row(i);
      auto ldi = decay.log_d.row(i);
      double w = qt[0] * ki[0] * std::exp(lbt[0] - lbi[0]);
      for (std::size_t c = 1; c < dk; ++c) w += qt[c] * ki[c] * std::exp(lbt[c] - lbi[c]);
      for (std::size_t c = 0; c < dv; ++c) ed[c] = std::exp(ldt[c] - ldi[c]);
      auto vi = inst.v().row(i);
      if (i == 0) {
        for (std::size_t c = 0; c < dv; ++c) ot[c] = w * vi[c] * ed[c];
      } else {
        for (std::size_t c = 0; c < dv; ++c) ot[c] += w * vi[c] * ed[c];
      }
      count(counter, 5 * dk - 1 + 4 * dv + (i == 0 ? 0 : dv));
    }
  }
  return out;
}

}  // namespace

double decay_dynamic_range(const CumulativeDecay& decay) {
  double range = 0.0;
  for (const SeqTensor* side : {&decay.log_b, &decay.log_d}) {
    auto first = side->row(0);
    auto last = side->row(side->rows() - 1);
    for (std::size_t c = 0; c < side->cols(); ++c) range = std::max(range, first[c] - last[c]);
  }
  return range;
}

SeqTensor forward_parallel(const GlaInstance& inst, const ParallelOptions& options,
                           CostReport* cost) {
  FlopCounter counter;
  const CumulativeDecay decay = cumulative_log_decay(inst.gates(), &counter);
  guard_range(decay, options);
  auto out = parallel_output(inst, decay, &counter);
  if (cost != nullptr) *cost = CostReport{counter.flops, 0, 0, 0};
  return SeqTensor(inst.length(), inst.dv(), std::move(out));
}

CostReport predict_parallel_cost(std::size_t L, std::size_t dk, std::size_t dv) {
  const std::uint64_t l = L;
  const std::uint64_t pairs = l * (l + 1) / 2;
  const std::uint64_t flops =
      (l - 1) * (dk + dv) + pairs * (5 * dk - 1 + 4 * dv) + dv * (l * (l - 1) / 2);
  return CostReport{flops, 0, 0, 0};
}

GradBundle backward_parallel(const GlaInstance& inst, const SeqTensor& d_out,
                             const ParallelOptions& options, const BackwardOptions& backward) {
  require_cotangent_shape(inst, d_out);
  const CumulativeDecay decay = cumulative_log_decay(inst.gates());
  guard_range(decay, options);
  const std::size_t L = inst.length(), dk = inst.dk(), dv = inst.dv();
  const SeqTensor out(L, dv, parallel_output(inst, decay, nullptr));

  std::vector<double> dq(L * dk, 0.0), dkey(L * dk, 0.0), dval(L * dv, 0.0);
  std::vector<double> eb(dk), ed(dv);
  for (std::size_t t = 0; t < L; ++t) {
    auto qt = inst.q().row(t);
    auto dot = d_out.row(t);
    auto lbt = decay.log_b.row(t);
    auto ldt = decay.log_d.row(t);
    for (std::size_t i = 0; i <= t; ++i) {
      auto ki = inst.k().row(i);
      auto vi = inst.v().row(i);
      auto lbi = decay.log_b.row(i);
      auto ldi = decay.log_d.row(i);
      double w = 0.0;
      for (std::size_t c = 0; c < dk; ++c) {
        eb[c] = std::exp(lbt[c] - lbi[c]);
        w += qt[c] * ki[c] * eb[c];
      }
      double u = 0.0;
      for (std::size_t c = 0; c < dv; ++c) {
        ed[c] = std::exp(ldt[c] - ldi[c]);
        u += dot[c] * vi[c] * ed[c];
      }
      // w = <q_t, k_i b_t/b_i>, u = <do_t, v_i d_t/d_i>
      for (std::size_t c = 0; c < dk; ++c) {
        dq[t * dk + c] += u * ki[c] * eb[c];
        dkey[i * dk + c] += u * qt[c] * eb[c];
      }
      for (std::size_t c = 0; c < dv; ++c) dval[i * dv + c] += w * dot[c] * ed[c];
    }
  }
  GradBundle grads{SeqTensor(L, dk, std::move(dq)), SeqTensor(L, dk, std::move(dkey)),
                   SeqTensor(L, dv, std::move(dval)), {}, {}, std::nullopt, std::nullopt};
  assemble_gate_grads(inst, out, d_out, grads, backward);
  return grads;
}

void assemble_gate_grads(const GlaInstance& inst, const SeqTensor& out, const SeqTensor& d_out,
                         GradBundle& grads, const BackwardOptions& backward,
                         FlopCounter* counter) {
  const std::size_t L = inst.length(), dk = inst.dk(), dv = inst.dv();
  std::vector<double> dlog_b(L * dk), dlog_d(L * dv);
  for (std::size_t t = 0; t < L; ++t) {
    auto qt = inst.q().row(t);
    auto kt = inst.k().row(t);
    auto dqt = grads.dq.row(t);
    auto dkt = grads.dk.row(t);
    for (std::size_t c = 0; c < dk; ++c) {
      // b_t scales the query path and 1/b_t the key path, hence q positive.
      dlog_b[t * dk + c] = backward.flip_dlogb_sign ? kt[c] * dkt[c] - qt[c] * dqt[c]
                                                    : qt[c] * dqt[c] - kt[c] * dkt[c];
    }
    auto ot = out.row(t);
    auto dot = d_out.row(t);
    auto vt = inst.v().row(t);
    auto dvt = grads.dv.row(t);
    for (std::size_t c = 0; c < dv; ++c) dlog_d[t * dv + c] = ot[c] * dot[c] - vt[c] * dvt[c];
  }
  count(counter, 3 * static_cast<std::uint64_t>(L) * (dk + dv));
  grads.dlog_b = SeqTensor(L, dk, std::move(dlog_b));
  grads.dlog_d = SeqTensor(L, dv, std::move(dlog_d));
  grads.dlog_alpha = suffix_sum(*grads.dlog_b, counter);
  grads.dlog_beta = suffix_sum(*grads.dlog_d, counter);
}

}  // namespace gla
