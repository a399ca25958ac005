#include "gla/recurrent.hpp"

#include <array>
#include <cmath>

#include "gla/parallel.hpp"

namespace gla {

namespace {

// Plain copies of the inputs. The finite-difference oracle perturbs these
// directly, which may step a log-gate slightly above zero.
struct RawInputs {
  std::size_t L, dk, dv;
  std::vector<double> q, k, v, log_alpha, log_beta;

  explicit RawInputs(const GlaInstance& inst)
      : L(inst.length()),
        dk(inst.dk()),
        dv(inst.dv()),
        q(inst.q().to_vector()),
        k(inst.k().to_vector()),
        v(inst.v().to_vector()),
        log_alpha(inst.gates().log_alpha().to_vector()),
        log_beta(inst.gates().log_beta().to_vector()) {}
};

// Runs the recurrence, writing O (L x dv) and optionally every state.
void run_recurrence(const RawInputs& in, std::vector<double>& out,
                    std::vector<std::vector<double>>* states, FlopCounter* counter) {
  const std::size_t dk = in.dk, dv = in.dv;
  std::vector<double> state(dk * dv, 0.0);
  std::vector<double> ga(dk), gb(dv);
  out.assign(in.L * dv, 0.0);
  if (states != nullptr) states->clear();
  for (std::size_t t = 0; t < in.L; ++t) {
    const double* la = in.log_alpha.data() + t * dk;
    const double* lb = in.log_beta.data() + t * dv;
    const double* qt = in.q.data() + t * dk;
    const double* kt = in.k.data() + t * dk;
    const double* vt = in.v.data() + t * dv;
    double* ot = out.data() + t * dv;
    for (std::size_t i = 0; i < dk; ++i) ga[i] = std::exp(la[i]);
    for (std::size_t j = 0; j < dv; ++j) gb[j] = std::exp(lb[j]);
    count(counter, dk + dv);
    for (std::size_t i = 0; i < dk; ++i) {
      double* srow = state.data() + i * dv;
      const double a = ga[i];
      const double ki = kt[i];
      for (std::size_t j = 0; j < dv; ++j) srow[j] = (a * gb[j]) * srow[j] + ki * vt[j];
      const double qi = qt[i];
      if (i == 0) {
        for (std::size_t j = 0; j < dv; ++j) ot[j] = qi * srow[j];
        count(counter, 4 * dv + dv);
      } else {
        for (std::size_t j = 0; j < dv; ++j) ot[j] += qi * srow[j];
        count(counter, 4 * dv + 2 * dv);
      }
    }
    if (states != nullptr) states->push_back(state);
  }
}

double raw_loss(const RawInputs& in, std::span<const double> d_out) {
  std::vector<double> out;
  run_recurrence(in, out, nullptr, nullptr);
  double loss = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) loss += out[i] * d_out[i];
  return loss;
}

}  // namespace

CostReport predict_recurrent_cost(std::size_t L, std::size_t dk, std::size_t dv) {
  const std::uint64_t per_step = dk + dv + 4 * static_cast<std::uint64_t>(dk) * dv +
                                 static_cast<std::uint64_t>(dv) * (2 * dk - 1);
  return CostReport{static_cast<std::uint64_t>(L) * per_step, 0, 0, 0};
}

ForwardTrace forward_recurrent(const GlaInstance& inst, bool keep_states) {
  RawInputs in(inst);
  std::vector<double> out;
  std::vector<std::vector<double>> raw_states;
  FlopCounter counter;
  run_recurrence(in, out, keep_states ? &raw_states : nullptr, &counter);
  ForwardTrace trace{SeqTensor(in.L, in.dv, std::move(out)), std::nullopt,
                     CostReport{counter.flops, 0, 0, 0}};
  if (keep_states) {
    std::vector<State> states;
    states.reserve(raw_states.size());
    for (auto& s : raw_states) states.emplace_back(in.dk, in.dv, std::move(s));
    trace.states = std::move(states);
  }
  return trace;
}

double recurrent_loss(const GlaInstance& inst, const SeqTensor& d_out) {
  require_cotangent_shape(inst, d_out);
  return raw_loss(RawInputs(inst), d_out.values());
}

GradBundle backward_recurrent_exact(const GlaInstance& inst, const SeqTensor& d_out) {
  require_cotangent_shape(inst, d_out);
  const RawInputs in(inst);
  const std::size_t L = in.L, dk = in.dk, dv = in.dv;
  std::vector<double> out;
  std::vector<std::vector<double>> states;
  run_recurrence(in, out, &states, nullptr);

  std::vector<double> dq(L * dk), dkey(L * dk), dval(L * dv), dla(L * dk, 0.0), dlb(L * dv, 0.0);
  std::vector<double> ds(dk * dv, 0.0);
  std::vector<double> ga(dk), gb(dv);
  const auto dO = d_out.values();
  for (std::size_t t = L; t-- > 0;) {
    const double* qt = in.q.data() + t * dk;
    const double* kt = in.k.data() + t * dk;
    const double* vt = in.v.data() + t * dv;
    const double* dot = dO.data() + t * dv;
    const std::vector<double>& st = states[t];

    // o_t = q_t S_t contributes q_t^T do_t to dS_t.
    for (std::size_t i = 0; i < dk; ++i)
      for (std::size_t j = 0; j < dv; ++j) ds[i * dv + j] += qt[i] * dot[j];

    for (std::size_t i = 0; i < dk; ++i) {
      double acc_q = 0.0, acc_k = 0.0;
      for (std::size_t j = 0; j < dv; ++j) {
        acc_q += st[i * dv + j] * dot[j];
        acc_k += ds[i * dv + j] * vt[j];
      }
      dq[t * dk + i] = acc_q;
      dkey[t * dk + i] = acc_k;
    }
    for (std::size_t j = 0; j < dv; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < dk; ++i) acc += kt[i] * ds[i * dv + j];
      dval[t * dv + j] = acc;
    }

    for (std::size_t i = 0; i < dk; ++i) ga[i] = std::exp(in.log_alpha[t * dk + i]);
    for (std::size_t j = 0; j < dv; ++j) gb[j] = std::exp(in.log_beta[t * dv + j]);
    // dG_t = dS_t * S_{t-1}; d log G_t[i][j] = G_t[i][j] dG_t[i][j] feeds both gate rows.
    if (t > 0) {
      const std::vector<double>& prev = states[t - 1];
      for (std::size_t i = 0; i < dk; ++i) {
        for (std::size_t j = 0; j < dv; ++j) {
          const double g = ga[i] * gb[j] * ds[i * dv + j] * prev[i * dv + j];
          dla[t * dk + i] += g;
          dlb[t * dv + j] += g;
        }
      }
    }
    for (std::size_t i = 0; i < dk; ++i)
      for (std::size_t j = 0; j < dv; ++j) ds[i * dv + j] *= ga[i] * gb[j];
  }
  return GradBundle{SeqTensor(L, dk, std::move(dq)), SeqTensor(L, dk, std::move(dkey)),
                    SeqTensor(L, dv, std::move(dval)), SeqTensor(L, dk, std::move(dla)),
                    SeqTensor(L, dv, std::move(dlb)), std::nullopt, std::nullopt};
}

GradBundle backward_recurrent_fd(const GlaInstance& inst, const SeqTensor& d_out, double eps) {
  require_cotangent_shape(inst, d_out);
  if (!(eps > 0.0)) throw DomainError("finite-difference step must be positive");
  const RawInputs base(inst);
  const auto dO = d_out.values();

  using Field = std::vector<double> RawInputs::*;
  const std::array<Field, 5> fields{&RawInputs::q, &RawInputs::k, &RawInputs::v,
                                    &RawInputs::log_alpha, &RawInputs::log_beta};
  std::array<std::vector<double>, 5> grads;
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t f = 0; f < fields.size(); ++f) {
    const std::size_t n = (base.*fields[f]).size();
    grads[f].assign(n, 0.0);
    for (std::size_t e = 0; e < n; ++e) jobs.emplace_back(f, e);
  }
  parallel_for(jobs.size(), [&](std::size_t job) {
    const auto [f, e] = jobs[job];
    RawInputs probe = base;
    double& x = (probe.*fields[f])[e];
    const double x0 = x;
    x = x0 + eps;
    const double plus = raw_loss(probe, dO);
    x = x0 - eps;
    const double minus = raw_loss(probe, dO);
    grads[f][e] = (plus - minus) / (2.0 * eps);
  });

  const std::size_t L = base.L, dk = base.dk, dv = base.dv;
  return GradBundle{SeqTensor(L, dk, std::move(grads[0])), SeqTensor(L, dk, std::move(grads[1])),
                    SeqTensor(L, dv, std::move(grads[2])), SeqTensor(L, dk, std::move(grads[3])),
                    SeqTensor(L, dv, std::move(grads[4])), std::nullopt, std::nullopt};
}

}  // namespace gla
