#include "gla/gates.hpp"

#include <algorithm>
#include <cmath>

namespace gla {

GateSeq::GateSeq(SeqTensor log_alpha, SeqTensor log_beta)
    : log_alpha_(std::move(log_alpha)), log_beta_(std::move(log_beta)) {
  if (log_alpha_.rows() != log_beta_.rows()) {
    throw ShapeError("log_alpha has " + std::to_string(log_alpha_.rows()) +
                     " rows but log_beta has " + std::to_string(log_beta_.rows()));
  }
  for (const SeqTensor* t : {&log_alpha_, &log_beta_}) {
    for (double v : t->values()) {
      if (v > 0.0) throw DomainError("log-gate " + std::to_string(v) + " is positive (gate > 1)");
    }
  }
}

GateSeq GateSeq::identity(std::size_t L, std::size_t dk, std::size_t dv) {
  return GateSeq(SeqTensor::zeros(L, dk), SeqTensor::zeros(L, dv));
}

ChunkPlan::ChunkPlan(std::size_t L, std::size_t chunk) : length_(L), chunk_(chunk) {
  if (L == 0) throw ShapeError("chunk plan over an empty sequence");
  if (chunk == 0) throw DomainError("chunk length must be at least 1");
  for (std::size_t s = 0; s < L; s += chunk) bounds_.emplace_back(s, std::min(L, s + chunk));
}

namespace {

SeqTensor prefix_sum(const SeqTensor& x, FlopCounter* counter) {
  std::vector<double> out = x.to_vector();
  const std::size_t cols = x.cols();
  for (std::size_t t = 1; t < x.rows(); ++t)
    for (std::size_t c = 0; c < cols; ++c) out[t * cols + c] += out[(t - 1) * cols + c];
  if (x.rows() > 0) count(counter, static_cast<std::uint64_t>(x.rows() - 1) * cols);
  return SeqTensor(x.rows(), cols, std::move(out));
}

struct SideFactors {
  SeqTensor prime;
  SeqTensor dagger;
  SeqTensor gamma;
};

SideFactors side_factors(const SeqTensor& log_cum, std::size_t start, std::size_t end,
                         FlopCounter* counter) {
  const std::size_t n = end - start;
  const std::size_t d = log_cum.cols();
  std::vector<double> boundary(d, 0.0);
  if (start > 0) {
    auto r = log_cum.row(start - 1);
    boundary.assign(r.begin(), r.end());
  }
  auto last = log_cum.row(end - 1);
  std::vector<double> prime(n * d), dagger(n * d), gamma(d);
  for (std::size_t j = 0; j < n; ++j) {
    auto cur = log_cum.row(start + j);
    for (std::size_t c = 0; c < d; ++c) {
      dagger[j * d + c] = std::exp(cur[c] - boundary[c]);
      prime[j * d + c] = std::exp(last[c] - cur[c]);
    }
  }
  for (std::size_t c = 0; c < d; ++c) gamma[c] = std::exp(last[c] - boundary[c]);
  count(counter, 4 * static_cast<std::uint64_t>(n) * d + 2 * d);
  return {SeqTensor(n, d, std::move(prime)), SeqTensor(n, d, std::move(dagger)),
          SeqTensor(1, d, std::move(gamma))};
}

}  // namespace

CumulativeDecay cumulative_log_decay(const GateSeq& gates, FlopCounter* counter) {
  return {prefix_sum(gates.log_alpha(), counter), prefix_sum(gates.log_beta(), counter)};
}

std::vector<ChunkDecays> chunk_relative_decays(const CumulativeDecay& decay, const ChunkPlan& plan,
                                               FlopCounter* counter) {
  if (plan.length() != decay.length()) {
    throw ShapeError("chunk plan covers " + std::to_string(plan.length()) +
                     " positions but the decay has " + std::to_string(decay.length()));
  }
  std::vector<ChunkDecays> out;
  out.reserve(plan.num_chunks());
  for (std::size_t i = 0; i < plan.num_chunks(); ++i) {
    const auto [start, end] = plan.boundaries()[i];
    auto b = side_factors(decay.log_b, start, end, counter);
    auto d = side_factors(decay.log_d, start, end, counter);
    out.push_back(ChunkDecays{i, start, end - start, std::move(b.prime), std::move(b.dagger),
                              std::move(d.prime), std::move(d.dagger), std::move(b.gamma),
                              std::move(d.gamma)});
  }
  return out;
}

}  // namespace gla
