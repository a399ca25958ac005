#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "gla/gla.hpp"

// Direct formulas used as ground truth. None of them call library kernels.
namespace gla::oracle {

inline SeqTensor naive_matmul(const SeqTensor& a, const SeqTensor& b) {
  std::vector<double> out(a.rows() * b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(p, j);
      out[i * b.cols() + j] = s;
    }
  return SeqTensor(a.rows(), b.cols(), std::move(out));
}

// (Q K^T * M) V with M the causal mask.
inline SeqTensor masked_attention(const SeqTensor& q, const SeqTensor& k, const SeqTensor& v) {
  const std::size_t L = q.rows(), dk = q.cols(), dv = v.cols();
  std::vector<double> out(L * dv, 0.0);
  for (std::size_t t = 0; t < L; ++t)
    for (std::size_t i = 0; i <= t; ++i) {
      double score = 0.0;
      for (std::size_t a = 0; a < dk; ++a) score += q(t, a) * k(i, a);
      for (std::size_t j = 0; j < dv; ++j) out[t * dv + j] += score * v(i, j);
    }
  return SeqTensor(L, dv, std::move(out));
}

// sum_{i<=t} gamma^(t-i) <q_t, k_i> v_i
inline SeqTensor retention(const SeqTensor& q, const SeqTensor& k, const SeqTensor& v,
                           double gamma) {
  const std::size_t L = q.rows(), dk = q.cols(), dv = v.cols();
  std::vector<double> out(L * dv, 0.0);
  for (std::size_t t = 0; t < L; ++t)
    for (std::size_t i = 0; i <= t; ++i) {
      double score = 0.0;
      for (std::size_t a = 0; a < dk; ++a) score += q(t, a) * k(i, a);
      const double w = std::pow(gamma, static_cast<double>(t - i)) * score;
      for (std::size_t j = 0; j < dv; ++j) out[t * dv + j] += w * v(i, j);
    }
  return SeqTensor(L, dv, std::move(out));
}

// o_t[j] = sum_{i<=t} sum_a q_t[a] k_i[a] v_i[j] prod_{s=i+1..t} alpha_s[a] beta_s[j],
// with the gate products multiplied out explicitly.
inline SeqTensor unrolled(const GlaInstance& inst) {
  const std::size_t L = inst.length(), dk = inst.dk(), dv = inst.dv();
  const SeqTensor& la = inst.gates().log_alpha();
  const SeqTensor& lb = inst.gates().log_beta();
  std::vector<double> out(L * dv, 0.0);
  for (std::size_t t = 0; t < L; ++t)
    for (std::size_t i = 0; i <= t; ++i)
      for (std::size_t a = 0; a < dk; ++a) {
        double ga = 1.0;
        for (std::size_t s = i + 1; s <= t; ++s) ga *= std::exp(la(s, a));
        const double qk = inst.q()(t, a) * inst.k()(i, a) * ga;
        for (std::size_t j = 0; j < dv; ++j) {
          double gb = 1.0;
          for (std::size_t s = i + 1; s <= t; ++s) gb *= std::exp(lb(s, j));
          out[t * dv + j] += qk * gb * inst.v()(i, j);
        }
      }
  return SeqTensor(L, dv, std::move(out));
}

// Row-wise x * y - z * w.
inline SeqTensor product_difference(const SeqTensor& x, const SeqTensor& y, const SeqTensor& z,
                                    const SeqTensor& w) {
  std::vector<double> out(x.size());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c)
      out[r * x.cols() + c] = x(r, c) * y(r, c) - z(r, c) * w(r, c);
  return SeqTensor(x.rows(), x.cols(), std::move(out));
}

// out[t] = sum_{s>=t} x[s]
inline SeqTensor reverse_cumsum(const SeqTensor& x) {
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t t = 0; t < x.rows(); ++t)
    for (std::size_t s = t; s < x.rows(); ++s)
      for (std::size_t c = 0; c < x.cols(); ++c) out[t * x.cols() + c] += x(s, c);
  return SeqTensor(x.rows(), x.cols(), std::move(out));
}

}  // namespace gla::oracle
