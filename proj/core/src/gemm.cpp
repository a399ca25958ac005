#include "gemm.hpp"

namespace gla::detail {

namespace {

constexpr std::size_t kRows = 4;
constexpr std::size_t kCols = 8;

template <bool TransA>
inline double load_a(const double* a, std::size_t lda, std::size_t i, std::size_t p) {
  return TransA ? a[p * lda + i] : a[i * lda + p];
}

template <bool TransA>
void block(const double* a, std::size_t lda, const double* b, std::size_t ldb, double* c,
           std::size_t ldc, std::size_t i0, std::size_t j0, std::size_t k, bool accumulate) {
  double acc[kRows][kCols];
  for (std::size_t r = 0; r < kRows; ++r) {
    const double ar = load_a<TransA>(a, lda, i0 + r, 0);
    for (std::size_t s = 0; s < kCols; ++s) acc[r][s] = ar * b[j0 + s];
  }
  for (std::size_t p = 1; p < k; ++p) {
    const double* bp = b + p * ldb + j0;
    for (std::size_t r = 0; r < kRows; ++r) {
      const double ar = load_a<TransA>(a, lda, i0 + r, p);
      for (std::size_t s = 0; s < kCols; ++s) acc[r][s] += ar * bp[s];
    }
  }
  for (std::size_t r = 0; r < kRows; ++r) {
    double* cr = c + (i0 + r) * ldc + j0;
    if (accumulate) {
      for (std::size_t s = 0; s < kCols; ++s) cr[s] += acc[r][s];
    } else {
      for (std::size_t s = 0; s < kCols; ++s) cr[s] = acc[r][s];
    }
  }
}

template <bool TransA>
void edge(const double* a, std::size_t lda, const double* b, std::size_t ldb, double* c,
          std::size_t ldc, std::size_t i, std::size_t j, std::size_t k, bool accumulate) {
  double acc = load_a<TransA>(a, lda, i, 0) * b[j];
  for (std::size_t p = 1; p < k; ++p) acc += load_a<TransA>(a, lda, i, p) * b[p * ldb + j];
  double& out = c[i * ldc + j];
  out = accumulate ? out + acc : acc;
}

template <bool TransA>
void gemm_impl(const double* a, std::size_t lda, const double* b, std::size_t ldb, double* c,
               std::size_t ldc, std::size_t m, std::size_t n, std::size_t k, bool accumulate) {
  const std::size_t m_main = m - m % kRows;
  const std::size_t n_main = n - n % kCols;
  for (std::size_t i = 0; i < m_main; i += kRows) {
    for (std::size_t j = 0; j < n_main; j += kCols)
      block<TransA>(a, lda, b, ldb, c, ldc, i, j, k, accumulate);
    for (std::size_t r = i; r < i + kRows; ++r)
      for (std::size_t j = n_main; j < n; ++j)
        edge<TransA>(a, lda, b, ldb, c, ldc, r, j, k, accumulate);
  }
  for (std::size_t i = m_main; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) edge<TransA>(a, lda, b, ldb, c, ldc, i, j, k, accumulate);
}

}  // namespace

void gemm(bool trans_a, const double* a, std::size_t lda, const double* b, std::size_t ldb,
          double* c, std::size_t ldc, std::size_t m, std::size_t n, std::size_t k,
          bool accumulate) {
  if (m == 0 || n == 0 || k == 0) return;
  if (trans_a) {
    gemm_impl<true>(a, lda, b, ldb, c, ldc, m, n, k, accumulate);
  } else {
    gemm_impl<false>(a, lda, b, ldb, c, ldc, m, n, k, accumulate);
  }
}

}  // namespace gla::detail
