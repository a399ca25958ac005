#pragma once

#include <cstddef>

namespace gla::detail {

// C (m x n, row stride ldc) = op(A) * B, or C += op(A) * B when `accumulate`.
// op(A)(i, p) is a[i * lda + p], or a[p * lda + i] when `trans_a`.
// Every C element sums its k terms in ascending p before touching C, so the
// result is bitwise identical to a naive triple loop. Counts are the caller's job.
void gemm(bool trans_a, const double* a, std::size_t lda, const double* b, std::size_t ldb,
          double* c, std::size_t ldc, std::size_t m, std::size_t n, std::size_t k, bool accumulate);

}  // namespace gla::detail
