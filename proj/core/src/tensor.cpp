#include "gla/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace gla {

SeqTensor::SeqTensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + std::to_string(rows_) + "x" +
                     std::to_string(cols_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw DomainError("non-finite tensor element at flat index " + std::to_string(i));
    }
  }
}

SeqTensor SeqTensor::zeros(std::size_t rows, std::size_t cols) {
  return SeqTensor(rows, cols, std::vector<double>(rows * cols, 0.0));
}

SeqTensor SeqTensor::ones(std::size_t rows, std::size_t cols) {
  return SeqTensor(rows, cols, std::vector<double>(rows * cols, 1.0));
}

SeqTensor SeqTensor::identity(std::size_t n) {
  std::vector<double> data(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) data[i * n + i] = 1.0;
  return SeqTensor(n, n, std::move(data));
}

SeqTensor SeqTensor::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw ShapeError("ragged rows in from_rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return SeqTensor(rows.size(), cols, std::move(data));
}

std::string shape_string(const SeqTensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

SeqTensor matmul(const SeqTensor& a, const SeqTensor& b, FlopCounter* counter) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul inner dimension mismatch: " + shape_string(a) + " * " +
                     shape_string(b));
  }
  const std::size_t m = a.rows();
  const std::size_t inner = a.cols();
  const std::size_t n = b.cols();
  std::vector<double> out(m * n, 0.0);
  if (inner == 0) return SeqTensor(m, n, std::move(out));
  // i-k-j order: each out[i][j] still accumulates over k in ascending order.
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.data() + i * n;
    auto arow = a.row(i);
    auto b0 = b.row(0);
    for (std::size_t j = 0; j < n; ++j) orow[j] = arow[0] * b0[j];
    for (std::size_t k = 1; k < inner; ++k) {
      const double aik = arow[k];
      auto brow = b.row(k);
      for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
  count(counter, static_cast<std::uint64_t>(m) * n * (2 * inner - 1));
  return SeqTensor(m, n, std::move(out));
}

SeqTensor hadamard(const SeqTensor& a, const SeqTensor& b, FlopCounter* counter) {
  const bool broadcast = b.rows() == 1 && b.cols() == a.cols() && a.rows() != 1;
  if (!a.same_shape(b) && !broadcast) {
    throw ShapeError("hadamard shape mismatch: " + shape_string(a) + " vs " + shape_string(b));
  }
  std::vector<double> out(a.size());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto arow = a.row(r);
    auto brow = b.row(broadcast ? 0 : r);
    for (std::size_t c = 0; c < a.cols(); ++c) out[r * a.cols() + c] = arow[c] * brow[c];
  }
  count(counter, a.size());
  return SeqTensor(a.rows(), a.cols(), std::move(out));
}

SeqTensor suffix_sum(const SeqTensor& x, FlopCounter* counter) {
  if (x.rows() == 0) throw ShapeError("suffix_sum of an empty sequence");
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  std::vector<double> out(x.size());
  auto last = x.row(rows - 1);
  std::copy(last.begin(), last.end(), out.begin() + (rows - 1) * cols);
  for (std::size_t t = rows - 1; t-- > 0;) {
    auto xr = x.row(t);
    for (std::size_t c = 0; c < cols; ++c) out[t * cols + c] = xr[c] + out[(t + 1) * cols + c];
  }
  count(counter, static_cast<std::uint64_t>(rows - 1) * cols);
  return SeqTensor(rows, cols, std::move(out));
}

SeqTensor transpose(const SeqTensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out[c * a.rows() + r] = a(r, c);
  return SeqTensor(a.cols(), a.rows(), std::move(out));
}

double max_abs(std::span<const double> values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("max_abs_diff length mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  const double scale = std::max({1e-8, max_abs(a), max_abs(b)});
  return max_abs_diff(a, b) / scale;
}

}  // namespace gla
