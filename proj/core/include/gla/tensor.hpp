#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gla {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Flop tally shared by the kernels. One multiply, add, divide or exp counts 1.
struct FlopCounter {
  std::uint64_t flops = 0;
  void add(std::uint64_t n) { flops += n; }
};

inline void count(FlopCounter* counter, std::uint64_t n) {
  if (counter != nullptr) counter->add(n);
}

// Dense row-major fp64 matrix. Immutable once built; every element is finite.
class SeqTensor {
 public:
  SeqTensor() = default;
  SeqTensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  static SeqTensor zeros(std::size_t rows, std::size_t cols);
  static SeqTensor ones(std::size_t rows, std::size_t cols);
  static SeqTensor identity(std::size_t n);
  // Nested initializer, convenient for tests: {{1, 2}, {3, 4}}.
  static SeqTensor from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> values() const { return data_; }

  // Copy of the storage, for building a modified tensor.
  std::vector<double> to_vector() const { return data_; }

  bool same_shape(const SeqTensor& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const SeqTensor&, const SeqTensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Recurrent state S_t, a dk x dv matrix.
class State {
 public:
  State() = default;
  State(std::size_t dk, std::size_t dv, std::vector<double> data)
      : matrix_(dk, dv, std::move(data)) {}
  explicit State(SeqTensor matrix) : matrix_(std::move(matrix)) {}

  static State zeros(std::size_t dk, std::size_t dv) { return State(SeqTensor::zeros(dk, dv)); }

  std::size_t dk() const { return matrix_.rows(); }
  std::size_t dv() const { return matrix_.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return matrix_(i, j); }
  const SeqTensor& matrix() const { return matrix_; }
  std::span<const double> values() const { return matrix_.values(); }

  friend bool operator==(const State&, const State&) = default;

 private:
  SeqTensor matrix_;
};

std::string shape_string(const SeqTensor& t);

// out[i][j] = sum_k a[i][k] * b[k][j], accumulated in ascending k.
// Counts m*n*(2k-1) flops.
SeqTensor matmul(const SeqTensor& a, const SeqTensor& b, FlopCounter* counter = nullptr);

// Elementwise product. `b` may also be a 1 x cols row broadcast over every row of `a`.
SeqTensor hadamard(const SeqTensor& a, const SeqTensor& b, FlopCounter* counter = nullptr);

// out[t] = sum_{i >= t} x[i], accumulated back to front.
SeqTensor suffix_sum(const SeqTensor& x, FlopCounter* counter = nullptr);

SeqTensor transpose(const SeqTensor& a);

double max_abs(std::span<const double> values);
double max_abs_diff(std::span<const double> a, std::span<const double> b);

// max|a - b| / max(1e-8, max|a|, max|b|).
double relative_error(std::span<const double> a, std::span<const double> b);
inline double relative_error(const SeqTensor& a, const SeqTensor& b) {
  return relative_error(a.values(), b.values());
}

}  // namespace gla
