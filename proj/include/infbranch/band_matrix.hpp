#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace infbranch {

/// Row-major dense square matrix. Only used at API boundaries and in tests.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Square matrix stored by diagonals (DIA format). Diagonal `d` holds the
/// entries A(i, i + d) for d in [-lower, upper]; slots whose column falls
/// outside the matrix are kept at zero. Products walk one diagonal at a time,
/// which turns them into contiguous multiply-adds for the SIMD kernels.
class BandMatrix {
 public:
  BandMatrix() = default;
  BandMatrix(std::size_t n, int lower, int upper);

  static BandMatrix from_dense(const DenseMatrix& a);

  std::size_t size() const { return n_; }
  int lower() const { return lower_; }
  int upper() const { return upper_; }

  /// Entry (i, j), zero-based. Zero outside the band.
  double at(std::size_t i, std::size_t j) const;
  /// Sets entry (i, j); throws std::out_of_range outside the band.
  void set(std::size_t i, std::size_t j, double v);

  std::span<const double> diagonal(int offset) const;
  std::span<double> diagonal(int offset);

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
  /// y = x A (row vector times matrix)
  void left_multiply(std::span<const double> x, std::span<double> y) const;

  /// Leading (north-west) k x k block.
  BandMatrix leading_block(std::size_t k) const;
  /// Principal submatrix on the sorted index set `idx`. Bandwidths never grow.
  BandMatrix principal_submatrix(std::span<const std::size_t> idx) const;

  DenseMatrix to_dense() const;
  bool nonnegative() const;

 private:
  std::size_t n_ = 0;
  int lower_ = 0;
  int upper_ = 0;
  std::vector<std::vector<double>> diags_;  // index offset + lower_
};

}  // namespace infbranch
