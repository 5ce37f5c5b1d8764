#include "infbranch/band_matrix.hpp"

#include <algorithm>
#include <stdexcept>

#include "infbranch/kernels.hpp"

namespace infbranch {

BandMatrix::BandMatrix(std::size_t n, int lower, int upper)
    : n_(n), lower_(lower), upper_(upper) {
  if (lower < 0 || upper < 0) throw std::invalid_argument("BandMatrix: negative bandwidth");
  diags_.assign(static_cast<std::size_t>(lower + upper + 1), std::vector<double>(n, 0.0));
}

BandMatrix BandMatrix::from_dense(const DenseMatrix& a) {
  const std::size_t n = a.size();
  int lo = 0, up = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (a(i, j) != 0.0) {
        const auto d = static_cast<long>(j) - static_cast<long>(i);
        if (d < 0) lo = std::max(lo, static_cast<int>(-d));
        if (d > 0) up = std::max(up, static_cast<int>(d));
      }
  BandMatrix b(n, lo, up);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (a(i, j) != 0.0) b.set(i, j, a(i, j));
  return b;
}

double BandMatrix::at(std::size_t i, std::size_t j) const {
  const long d = static_cast<long>(j) - static_cast<long>(i);
  if (d < -lower_ || d > upper_ || i >= n_ || j >= n_) return 0.0;
  return diags_[static_cast<std::size_t>(d + lower_)][i];
}

void BandMatrix::set(std::size_t i, std::size_t j, double v) {
  const long d = static_cast<long>(j) - static_cast<long>(i);
  if (d < -lower_ || d > upper_ || i >= n_ || j >= n_)
    throw std::out_of_range("BandMatrix::set outside band");
  diags_[static_cast<std::size_t>(d + lower_)][i] = v;
}

std::span<const double> BandMatrix::diagonal(int offset) const {
  return diags_.at(static_cast<std::size_t>(offset + lower_));
}

std::span<double> BandMatrix::diagonal(int offset) {
  return diags_.at(static_cast<std::size_t>(offset + lower_));
}

namespace {

// Rows i with 0 <= i + d < n.
struct RowRange {
  std::size_t begin;
  std::size_t end;
};

RowRange valid_rows(std::size_t n, int d) {
  const long ln = static_cast<long>(n);
  const long b = std::max(0L, -static_cast<long>(d));
  const long e = std::min(ln, ln - d);
  if (e <= b) return {0, 0};
  return {static_cast<std::size_t>(b), static_cast<std::size_t>(e)};
}

}  // namespace

void BandMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != n_ || y.size() != n_) throw std::invalid_argument("BandMatrix::multiply: size");
  const auto& k = kernels::active();
  std::fill(y.begin(), y.end(), 0.0);
  for (int d = -lower_; d <= upper_; ++d) {
    const auto [b, e] = valid_rows(n_, d);
    if (b >= e) continue;
    const double* coef = diags_[static_cast<std::size_t>(d + lower_)].data();
    k.mul_add(y.data() + b, coef + b, x.data() + b + d, e - b);
  }
}

void BandMatrix::left_multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != n_ || y.size() != n_)
    throw std::invalid_argument("BandMatrix::left_multiply: size");
  const auto& k = kernels::active();
  std::fill(y.begin(), y.end(), 0.0);
  // y[i + d] += A(i, i + d) * x[i]
  for (int d = -lower_; d <= upper_; ++d) {
    const auto [b, e] = valid_rows(n_, d);
    if (b >= e) continue;
    const double* coef = diags_[static_cast<std::size_t>(d + lower_)].data();
    k.mul_add(y.data() + b + d, coef + b, x.data() + b, e - b);
  }
}

BandMatrix BandMatrix::leading_block(std::size_t k) const {
  if (k > n_) throw std::out_of_range("BandMatrix::leading_block");
  BandMatrix out(k, lower_, upper_);
  for (int d = -lower_; d <= upper_; ++d) {
    const auto [b, e] = valid_rows(k, d);
    const auto& src = diags_[static_cast<std::size_t>(d + lower_)];
    auto& dst = out.diags_[static_cast<std::size_t>(d + lower_)];
    std::copy(src.begin() + static_cast<long>(b), src.begin() + static_cast<long>(e),
              dst.begin() + static_cast<long>(b));
  }
  return out;
}

BandMatrix BandMatrix::principal_submatrix(std::span<const std::size_t> idx) const {
  const std::size_t m = idx.size();
  constexpr std::size_t kAbsent = static_cast<std::size_t>(-1);
  std::vector<std::size_t> pos(n_, kAbsent);
  for (std::size_t p = 0; p < m; ++p) pos.at(idx[p]) = p;

  struct Entry {
    std::size_t p, q;
    double v;
  };
  std::vector<Entry> entries;
  int lo = 0, up = 0;
  for (std::size_t p = 0; p < m; ++p) {
    const long i = static_cast<long>(idx[p]);
    for (int d = -lower_; d <= upper_; ++d) {
      const long j = i + d;
      if (j < 0 || j >= static_cast<long>(n_)) continue;
      const std::size_t q = pos[static_cast<std::size_t>(j)];
      if (q == kAbsent) continue;
      const double v = diags_[static_cast<std::size_t>(d + lower_)][static_cast<std::size_t>(i)];
      if (v == 0.0) continue;
      const long dd = static_cast<long>(q) - static_cast<long>(p);
      if (dd < 0) lo = std::max(lo, static_cast<int>(-dd));
      if (dd > 0) up = std::max(up, static_cast<int>(dd));
      entries.push_back({p, q, v});
    }
  }
  BandMatrix out(m, lo, up);
  for (const auto& e : entries) out.set(e.p, e.q, e.v);
  return out;
}

DenseMatrix BandMatrix::to_dense() const {
  DenseMatrix a(n_);
  for (int d = -lower_; d <= upper_; ++d) {
    const auto [b, e] = valid_rows(n_, d);
    for (std::size_t i = b; i < e; ++i)
      a(i, static_cast<std::size_t>(static_cast<long>(i) + d)) =
          diags_[static_cast<std::size_t>(d + lower_)][i];
  }
  return a;
}

bool BandMatrix::nonnegative() const {
  for (const auto& dg : diags_)
    for (double v : dg)
      if (!(v >= 0.0)) return false;
  return true;
}

}  // namespace infbranch
