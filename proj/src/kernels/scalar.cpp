#include "kernel_impls.hpp"

namespace infbranch::kernels::scalar {

void mul_add(double* y, const double* coef, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + coef[i] * x[i];
}

void monomial_mul_add(double* y, const double* coef, const double* x, std::size_t n,
                      int exponent) {
  if (exponent == 1) {
    mul_add(y, coef, x, n);
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double p = x[i];
    for (int e = 1; e < exponent; ++e) p = p * x[i];
    y[i] = y[i] + coef[i] * p;
  }
}

RatioBounds ratio_bounds(const double* num, const double* den, std::size_t n) {
  RatioBounds r{kInf, -kInf};
  for (std::size_t i = 0; i < n; ++i) {
    const double q = num[i] / den[i];
    r.lo = q < r.lo ? q : r.lo;
    r.hi = q > r.hi ? q : r.hi;
  }
  return r;
}

StepStats monotone_update(double* next, const double* prev, std::size_t n) {
  StepStats s{0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double drop = prev[i] - next[i];
    const double kept = next[i] > prev[i] ? next[i] : prev[i];
    const double rise = kept - prev[i];
    s.max_drop = drop > s.max_drop ? drop : s.max_drop;
    s.max_rise = rise > s.max_rise ? rise : s.max_rise;
    next[i] = kept;
  }
  return s;
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
    m = d > m ? d : m;
  }
  return m;
}

}  // namespace infbranch::kernels::scalar
