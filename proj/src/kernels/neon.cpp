// AArch64 Advanced SIMD variant, two doubles per register.

#include <arm_neon.h>

#include "kernel_impls.hpp"

namespace infbranch::kernels::neon {

void mul_add(double* y, const double* coef, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    // vmulq + vaddq rather than vfmaq: results must match the scalar rounding.
    const float64x2_t prod = vmulq_f64(vld1q_f64(coef + i), vld1q_f64(x + i));
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), prod));
  }
  for (; i < n; ++i) y[i] = y[i] + coef[i] * x[i];
}

void monomial_mul_add(double* y, const double* coef, const double* x, std::size_t n,
                      int exponent) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t xv = vld1q_f64(x + i);
    float64x2_t p = xv;
    for (int e = 1; e < exponent; ++e) p = vmulq_f64(p, xv);
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(vld1q_f64(coef + i), p)));
  }
  for (; i < n; ++i) {
    double p = x[i];
    for (int e = 1; e < exponent; ++e) p = p * x[i];
    y[i] = y[i] + coef[i] * p;
  }
}

RatioBounds ratio_bounds(const double* num, const double* den, std::size_t n) {
  float64x2_t lo = vdupq_n_f64(kInf);
  float64x2_t hi = vdupq_n_f64(-kInf);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t q = vdivq_f64(vld1q_f64(num + i), vld1q_f64(den + i));
    lo = vminq_f64(q, lo);
    hi = vmaxq_f64(q, hi);
  }
  RatioBounds r{vminvq_f64(lo), vmaxvq_f64(hi)};
  for (; i < n; ++i) {
    const double q = num[i] / den[i];
    r.lo = q < r.lo ? q : r.lo;
    r.hi = q > r.hi ? q : r.hi;
  }
  return r;
}

StepStats monotone_update(double* next, const double* prev, std::size_t n) {
  float64x2_t rise = vdupq_n_f64(0.0);
  float64x2_t drop = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t nx = vld1q_f64(next + i);
    const float64x2_t pv = vld1q_f64(prev + i);
    const float64x2_t kept = vmaxq_f64(nx, pv);
    drop = vmaxq_f64(vsubq_f64(pv, nx), drop);
    rise = vmaxq_f64(vsubq_f64(kept, pv), rise);
    vst1q_f64(next + i, kept);
  }
  StepStats s{vmaxvq_f64(rise), vmaxvq_f64(drop)};
  for (; i < n; ++i) {
    const double d = prev[i] - next[i];
    const double kept = next[i] > prev[i] ? next[i] : prev[i];
    const double r = kept - prev[i];
    s.max_drop = d > s.max_drop ? d : s.max_drop;
    s.max_rise = r > s.max_rise ? r : s.max_rise;
    next[i] = kept;
  }
  return s;
}

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  float64x2_t m = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) m = vmaxq_f64(vabdq_f64(vld1q_f64(a + i), vld1q_f64(b + i)), m);
  double r = vmaxvq_f64(m);
  for (; i < n; ++i) {
    const double d = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
    r = d > r ? d : r;
  }
  return r;
}

}  // namespace infbranch::kernels::neon
