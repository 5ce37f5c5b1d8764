// Compiled with -mavx2 (and without FMA contraction) only for this file.

#include <immintrin.h>

#include "kernel_impls.hpp"

namespace infbranch::kernels::avx2 {
namespace {

inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_max_pd(lo, hi);
  const __m128d s = _mm_max_pd(m, _mm_unpackhi_pd(m, m));
  return _mm_cvtsd_f64(s);
}

inline double hmin(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_min_pd(lo, hi);
  const __m128d s = _mm_min_pd(m, _mm_unpackhi_pd(m, m));
  return _mm_cvtsd_f64(s);
}

}  // namespace

void mul_add(double* y, const double* coef, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(coef + i), _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] = y[i] + coef[i] * x[i];
}

void monomial_mul_add(double* y, const double* coef, const double* x, std::size_t n,
                      int exponent) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    __m256d p = xv;
    for (int e = 1; e < exponent; ++e) p = _mm256_mul_pd(p, xv);
    const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(coef + i), p);
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) {
    double p = x[i];
    for (int e = 1; e < exponent; ++e) p = p * x[i];
    y[i] = y[i] + coef[i] * p;
  }
}

RatioBounds ratio_bounds(const double* num, const double* den, std::size_t n) {
  __m256d lo = _mm256_set1_pd(kInf);
  __m256d hi = _mm256_set1_pd(-kInf);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d q = _mm256_div_pd(_mm256_loadu_pd(num + i), _mm256_loadu_pd(den + i));
    lo = _mm256_min_pd(q, lo);
    hi = _mm256_max_pd(q, hi);
  }
  RatioBounds r{hmin(lo), hmax(hi)};
  for (; i < n; ++i) {
    const double q = num[i] / den[i];
    r.lo = q < r.lo ? q : r.lo;
    r.hi = q > r.hi ? q : r.hi;
  }
  return r;
}

StepStats monotone_update(double* next, const double* prev, std::size_t n) {
  __m256d rise = _mm256_setzero_pd();
  __m256d drop = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d nx = _mm256_loadu_pd(next + i);
    const __m256d pv = _mm256_loadu_pd(prev + i);
    const __m256d kept = _mm256_max_pd(nx, pv);
    drop = _mm256_max_pd(_mm256_sub_pd(pv, nx), drop);
    rise = _mm256_max_pd(_mm256_sub_pd(kept, pv), rise);
    _mm256_storeu_pd(next + i, kept);
  }
  StepStats s{hmax(rise), hmax(drop)};
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
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    m = _mm256_max_pd(_mm256_andnot_pd(sign, d), m);
  }
  double r = hmax(m);
  for (; i < n; ++i) {
    const double d = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
    r = d > r ? d : r;
  }
  return r;
}

}  // namespace infbranch::kernels::avx2
