#pragma once

// Data-parallel inner loops shared by the solver, the spectral code and the
// expected-population recursion.
//
// Every kernel has a scalar reference implementation. SIMD variants (AVX2 on
// x86-64, NEON on AArch64) are compiled with per-file ISA flags and selected
// at runtime. The element-wise kernels round exactly like the scalar path;
// `dot` reassociates the sum and only agrees to a few ulps.

#include <cstddef>
#include <string_view>
#include <vector>

namespace infbranch::kernels {

enum class Isa { scalar, avx2, neon };

struct RatioBounds {
  double lo;
  double hi;
};

/// Result of `monotone_update`: largest increase kept and largest decrease
/// that was clamped away.
struct StepStats {
  double max_rise;
  double max_drop;
};

struct KernelTable {
  Isa isa;
  const char* name;

  // y[i] += coef[i] * x[i]
  void (*mul_add)(double* y, const double* coef, const double* x, std::size_t n);

  // y[i] += coef[i] * x[i]^exponent, exponent >= 1, power by repeated products
  void (*monomial_mul_add)(double* y, const double* coef, const double* x, std::size_t n,
                           int exponent);

  // min and max of num[i] / den[i]; den[i] > 0 is the caller's responsibility
  RatioBounds (*ratio_bounds)(const double* num, const double* den, std::size_t n);

  // next[i] = max(next[i], prev[i]); reports the kept rise and the clamped drop
  StepStats (*monotone_update)(double* next, const double* prev, std::size_t n);

  double (*dot)(const double* a, const double* b, std::size_t n);

  // max |a[i] - b[i]|
  double (*max_abs_diff)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_table();

/// Kernel table in use. Chosen on first call: the widest ISA the CPU supports,
/// unless the environment variable INFBRANCH_ISA names another one.
const KernelTable& active();

/// Table for a specific ISA. Throws std::runtime_error when the ISA was not
/// compiled in or the CPU lacks it.
const KernelTable& table(Isa isa);

bool supported(Isa isa);
std::vector<Isa> supported_isas();
void set_active(Isa isa);

std::string_view to_string(Isa isa);
Isa parse_isa(std::string_view name);

}  // namespace infbranch::kernels
