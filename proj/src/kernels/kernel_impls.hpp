#pragma once

// Per-ISA kernel entry points. Each namespace is defined in its own
// translation unit so that ISA-specific compile flags stay local to it.

#include <limits>

#include "infbranch/kernels.hpp"

namespace infbranch::kernels {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

#define INFBRANCH_DECLARE_KERNELS                                                         \
  void mul_add(double* y, const double* coef, const double* x, std::size_t n);            \
  void monomial_mul_add(double* y, const double* coef, const double* x, std::size_t n,    \
                        int exponent);                                                    \
  RatioBounds ratio_bounds(const double* num, const double* den, std::size_t n);          \
  StepStats monotone_update(double* next, const double* prev, std::size_t n);             \
  double dot(const double* a, const double* b, std::size_t n);                            \
  double max_abs_diff(const double* a, const double* b, std::size_t n);

namespace scalar {
INFBRANCH_DECLARE_KERNELS
}
namespace avx2 {
INFBRANCH_DECLARE_KERNELS
}
namespace neon {
INFBRANCH_DECLARE_KERNELS
}

#undef INFBRANCH_DECLARE_KERNELS

}  // namespace infbranch::kernels
