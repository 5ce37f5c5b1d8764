#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernel_impls.hpp"

namespace infbranch::kernels {
namespace {

constexpr KernelTable kScalar{Isa::scalar,           "scalar",
                              &scalar::mul_add,      &scalar::monomial_mul_add,
                              &scalar::ratio_bounds, &scalar::monotone_update,
                              &scalar::dot,          &scalar::max_abs_diff};

#if defined(INFBRANCH_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::avx2,             "avx2",
                            &avx2::mul_add,        &avx2::monomial_mul_add,
                            &avx2::ratio_bounds,   &avx2::monotone_update,
                            &avx2::dot,            &avx2::max_abs_diff};
#endif

#if defined(INFBRANCH_HAVE_NEON)
constexpr KernelTable kNeon{Isa::neon,             "neon",
                            &neon::mul_add,        &neon::monomial_mul_add,
                            &neon::ratio_bounds,   &neon::monotone_update,
                            &neon::dot,            &neon::max_abs_diff};
#endif

bool cpu_has(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(INFBRANCH_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::neon:
#if defined(INFBRANCH_HAVE_NEON)
      return true;  // mandatory on AArch64
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* pick_default() {
  if (const char* env = std::getenv("INFBRANCH_ISA"); env != nullptr && *env != '\0') {
    return &table(parse_isa(env));
  }
  if (cpu_has(Isa::avx2)) return &table(Isa::avx2);
  if (cpu_has(Isa::neon)) return &table(Isa::neon);
  return &kScalar;
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{pick_default()};
  return current;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

bool supported(Isa isa) { return cpu_has(isa); }

std::vector<Isa> supported_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon})
    if (cpu_has(isa)) out.push_back(isa);
  return out;
}

const KernelTable& table(Isa isa) {
  if (!cpu_has(isa))
    throw std::runtime_error("kernel ISA not available: " + std::string(to_string(isa)));
  switch (isa) {
#if defined(INFBRANCH_HAVE_AVX2)
    case Isa::avx2:
      return kAvx2;
#endif
#if defined(INFBRANCH_HAVE_NEON)
    case Isa::neon:
      return kNeon;
#endif
    default:
      return kScalar;
  }
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void set_active(Isa isa) { slot().store(&table(isa), std::memory_order_release); }

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  if (name == "neon") return Isa::neon;
  throw std::invalid_argument("unknown kernel ISA '" + std::string(name) + "'");
}

}  // namespace infbranch::kernels
