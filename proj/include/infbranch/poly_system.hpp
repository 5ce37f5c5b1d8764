#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "infbranch/kernels.hpp"
#include "infbranch/model.hpp"

namespace infbranch {

/// The map s -> (F_1(s), ..., F_k(s)) of a k-type truncation, compiled for
/// repeated evaluation.
///
/// With fill = 0 every event that involves a type above k is dropped; with
/// fill = 1 those factors are replaced by 1. Single-factor monomials
/// p * s_j^e are grouped by (j - i, e) into diagonal coefficient arrays so
/// that evaluation is a handful of contiguous kernel calls; events with
/// several distinct child types are kept in a sparse list.
class PolySystem {
 public:
  PolySystem(const ModelSpec& model, TypeIndex k, double fill);

  std::size_t size() const { return k_; }
  double fill() const { return fill_; }

  /// out = F(s), clamped to at most 1.
  void evaluate(std::span<const double> s, std::span<double> out,
                const kernels::KernelTable& kern = kernels::active()) const;

 private:
  struct DiagonalTerm {
    int offset;
    int exponent;
    std::size_t begin;
    std::size_t end;
    std::vector<double> coef;
  };
  struct SparseTerm {
    std::size_t row;
    double probability;
    std::vector<std::pair<std::size_t, int>> factors;
  };

  std::size_t k_;
  double fill_;
  std::vector<double> constant_;
  std::vector<DiagonalTerm> diagonal_;
  std::vector<SparseTerm> sparse_;
};

}  // namespace infbranch
