#include "infbranch/poly_system.hpp"

#include <algorithm>
#include <map>

#include "infbranch/errors.hpp"

namespace infbranch {

PolySystem::PolySystem(const ModelSpec& model, TypeIndex k, double fill)
    : k_(static_cast<std::size_t>(k)), fill_(fill) {
  if (k < 1) throw DomainError("truncation level must be >= 1");
  if (fill != 0.0 && fill != 1.0) throw DomainError("fill must be 0 or 1");
  constant_.assign(k_, 0.0);
  std::map<std::pair<int, int>, std::vector<double>> diagonals;

  for (TypeIndex i = 1; i <= k; ++i) {
    const std::size_t row = static_cast<std::size_t>(i - 1);
    for (const auto& e : model.law(i).events()) {
      std::vector<std::pair<std::size_t, int>> factors;
      bool dropped = false;
      for (const auto& [type, count] : e.counts) {
        if (type <= k) {
          factors.emplace_back(static_cast<std::size_t>(type - 1), count);
        } else if (fill == 0.0) {
          dropped = true;
          break;
        }
      }
      if (dropped || e.probability == 0.0) continue;
      if (factors.empty()) {
        constant_[row] += e.probability;
      } else if (factors.size() == 1) {
        const int offset = static_cast<int>(factors[0].first) - static_cast<int>(row);
        auto& coef = diagonals[{offset, factors[0].second}];
        if (coef.empty()) coef.assign(k_, 0.0);
        coef[row] += e.probability;
      } else {
        sparse_.push_back({row, e.probability, std::move(factors)});
      }
    }
  }

  for (auto& [key, coef] : diagonals) {
    const auto [offset, exponent] = key;
    // Rows whose column row + offset is inside [0, k).
    const long lk = static_cast<long>(k_);
    const auto begin = static_cast<std::size_t>(std::max(0L, -static_cast<long>(offset)));
    const auto end = static_cast<std::size_t>(std::min(lk, lk - offset));
    diagonal_.push_back({offset, exponent, begin, end, std::move(coef)});
  }
}

void PolySystem::evaluate(std::span<const double> s, std::span<double> out,
                          const kernels::KernelTable& kern) const {
  if (s.size() != k_ || out.size() != k_) throw DomainError("PolySystem::evaluate: size");
  std::copy(constant_.begin(), constant_.end(), out.begin());
  for (const auto& t : diagonal_) {
    if (t.begin >= t.end) continue;
    kern.monomial_mul_add(out.data() + t.begin, t.coef.data() + t.begin,
                          s.data() + static_cast<long>(t.begin) + t.offset, t.end - t.begin,
                          t.exponent);
  }
  for (const auto& t : sparse_) {
    double v = t.probability;
    for (const auto& [col, count] : t.factors)
      for (int m = 0; m < count; ++m) v *= s[col];
    out[t.row] += v;
  }
  for (double& v : out) v = std::min(v, 1.0);
}

}  // namespace infbranch
