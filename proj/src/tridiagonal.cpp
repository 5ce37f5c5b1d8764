#include "infbranch/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "infbranch/errors.hpp"

namespace infbranch {

namespace {
constexpr double kTailTolerance = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

void TridiagonalParams::validate() const {
  if (!(a > 0.0) || !(c > 0.0) || !std::isfinite(a) || !std::isfinite(c))
    throw ModelError("tridiagonal parameters need a > 0 and c > 0");
  if (!(b >= 0.0) || !std::isfinite(b)) throw ModelError("tridiagonal parameter b must be >= 0");
}

double nu(const TridiagonalParams& p) {
  p.validate();
  return p.b + 2.0 * std::sqrt(p.a * p.c);
}

double InvariantMeasure::x(int k) const {
  if (k < 1) throw DomainError("measure index must be >= 1");
  if (kind == MeasureKind::critical) return k * std::pow(ratio, k);
  return std::pow(rho_plus, k) - std::pow(rho_minus, k);
}

double InvariantMeasure::tail_mass(int k) const {
  if (!summable) return kInf;
  if (k < 0) throw DomainError("tail index must be >= 0");
  if (kind == MeasureKind::critical) {
    const double r = ratio;
    return std::pow(r, k + 1) * ((k + 1) - k * r) / ((1.0 - r) * (1.0 - r));
  }
  return std::pow(rho_plus, k + 1) / (1.0 - rho_plus) -
         std::pow(rho_minus, k + 1) / (1.0 - rho_minus);
}

std::vector<double> InvariantMeasure::values(int count) const {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int k = 1; k <= count; ++k) v.push_back(x(k));
  return v;
}

InvariantMeasure invariant_measure(const TridiagonalParams& p, double lambda) {
  const double n = nu(p);
  if (!std::isfinite(lambda)) throw DomainError("lambda must be finite");
  InvariantMeasure m;
  m.params = p;
  m.lambda = lambda;
  if (std::abs(lambda - n) <= 1e-12 * std::max(1.0, n)) {
    m.kind = MeasureKind::critical;
    m.lambda = n;
    m.ratio = std::sqrt(p.a * p.c) / p.a;
    m.summable = m.ratio < 1.0;
    m.total_mass = m.summable ? m.ratio / ((1.0 - m.ratio) * (1.0 - m.ratio)) : kInf;
    return m;
  }
  if (lambda < n)
    throw DomainError("no positive invariant measure below the convergence norm (lambda = " +
                      std::to_string(lambda) + " < nu = " + std::to_string(n) + ")");
  m.kind = MeasureKind::supercritical_window;
  const double delta = (p.b - lambda) * (p.b - lambda) - 4.0 * p.a * p.c;
  const double root = std::sqrt(std::max(delta, 0.0));
  m.rho_plus = (lambda - p.b + root) / (2.0 * p.a);
  m.rho_minus = (lambda - p.b - root) / (2.0 * p.a);
  m.summable = m.rho_plus < 1.0;
  m.total_mass = m.summable ? m.rho_plus / (1.0 - m.rho_plus) - m.rho_minus / (1.0 - m.rho_minus)
                            : kInf;
  return m;
}

InitialDistribution eigen_distribution(const TridiagonalParams& p, double lambda,
                                       std::optional<int> k_cut) {
  const InvariantMeasure m = invariant_measure(p, lambda);
  if (!m.summable)
    throw DomainError("invariant measure is not summable; no initial distribution exists");

  int cut;
  if (k_cut) {
    if (*k_cut < 1) throw DomainError("k_cut must be >= 1");
    cut = *k_cut;
  } else {
    const double decay = m.kind == MeasureKind::critical ? m.ratio : m.rho_plus;
    const double guess = std::log(kTailTolerance * m.total_mass * (1.0 - decay)) / std::log(decay);
    cut = std::max(1, static_cast<int>(std::floor(guess)) - 1);
    while (m.tail_mass(cut) / m.total_mass >= kTailTolerance) ++cut;
    while (cut > 1 && m.tail_mass(cut - 1) / m.total_mass < kTailTolerance) --cut;
  }

  InitialDistribution d;
  d.weights.reserve(static_cast<std::size_t>(cut));
  for (int k = 1; k <= cut; ++k) d.weights.push_back(m.x(k) / m.total_mass);
  d.tail_deficit = std::max(0.0, m.tail_mass(cut) / m.total_mass);
  return d;
}

double verify_measure(const TridiagonalParams& p, double lambda, std::span<const double> x) {
  if (x.size() < 3) throw DomainError("verify_measure needs at least 3 values");
  double worst = std::abs(p.b * x[0] + p.a * x[1] - lambda * x[0]);
  for (std::size_t k = 1; k + 1 < x.size(); ++k)
    worst = std::max(worst, std::abs(p.a * x[k + 1] + (p.b - lambda) * x[k] + p.c * x[k - 1]));
  return worst;
}

double verify_measure(const TridiagonalParams& p, const InvariantMeasure& m, int K) {
  if (K < 3) throw DomainError("verify_measure needs K >= 3");
  const std::vector<double> x = m.values(K + 1);
  return verify_measure(p, m.lambda, x);
}

}  // namespace infbranch
