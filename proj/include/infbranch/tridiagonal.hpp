#pragma once

// Closed-form results for the reflected homogeneous tridiagonal mean matrix
//
//     | b c       |
//     | a b c     |
//     |   a b c   |
//     |     . . . |
//
// with a, c > 0 and b >= 0: its convergence norm and the positive left
// eigenvectors x M = lambda x that exist for every lambda >= nu.

#include <optional>
#include <span>
#include <vector>

#include "infbranch/model.hpp"

namespace infbranch {

struct TridiagonalParams {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  /// Throws ModelError unless a, c > 0 and b >= 0.
  void validate() const;
  static TridiagonalParams from_rule(const TridiagonalRule& r) { return {r.a, r.b, r.c}; }
};

/// b + 2 sqrt(ac).
double nu(const TridiagonalParams& p);

enum class MeasureKind { critical, supercritical_window };

/// x_k (eta = 1) solving x M = lambda x.
///  critical (lambda = nu):  x_k = k r^k,              r = sqrt(ac) / a
///  lambda > nu:             x_k = rho_+^k - rho_-^k,  rho_+- = (lambda - b +- sqrt(D)) / 2a
/// with D = (b - lambda)^2 - 4ac.
struct InvariantMeasure {
  TridiagonalParams params;
  double lambda = 0.0;
  MeasureKind kind = MeasureKind::critical;
  double ratio = 0.0;      // r, critical case
  double rho_plus = 0.0;   // supercritical window
  double rho_minus = 0.0;
  bool summable = false;
  /// sum_k x_k; infinite when not summable.
  double total_mass = 0.0;

  double x(int k) const;
  /// sum_{j > k} x_j in closed form.
  double tail_mass(int k) const;
  std::vector<double> values(int count) const;
};

/// Throws DomainError for lambda < nu (no positive invariant measure exists).
/// lambda within 1e-12 (relative) of nu is treated as nu.
InvariantMeasure invariant_measure(const TridiagonalParams& p, double lambda);

/// Normalized measure alpha_k = x_k / sum x as an initial distribution.
/// Without `k_cut` the cut is the smallest k whose closed-form tail mass is
/// below 1e-12; with it, the given cut is used. The omitted mass is declared
/// as the tail deficit, never folded into the kept weights.
InitialDistribution eigen_distribution(const TridiagonalParams& p, double lambda,
                                       std::optional<int> k_cut = std::nullopt);

/// Largest absolute violation of b x_1 + a x_2 = lambda x_1 and
/// a x_{k+1} + (b - lambda) x_k + c x_{k-1} = 0 for k = 2..K-1.
double verify_measure(const TridiagonalParams& p, double lambda, std::span<const double> x);
double verify_measure(const TridiagonalParams& p, const InvariantMeasure& m, int K);

}  // namespace infbranch
