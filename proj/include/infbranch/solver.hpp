#pragma once

// Extinction probability vectors of an infinite-type process through finite
// truncations.
//
//  * global extinction: types above k are killed (taboo process). The minimal
//    fixed points q^(k) of s = F^(k)(s) increase with k to q.
//  * partial extinction: types above k survive but are sterile. The minimal
//    fixed points q~^(k) decrease with k to q~.
//
// Each truncated system is solved by functional iteration from below.

#include <optional>
#include <span>
#include <vector>

#include "infbranch/model.hpp"

namespace infbranch {

enum class ExtinctionMode { global, partial };

struct SolveSettings {
  TypeIndex k_max = 50;
  /// Outer loop never stops before this level.
  TypeIndex k_min = 1;
  /// Step between consecutive truncation levels.
  TypeIndex k_stride = 1;
  double inner_tol = 1e-12;
  double outer_tol = 1e-9;
  long inner_max_iters = 1'000'000;
  /// Leading coordinates compared across levels; default min(k, 10).
  std::optional<TypeIndex> probe_coords;

  void validate() const;
  TypeIndex probe_for(TypeIndex k) const;
};

/// One truncation-level solve.
struct ExtinctionRun {
  ExtinctionMode mode = ExtinctionMode::global;
  TypeIndex k = 0;
  std::vector<double> vector;
  /// Value of every coordinate above k: 0 (global) or 1 (partial).
  double pad_value = 0.0;
  long inner_iters = 0;
  /// sup_i |w_i - F_i(w)| at the returned vector.
  double residual = 0.0;
  bool converged = false;
  /// A-posteriori bound on the distance to the exact fixed point, from the
  /// observed contraction of the last steps. Infinite if no contraction was seen.
  double error_estimate = 0.0;

  /// Coordinate i (1-based) of the padded infinite vector.
  double padded(TypeIndex i) const;
};

struct ExtinctionSeries {
  std::vector<ExtinctionRun> runs;
  /// True when the probe coordinates settled within outer_tol before k_max.
  bool outer_converged = false;
};

struct RateEstimate {
  std::vector<double> ratios;
  double mu = 0.0;
  double reference_value = 0.0;
};

/// Minimal nonnegative fixed point of the k-type system with the given fill.
/// Explicit-finite models are solved on at most their own support. A warm
/// start must be a sub-solution (F(w) >= w), for instance a lower level's
/// global vector padded with zeros.
ExtinctionRun solve_truncated(const ModelSpec& model, TypeIndex k, double fill,
                              const SolveSettings& settings,
                              std::span<const double> warm_start = {});

ExtinctionSeries global_extinction(const ModelSpec& model, const SolveSettings& settings);
ExtinctionSeries partial_extinction(const ModelSpec& model, const SolveSettings& settings);

/// Throws InvariantViolation unless global <= partial component-wise at every
/// level present in both series.
void check_sandwich(const ExtinctionSeries& global, const ExtinctionSeries& partial);

/// Linear convergence rate of a sequence. The reference defaults to the last
/// value, in which case the final (zero) ratio is skipped.
RateEstimate estimate_rate(std::span<const double> values,
                           std::optional<double> reference = std::nullopt);

/// Series of coordinate `i` over the runs, padded where i > k.
std::vector<double> coordinate_series(const ExtinctionSeries& s, TypeIndex i);

}  // namespace infbranch
