#include "infbranch/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "infbranch/errors.hpp"
#include "infbranch/kernels.hpp"
#include "infbranch/poly_system.hpp"

namespace infbranch {

namespace {

constexpr double kMonotoneSlack = 1e-10;
// Largest per-step decrease attributed to rounding in F(w).
constexpr double kInnerDropTolerance = 1e-13;

void check_level_order(const ExtinctionRun& lower, const ExtinctionRun& upper, double slack_sign) {
  // slack_sign = +1: upper level must dominate (global); -1: be dominated (partial).
  const double slack = kMonotoneSlack + (slack_sign > 0 ? upper.error_estimate : lower.error_estimate);
  for (TypeIndex i = 1; i <= upper.k; ++i) {
    const double a = lower.padded(i);
    const double b = upper.padded(i);
    const double violation = slack_sign > 0 ? a - b : b - a;
    if (violation > slack)
      throw InvariantViolation("extinction vectors not monotone in k at type " +
                               std::to_string(i) + " between k=" + std::to_string(lower.k) +
                               " and k=" + std::to_string(upper.k));
  }
}

ExtinctionSeries run_levels(const ModelSpec& model, const SolveSettings& settings, double fill) {
  settings.validate();
  const TypeIndex k_max = model.clamp(settings.k_max);
  const TypeIndex k_min = std::min(settings.k_min, k_max);
  const bool complete_model = model.support().has_value();

  ExtinctionSeries out;
  std::vector<double> warm;
  for (TypeIndex k = 1;; k += settings.k_stride) {
    k = std::min(k, k_max);
    if (fill == 0.0 && !out.runs.empty()) {
      warm = out.runs.back().vector;
      warm.resize(static_cast<std::size_t>(k), 0.0);
    }
    ExtinctionRun run = solve_truncated(model, k, fill, settings, warm);

    if (!out.runs.empty()) {
      const ExtinctionRun& prev = out.runs.back();
      check_level_order(prev, run, fill == 0.0 ? 1.0 : -1.0);
      const auto m = static_cast<std::size_t>(settings.probe_for(prev.k));
      const double change = kernels::active().max_abs_diff(prev.vector.data(), run.vector.data(), m);
      out.runs.push_back(std::move(run));
      if (k >= k_min && change < settings.outer_tol) {
        out.outer_converged = true;
        break;
      }
    } else {
      out.runs.push_back(std::move(run));
    }
    if (k >= k_max) {
      // An explicit model truncated at its own support is the exact system.
      out.outer_converged = out.outer_converged || (complete_model && k == *model.support());
      break;
    }
  }
  return out;
}

}  // namespace

void SolveSettings::validate() const {
  if (k_max < 1) throw DomainError("k_max must be >= 1");
  if (k_min < 1) throw DomainError("k_min must be >= 1");
  if (k_stride < 1) throw DomainError("k_stride must be >= 1");
  if (!(inner_tol > 0.0) || !(outer_tol > 0.0)) throw DomainError("tolerances must be > 0");
  if (inner_max_iters < 1) throw DomainError("inner_max_iters must be >= 1");
  if (probe_coords && (*probe_coords < 1 || *probe_coords > k_max))
    throw DomainError("probe_coords must be in [1, k_max]");
}

TypeIndex SolveSettings::probe_for(TypeIndex k) const {
  return std::min(k, probe_coords.value_or(10));
}

double ExtinctionRun::padded(TypeIndex i) const {
  if (i < 1) throw DomainError("type index must be >= 1");
  return i <= k ? vector[static_cast<std::size_t>(i - 1)] : pad_value;
}

ExtinctionRun solve_truncated(const ModelSpec& model, TypeIndex k, double fill,
                              const SolveSettings& settings, std::span<const double> warm_start) {
  if (k < 1) throw DomainError("truncation level must be >= 1");
  k = model.clamp(k);
  const PolySystem system(model, k, fill);
  const auto& kern = kernels::active();
  const auto n = static_cast<std::size_t>(k);

  ExtinctionRun run;
  run.mode = fill == 0.0 ? ExtinctionMode::global : ExtinctionMode::partial;
  run.k = k;
  run.pad_value = fill;
  run.vector.assign(n, 0.0);
  if (!warm_start.empty()) {
    if (warm_start.size() != n) throw DomainError("warm start has the wrong length");
    std::copy(warm_start.begin(), warm_start.end(), run.vector.begin());
  }

  std::vector<double> next(n);
  double step = std::numeric_limits<double>::infinity();
  double prev_step = step;
  for (long it = 1; it <= settings.inner_max_iters; ++it) {
    system.evaluate(run.vector, next, kern);
    const kernels::StepStats stats = kern.monotone_update(next.data(), run.vector.data(), n);
    if (stats.max_drop > kInnerDropTolerance)
      throw InvariantViolation("functional iteration decreased by " +
                               std::to_string(stats.max_drop) + " at k=" + std::to_string(k));
    run.vector.swap(next);
    run.inner_iters = it;
    prev_step = step;
    step = stats.max_rise;
    if (step < settings.inner_tol) {
      run.converged = true;
      break;
    }
  }

  system.evaluate(run.vector, next, kern);
  run.residual = kern.max_abs_diff(run.vector.data(), next.data(), n);

  if (step == 0.0) {
    run.error_estimate = 0.0;
  } else {
    const double theta = std::isfinite(prev_step) && prev_step > 0.0 ? step / prev_step : 1.0;
    run.error_estimate = theta < 1.0 ? step * theta / (1.0 - theta)
                                     : std::numeric_limits<double>::infinity();
  }
  return run;
}

ExtinctionSeries global_extinction(const ModelSpec& model, const SolveSettings& settings) {
  return run_levels(model, settings, 0.0);
}

ExtinctionSeries partial_extinction(const ModelSpec& model, const SolveSettings& settings) {
  return run_levels(model, settings, 1.0);
}

void check_sandwich(const ExtinctionSeries& global, const ExtinctionSeries& partial) {
  for (const auto& g : global.runs)
    for (const auto& p : partial.runs) {
      if (g.k != p.k) continue;
      const double slack = kMonotoneSlack + p.error_estimate;
      for (std::size_t i = 0; i < g.vector.size(); ++i)
        if (g.vector[i] - p.vector[i] > slack)
          throw InvariantViolation("global extinction exceeds partial extinction at type " +
                                   std::to_string(i + 1) + ", k=" + std::to_string(g.k));
    }
}

RateEstimate estimate_rate(std::span<const double> values, std::optional<double> reference) {
  if (values.size() < 4) throw DomainError("rate estimate needs at least 4 values");
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; }))
    throw DomainError("rate estimate needs a non-constant sequence");
  RateEstimate r;
  r.reference_value = reference.value_or(values.back());
  for (std::size_t j = 0; j + 1 < values.size(); ++j) {
    const double den = std::abs(r.reference_value - values[j]);
    const double num = std::abs(r.reference_value - values[j + 1]);
    if (den > 1e-14 && num > 0.0) r.ratios.push_back(num / den);
  }
  if (r.ratios.size() < 2) throw DomainError("sequence too short or already converged");
  const std::size_t tail = std::min<std::size_t>(5, r.ratios.size());
  double sum = 0.0;
  for (std::size_t j = r.ratios.size() - tail; j < r.ratios.size(); ++j) sum += r.ratios[j];
  r.mu = sum / static_cast<double>(tail);
  return r;
}

std::vector<double> coordinate_series(const ExtinctionSeries& s, TypeIndex i) {
  std::vector<double> out;
  out.reserve(s.runs.size());
  for (const auto& run : s.runs) out.push_back(run.padded(i));
  return out;
}

}  // namespace infbranch
