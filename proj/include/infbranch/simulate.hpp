#pragma once

// Monte Carlo sample paths. Randomness is counter-based: the uniform used by
// an individual depends only on (seed, generation, index of the individual in
// that generation), where individuals are numbered type by type in ascending
// type order. Paths are therefore reproducible bit for bit and replicas can
// run on any number of threads.

#include <cstdint>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "infbranch/model.hpp"

namespace infbranch {

struct SimConfig {
  /// Fixed initial type, or a law for it.
  std::variant<TypeIndex, InitialDistribution> initial = TypeIndex{1};
  int generations = 50;
  std::uint64_t population_cap = 10'000'000;
  std::uint64_t seed = 0;
  int replicas = 1;
  /// Worker threads for ensembles; 0 picks the hardware concurrency.
  unsigned threads = 0;

  void validate() const;
};

enum class PathOutcome { extinct, capped, survived };

struct SimulationPath {
  /// per_generation[n][i] = number of type-i individuals in generation n.
  std::vector<std::map<TypeIndex, std::uint64_t>> per_generation;
  std::vector<std::uint64_t> totals;
  PathOutcome outcome = PathOutcome::survived;
  /// Generation at which the total first hit 0.
  std::optional<int> extinct_generation;
  std::uint64_t seed = 0;
};

/// Uniform on [0, 1) from the counter (seed, generation, index).
double counter_uniform(std::uint64_t seed, std::uint64_t generation, std::uint64_t index);

/// Seed of replica r in an ensemble run with `seed`.
std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t r);

SimulationPath simulate_path(const ModelSpec& model, const SimConfig& config);

struct EnsembleResult {
  int replicas = 0;
  int capped = 0;
  /// Fraction of replicas extinct by generation n, n = 0..generations.
  std::vector<double> extinct_fraction;
  /// Standard error of extinct_fraction.
  std::vector<double> extinct_se;
  /// Mean and standard error of |Z_n|; NaN from the first generation at which
  /// some replica was capped, since its total is unknown there.
  std::vector<double> mean_total;
  std::vector<double> total_se;
};

/// Runs config.replicas independent paths (replica r uses replica_seed(seed, r)).
EnsembleResult simulate_ensemble(const ModelSpec& model, const SimConfig& config);

}  // namespace infbranch
