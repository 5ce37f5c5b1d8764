#include "infbranch/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>
#include <unordered_map>

#include "infbranch/errors.hpp"

namespace infbranch {

namespace {

constexpr std::uint64_t kInitialGeneration = std::numeric_limits<std::uint64_t>::max();
constexpr int kChunk = 1024;

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct Sampler {
  std::vector<double> cdf;
  std::vector<std::vector<std::pair<TypeIndex, int>>> children;

  explicit Sampler(const ProgenyLaw& law) {
    double acc = 0.0;
    for (const auto& e : law.events()) {
      acc += e.probability;
      cdf.push_back(acc);
      children.push_back(e.counts);
    }
  }

  const std::vector<std::pair<TypeIndex, int>>& draw(double u) const {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const auto j = it == cdf.end() ? cdf.size() - 1 : static_cast<std::size_t>(it - cdf.begin());
    return children[j];
  }
};

TypeIndex initial_type(const SimConfig& config, std::uint64_t seed) {
  if (const auto* t = std::get_if<TypeIndex>(&config.initial)) return *t;
  const auto& w = std::get<InitialDistribution>(config.initial).weights;
  double total = 0.0;
  for (double x : w) total += x;
  // The declared tail deficit is ignored: sampling uses the stored weights.
  const double u = counter_uniform(seed, kInitialGeneration, 0) * total;
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    acc += w[k];
    if (u < acc) return static_cast<TypeIndex>(k + 1);
  }
  for (std::size_t k = w.size(); k > 0; --k)
    if (w[k - 1] > 0.0) return static_cast<TypeIndex>(k);
  return 1;
}

struct ChunkSums {
  std::vector<double> extinct;
  std::vector<double> sum;
  std::vector<double> sumsq;
  std::vector<bool> unknown;
  int capped = 0;
};

}  // namespace

void SimConfig::validate() const {
  if (generations < 0) throw ModelError("generations must be >= 0");
  if (population_cap < 1) throw ModelError("population cap must be >= 1");
  if (replicas < 1) throw ModelError("replicas must be >= 1");
  if (const auto* t = std::get_if<TypeIndex>(&initial)) {
    if (*t < 1) throw ModelError("initial type must be >= 1");
  } else {
    std::get<InitialDistribution>(initial).validate();
  }
}

double counter_uniform(std::uint64_t seed, std::uint64_t generation, std::uint64_t index) {
  const std::uint64_t key = splitmix(splitmix(splitmix(seed) ^ generation) ^ index);
  return static_cast<double>(key >> 11) * 0x1.0p-53;
}

std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t r) {
  return splitmix(seed ^ splitmix(r + 0x632be59bd9b4e019ULL));
}

SimulationPath simulate_path(const ModelSpec& model, const SimConfig& config) {
  config.validate();
  SimulationPath path;
  path.seed = config.seed;
  const TypeIndex first = initial_type(config, config.seed);
  if (auto n = model.support(); n && first > *n)
    throw DomainError("initial type outside the model support");

  std::unordered_map<TypeIndex, Sampler> samplers;
  const auto sampler = [&](TypeIndex i) -> const Sampler& {
    auto it = samplers.find(i);
    if (it == samplers.end()) it = samplers.emplace(i, Sampler(model.law(i))).first;
    return it->second;
  };

  path.per_generation.push_back({{first, 1}});
  path.totals.push_back(1);
  if (path.totals.back() > config.population_cap) {
    path.outcome = PathOutcome::capped;
    return path;
  }

  for (int n = 0; n < config.generations; ++n) {
    std::map<TypeIndex, std::uint64_t> next;
    std::uint64_t total = 0;
    std::uint64_t index = 0;
    bool capped = false;
    for (const auto& [type, count] : path.per_generation.back()) {
      const Sampler& s = sampler(type);
      for (std::uint64_t c = 0; c < count && !capped; ++c, ++index) {
        const double u = counter_uniform(config.seed, static_cast<std::uint64_t>(n), index);
        for (const auto& [child, k] : s.draw(u)) {
          next[child] += static_cast<std::uint64_t>(k);
          total += static_cast<std::uint64_t>(k);
        }
        capped = total > config.population_cap;
      }
      if (capped) break;
    }
    if (capped) {
      path.outcome = PathOutcome::capped;
      return path;
    }
    path.per_generation.push_back(std::move(next));
    path.totals.push_back(total);
    if (total == 0) {
      path.outcome = PathOutcome::extinct;
      path.extinct_generation = n + 1;
      return path;
    }
  }
  path.outcome = PathOutcome::survived;
  return path;
}

EnsembleResult simulate_ensemble(const ModelSpec& model, const SimConfig& config) {
  config.validate();
  const int reps = config.replicas;
  const auto gens = static_cast<std::size_t>(config.generations) + 1;
  const int chunks = (reps + kChunk - 1) / kChunk;
  std::vector<ChunkSums> sums(static_cast<std::size_t>(chunks));

  const auto run_chunk = [&](int c) {
    ChunkSums& cs = sums[static_cast<std::size_t>(c)];
    cs.extinct.assign(gens, 0.0);
    cs.sum.assign(gens, 0.0);
    cs.sumsq.assign(gens, 0.0);
    cs.unknown.assign(gens, false);
    SimConfig one = config;
    one.replicas = 1;
    for (int r = c * kChunk; r < std::min(reps, (c + 1) * kChunk); ++r) {
      one.seed = replica_seed(config.seed, static_cast<std::uint64_t>(r));
      const SimulationPath p = simulate_path(model, one);
      for (std::size_t n = 0; n < gens; ++n) {
        double t;
        if (n < p.totals.size()) {
          t = static_cast<double>(p.totals[n]);
        } else if (p.outcome == PathOutcome::extinct) {
          t = 0.0;
        } else {
          cs.unknown[n] = true;
          continue;
        }
        cs.sum[n] += t;
        cs.sumsq[n] += t * t;
        if (p.extinct_generation && static_cast<std::size_t>(*p.extinct_generation) <= n)
          cs.extinct[n] += 1.0;
      }
      if (p.outcome == PathOutcome::capped) ++cs.capped;
    }
  };

  unsigned workers = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(chunks));
  if (workers <= 1) {
    for (int c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (int c = static_cast<int>(w); c < chunks; c += static_cast<int>(workers)) run_chunk(c);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  EnsembleResult out;
  out.replicas = reps;
  out.extinct_fraction.assign(gens, 0.0);
  out.extinct_se.assign(gens, 0.0);
  out.mean_total.assign(gens, 0.0);
  out.total_se.assign(gens, 0.0);
  std::vector<double> sum(gens, 0.0), sumsq(gens, 0.0);
  std::vector<bool> unknown(gens, false);
  for (const ChunkSums& cs : sums) {
    out.capped += cs.capped;
    for (std::size_t n = 0; n < gens; ++n) {
      out.extinct_fraction[n] += cs.extinct[n];
      sum[n] += cs.sum[n];
      sumsq[n] += cs.sumsq[n];
      if (cs.unknown[n]) unknown[n] = true;
    }
  }
  const double r = reps;
  bool lost = false;
  for (std::size_t n = 0; n < gens; ++n) {
    const double f = out.extinct_fraction[n] / r;
    out.extinct_fraction[n] = f;
    out.extinct_se[n] = reps > 1 ? std::sqrt(f * (1.0 - f) / (r - 1.0)) : 0.0;
    lost = lost || unknown[n];
    if (lost) {
      out.mean_total[n] = out.total_se[n] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double mean = sum[n] / r;
    const double var = reps > 1 ? std::max(0.0, (sumsq[n] - r * mean * mean) / (r - 1.0)) : 0.0;
    out.mean_total[n] = mean;
    out.total_se[n] = std::sqrt(var / r);
  }
  return out;
}

}  // namespace infbranch
