#pragma once

// Branching processes with countably many types 1, 2, 3, ... described by a
// finite set of explicit progeny laws (overrides) plus a parametric rule that
// produces the law of every other type.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "infbranch/band_matrix.hpp"

namespace infbranch {

/// Types are numbered from 1.
using TypeIndex = int;

inline constexpr double kProbabilityTolerance = 1e-12;

/// One outcome of a reproduction: how many children of each type are born,
/// and with what probability.
struct OffspringEvent {
  /// Sorted by type, every count > 0. Empty means no offspring.
  std::vector<std::pair<TypeIndex, int>> counts;
  double probability = 0.0;

  OffspringEvent() = default;
  OffspringEvent(std::vector<std::pair<TypeIndex, int>> c, double p);
  OffspringEvent(const std::map<TypeIndex, int>& c, double p);

  int total_children() const;
};

/// Finite-support offspring distribution of a single type.
class ProgenyLaw {
 public:
  ProgenyLaw() = default;
  /// Validates: probabilities in [0,1] summing to 1 within 1e-12, distinct
  /// count maps. Throws ModelError otherwise; nothing is renormalized.
  explicit ProgenyLaw(std::vector<OffspringEvent> events);

  const std::vector<OffspringEvent>& events() const& { return events_; }
  /// By value on temporaries, so `for (auto& e : model.law(i).events())` is safe.
  std::vector<OffspringEvent> events() && { return std::move(events_); }

  /// Largest child type minus `parent`, and largest `parent` minus child type.
  std::pair<int, int> offsets(TypeIndex parent) const;

  /// Expected number of type-j children.
  double mean(TypeIndex j) const;

 private:
  std::vector<OffspringEvent> events_;
};

/// Homogeneous branching random walk on 1, 2, ... reflected at 1: mean matrix
/// with b on the diagonal, c above and a below.
struct TridiagonalRule {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

/// Each type i has children of types i and i+1 only, means b and c.
struct SuperDiagonalRule {
  double b = 0.0;
  double c = 0.0;
};

/// No parametric tail: types 1..support are all given as overrides.
struct ExplicitFinite {
  TypeIndex support = 0;
};

using TailRule = std::variant<TridiagonalRule, SuperDiagonalRule, ExplicitFinite>;

std::string family_name(const TailRule& rule);

/// Law of type `i` under the tridiagonal family: the parent produces t (type 1)
/// or u (type >= 2) children of a single type, t = ceil(b+c)+1 and
/// u = ceil(a+b+c)+1.
ProgenyLaw tridiagonal_law(const TridiagonalRule& r, TypeIndex i);
ProgenyLaw super_diagonal_law(const SuperDiagonalRule& r, TypeIndex i);

/// Immutable description of an infinite-type process. Safe to share between
/// threads.
class ModelSpec {
 public:
  ModelSpec(std::string name, TailRule tail, std::map<TypeIndex, ProgenyLaw> overrides = {},
            bool dichotomy_asserted = false, std::string notes = {});

  static ModelSpec tridiagonal(std::string name, double a, double b, double c);
  static ModelSpec super_diagonal(std::string name, double b, double c,
                                  std::map<TypeIndex, ProgenyLaw> overrides = {});
  static ModelSpec explicit_finite(std::string name, std::map<TypeIndex, ProgenyLaw> laws);

  const std::string& name() const { return name_; }
  const TailRule& tail() const { return tail_; }
  const std::map<TypeIndex, ProgenyLaw>& overrides() const { return overrides_; }
  bool dichotomy_asserted() const { return dichotomy_asserted_; }
  const std::string& notes() const { return notes_; }

  ProgenyLaw law(TypeIndex i) const;

  /// Number of types for explicit-finite models.
  std::optional<TypeIndex> support() const;
  TypeIndex clamp(TypeIndex k) const;

  /// Max offset of a child type above / below its parent, over all types.
  int band_up() const { return band_up_; }
  int band_down() const { return band_down_; }

  /// First type from which every law comes from the tail rule.
  TypeIndex tail_start() const;

  /// Whether the tail rule makes all tail types communicate.
  bool tail_irreducible() const;

  /// For rules whose tail types are singleton classes: their common class
  /// norm (the diagonal mean). Empty otherwise.
  std::optional<double> tail_singleton_norm() const;

  std::optional<TridiagonalRule> tridiagonal_params() const;

 private:
  std::string name_;
  TailRule tail_;
  std::map<TypeIndex, ProgenyLaw> overrides_;
  bool dichotomy_asserted_ = false;
  std::string notes_;
  int band_up_ = 0;
  int band_down_ = 0;
};

/// Law of the initial type. `weights[k]` is the probability of type k + 1;
/// `tail_deficit` is the declared mass beyond the stored range.
struct InitialDistribution {
  std::vector<double> weights;
  double tail_deficit = 0.0;

  static InitialDistribution point_mass(TypeIndex type);
  static InitialDistribution from_map(const std::map<TypeIndex, double>& w);

  /// Throws ModelError unless weights are in [0,1] and weights + deficit sum
  /// to 1 within 1e-12.
  void validate() const;

  TypeIndex support() const { return static_cast<TypeIndex>(weights.size()); }
  double mass() const;
  InitialDistribution renormalized() const;
};

/// P_i evaluated at (s_1, ..., s_k, fill, fill, ...), fill in {0, 1}.
double pgf_truncated(const ModelSpec& model, TypeIndex i, std::span<const double> s, double fill);
double pgf_truncated(const ProgenyLaw& law, std::span<const double> s, double fill);

/// North-west k x k block of the mean progeny matrix.
BandMatrix mean_matrix_truncation(const ModelSpec& model, TypeIndex k);

/// alpha (M^(k))^n 1, a lower bound for E|Z_n| that is nondecreasing in k.
double expected_population(const ModelSpec& model, const InitialDistribution& alpha, int n,
                           TypeIndex k);

/// E|Z_n| lower bounds for n = 0..n_max with a single mean-matrix build.
std::vector<double> expected_population_series(const ModelSpec& model,
                                               const InitialDistribution& alpha, int n_max,
                                               TypeIndex k);

}  // namespace infbranch
