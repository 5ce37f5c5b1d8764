#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "infbranch/band_matrix.hpp"
#include "infbranch/model.hpp"
#include "infbranch/tridiagonal.hpp"

namespace infbranch {

struct PerronOptions {
  /// Stop once the Collatz-Wielandt bracket is this tight, relative to its top.
  double rel_tol = 1e-13;
  /// Accept a bracket this tight if it stops shrinking.
  double accept_tol = 1e-10;
  long max_iters = 100'000;
};

struct PerronResult {
  double value = 0.0;
  /// Certified bounds: min_i (Av)_i / v_i <= rho <= max_i (Av)_i / v_i.
  double lower = 0.0;
  double upper = 0.0;
  long iterations = 0;
  /// Perron vector estimate with its largest entry near 1. Entries of strongly
  /// graded vectors may underflow to zero.
  std::vector<double> vector;
};

/// Perron root of an irreducible nonnegative band matrix.
///
/// The matrix is first balanced by an exact power-of-two diagonal similarity.
/// Iterates are v <- (sigma I - A)^{-1} v, a power iteration on the
/// nonnegative resolvent, whose dominant eigenvector is the Perron vector of A.
/// The shift sigma always sits above the current upper Collatz-Wielandt bound,
/// so sigma I - A stays a nonsingular M-matrix and iterates stay positive.
/// `start` is an optional initial vector; zero entries are filled in from
/// their balanced neighbours.
PerronResult perron_root(const BandMatrix& a, std::span<const double> start = {},
                         const PerronOptions& opt = {});

/// Spectral radius of any square nonnegative matrix: the largest Perron root
/// over the irreducible diagonal blocks (strongly connected components).
double spectral_radius(const BandMatrix& a);
double spectral_radius(const DenseMatrix& a);

struct SpectralReport {
  /// sp(M^(1)), ..., sp(M^(K)).
  std::vector<double> radii;
  /// radii.back(): the convergence norm when the model is irreducible,
  /// otherwise the truncation limit.
  double estimate = 0.0;
  bool irreducible = false;
  TypeIndex K = 0;
};

SpectralReport convergence_norm(const ModelSpec& model, TypeIndex K);

enum class TypeClassification { partial_extinction_certain, partial_survival_possible };

struct CommunicationClass {
  /// Members of the class among types 1..K.
  std::vector<TypeIndex> members;
  double norm = 0.0;
  /// The class continues beyond the analysed window (infinite under the tail rule).
  bool infinite = false;
  /// `norm` comes from a truncation sequence that hit its size cap.
  bool provisional = false;
};

struct ClassDecomposition {
  TypeIndex K = 0;
  std::vector<CommunicationClass> classes;
  /// (a, b): class a reaches class b (a != b), transitively closed.
  std::vector<std::pair<std::size_t, std::size_t>> reach;
  /// Index t - 1 for type t.
  std::vector<TypeClassification> classification;
  std::vector<bool> provisional;
  /// Norm shared by the singleton classes beyond the window, for tail rules
  /// whose tail is reducible.
  std::optional<double> tail_norm;

  std::size_t class_of(TypeIndex t) const;
};

ClassDecomposition class_decomposition(const ModelSpec& model, TypeIndex K);

/// Candidate for x M <= lambda x: explicit values on types 1..values.size(),
/// plus optionally the closed-form measure that continues them.
struct CandidateMeasure {
  std::vector<double> values;
  std::optional<InvariantMeasure> closed_form;

  static CandidateMeasure from_closed_form(const InvariantMeasure& m, int range);
};

struct ExtinctionCertificate {
  double lambda = 0.0;
  CandidateMeasure x;
  bool verified = false;
  bool inequality_holds = false;
  /// First type where x M <= lambda x fails.
  std::optional<TypeIndex> offending;
  double max_excess = 0.0;
  /// Number of leading coordinates of x M that were checked numerically.
  TypeIndex checked = 0;
  std::string conclusion;
};

/// Checks x M <= lambda x numerically on the supplied range and accepts the
/// remaining coordinates only through a summable closed-form measure that
/// matches the model's tail. Concludes q = 1 only when that holds and the
/// caller asserts the dichotomy property for the model.
ExtinctionCertificate certify_global_extinction(const ModelSpec& model, double lambda,
                                                const CandidateMeasure& x,
                                                bool dichotomy_asserted);

}  // namespace infbranch
