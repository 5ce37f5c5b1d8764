#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "infbranch/errors.hpp"
#include "infbranch/graph.hpp"
#include "infbranch/model_io.hpp"
#include "infbranch/spectral.hpp"
#include "infbranch/tridiagonal.hpp"
#include "oracles.hpp"

using namespace infbranch;

namespace {

ModelSpec fixture(const char* name) { return load_model(oracle::models_dir() + "/" + name + ".json"); }

std::vector<std::vector<double>> dense_of(const BandMatrix& b) {
  std::vector<std::vector<double>> d(b.size(), std::vector<double>(b.size(), 0.0));
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) d[i][j] = b.at(i, j);
  return d;
}

}  // namespace

TEST_CASE("Perron root of random irreducible band matrices matches Eigen") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.01, 2.0);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial) * 3;
    const int lo = 1 + trial % 2, up = 1 + trial % 3;
    BandMatrix a(n, lo, up);
    for (std::size_t i = 0; i < n; ++i)
      for (int d = -lo; d <= up; ++d) {
        const long j = static_cast<long>(i) + d;
        if (j >= 0 && j < static_cast<long>(n)) a.set(i, static_cast<std::size_t>(j), d == 0 ? u(rng) * 0.1 : u(rng));
      }
    const PerronResult r = perron_root(a);
    const double ref = oracle::dense_spectral_radius(dense_of(a));
    CAPTURE(n);
    CHECK(r.lower <= ref * (1 + 1e-12));
    CHECK(r.upper >= ref * (1 - 1e-12));
    CHECK(r.value == doctest::Approx(ref).epsilon(1e-10));
    for (double v : r.vector) CHECK(v > 0.0);
  }
}

TEST_CASE("Perron root with badly scaled entries") {
  // Strongly asymmetric Toeplitz tridiagonal. A dense eigen solver loses digits
  // here; the exact top eigenvalue is b + 2 sqrt(ac) cos(pi / (n + 1)).
  const std::size_t n = 60;
  BandMatrix a(n, 1, 1);
  for (std::size_t i = 0; i < n; ++i) {
    a.set(i, i, 0.5);
    if (i + 1 < n) a.set(i, i + 1, 0.04);
    if (i > 0) a.set(i, i - 1, 0.5);
  }
  const double ref = 0.5 + 2.0 * std::sqrt(0.5 * 0.04) * std::cos(std::numbers::pi / (n + 1));
  CHECK(perron_root(a).value == doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("spectral radius of reducible matrices") {
  DenseMatrix d(3);
  d(0, 0) = 0.3;
  d(0, 1) = 5.0;
  d(1, 1) = 0.7;
  d(2, 2) = 0.2;
  d(1, 2) = 1.0;
  CHECK(spectral_radius(d) == doctest::Approx(0.7));
  DenseMatrix one(1);
  one(0, 0) = 0.5;
  CHECK(spectral_radius(one) == 0.5);
  DenseMatrix neg(1);
  neg(0, 0) = -1.0;
  CHECK_THROWS_AS(spectral_radius(neg), DomainError);
}

TEST_CASE("convergence norm of the tridiagonal cases") {
  const SpectralReport r2 = convergence_norm(fixture("case2"), 200);
  const double nu2 = nu(TridiagonalParams{0.5, 0.5, 0.04});
  CHECK(std::abs(r2.estimate - nu2) < 1e-3);
  CHECK(r2.estimate <= nu2);
  CHECK(r2.irreducible);
  for (std::size_t k = 1; k < r2.radii.size(); ++k) CHECK(r2.radii[k] >= r2.radii[k - 1] - 1e-12);
  const SpectralReport r1 = convergence_norm(fixture("case1"), 100);
  CHECK(r1.estimate > 1.0);
  CHECK(std::abs(r1.estimate - nu(TridiagonalParams{0.5, 0.5, 1.0 / 3.0})) < 1e-3);
  // Truncations against the dense eigen solver.
  const ModelSpec m = fixture("case3");
  const SpectralReport r3 = convergence_norm(m, 20);
  for (int k : {1, 5, 20})
    CHECK(r3.radii[static_cast<std::size_t>(k - 1)] ==
          doctest::Approx(oracle::dense_spectral_radius(oracle::dense_mean_matrix(m, k))).epsilon(1e-10));
}

TEST_CASE("convergence norm of small explicit models") {
  const SpectralReport half = convergence_norm(fixture("half"), 10);
  CHECK(half.K == 1);
  CHECK(half.estimate == 0.5);
  const SpectralReport sd = convergence_norm(fixture("super_diagonal"), 30);
  CHECK_FALSE(sd.irreducible);
  for (std::size_t k = 9; k < sd.radii.size(); ++k) CHECK(sd.radii[k] == doctest::Approx(1.6).epsilon(1e-14));
  CHECK(sd.radii[0] == 0.0);
}

TEST_CASE("strongly connected components") {
  Digraph g(6);
  g[0] = {1};
  g[1] = {2};
  g[2] = {0, 3};
  g[3] = {4};
  g[4] = {3};
  const SccResult s = strongly_connected_components(g);
  CHECK(s.count == 3);
  CHECK(s.component[0] == s.component[2]);
  CHECK(s.component[3] == s.component[4]);
  CHECK(s.component[5] != s.component[0]);
  const auto reach = condensation_reachability(g, s);
  CHECK(reach[s.component[0]][s.component[3]]);
  CHECK_FALSE(reach[s.component[3]][s.component[0]]);
}

TEST_CASE("classification of the super-diagonal model") {
  const ClassDecomposition d = class_decomposition(fixture("super_diagonal"), 30);
  CHECK(d.classes.size() == 30);
  for (TypeIndex t = 1; t <= 30; ++t) {
    const auto& cl = d.classes[d.class_of(t)];
    CHECK(cl.members == std::vector<TypeIndex>{t});
    CHECK(cl.norm == doctest::Approx(t == 10 ? 1.6 : 0.0));
    CHECK((d.classification[static_cast<std::size_t>(t - 1)] == TypeClassification::partial_survival_possible) ==
          (t <= 10));
  }
  REQUIRE(d.tail_norm);
  CHECK(*d.tail_norm == 0.0);
}

TEST_CASE("irreducible models form a single infinite class") {
  const ClassDecomposition d = class_decomposition(fixture("case1"), 20);
  REQUIRE(d.classes.size() == 1);
  CHECK(d.classes[0].members.size() == 20);
  CHECK(d.classes[0].infinite);
  CHECK(d.classes[0].norm == doctest::Approx(nu(TridiagonalParams{0.5, 0.5, 1.0 / 3.0})).epsilon(1e-4));
  CHECK(d.classification[0] == TypeClassification::partial_survival_possible);
  const ClassDecomposition d2 = class_decomposition(fixture("case2"), 10);
  CHECK(d2.classification[0] == TypeClassification::partial_extinction_certain);
}

TEST_CASE("diagonal model classification follows the diagonal") {
  const ModelSpec m = fixture("diagonal");
  const ClassDecomposition d = class_decomposition(m, 10);
  CHECK(d.K == 3);
  const auto dense = oracle::dense_mean_matrix(m, 3);
  for (TypeIndex t = 1; t <= 3; ++t) {
    const auto u = static_cast<std::size_t>(t - 1);
    CHECK(d.classes[d.class_of(t)].norm == doctest::Approx(dense[u][u]));
    CHECK((d.classification[u] == TypeClassification::partial_survival_possible) == (dense[u][u] > 1.0));
  }
  CHECK(d.reach.empty());
}

TEST_CASE("extinction certificate") {
  const ModelSpec m2 = fixture("case2");
  const TridiagonalParams p{0.5, 0.5, 0.04};
  const InvariantMeasure x = invariant_measure(p, nu(p));
  const auto cand = CandidateMeasure::from_closed_form(x, 100);

  const ExtinctionCertificate yes = certify_global_extinction(m2, nu(p), cand, true);
  CHECK(yes.verified);
  CHECK(yes.conclusion == "q = 1");
  const ExtinctionCertificate no_dich = certify_global_extinction(m2, nu(p), cand, false);
  CHECK(no_dich.verified);
  CHECK(no_dich.conclusion == "inequality holds; dichotomy not asserted - no conclusion");

  CandidateMeasure bare{cand.values, std::nullopt};
  const ExtinctionCertificate no_tail = certify_global_extinction(m2, nu(p), bare, true);
  CHECK(no_tail.inequality_holds);
  CHECK_FALSE(no_tail.verified);

  CandidateMeasure bent = bare;
  bent.values[4] *= 2.0;
  const ExtinctionCertificate bad = certify_global_extinction(m2, nu(p), bent, true);
  CHECK_FALSE(bad.inequality_holds);
  REQUIRE(bad.offending);
  CHECK(*bad.offending >= 4);

  // A measure for case 2 does not certify case 3.
  const ExtinctionCertificate other = certify_global_extinction(fixture("case3"), nu(p), cand, true);
  CHECK_FALSE(other.verified);

  CHECK_THROWS_AS(certify_global_extinction(m2, 1.5, cand, true), DomainError);
  CHECK_THROWS_AS(certify_global_extinction(m2, 0.9, CandidateMeasure{{1.0, -1.0, 1.0}, std::nullopt}, true),
                  DomainError);
}

TEST_CASE("certificate on an explicit model uses its Perron vector") {
  const ModelSpec m = fixture("half");
  const ExtinctionCertificate c = certify_global_extinction(m, 0.5, CandidateMeasure{{1.0}, std::nullopt}, true);
  CHECK(c.verified);
  CHECK(c.conclusion == "q = 1");
}
