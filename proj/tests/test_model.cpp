#include <cmath>
#include <vector>

#include "doctest.h"
#include "infbranch/errors.hpp"
#include "infbranch/model.hpp"
#include "infbranch/model_io.hpp"
#include "oracles.hpp"

using namespace infbranch;

namespace {
using Counts = std::vector<std::pair<TypeIndex, int>>;

double prob_of(const ProgenyLaw& law, std::vector<std::pair<TypeIndex, int>> counts) {
  for (const auto& e : law.events())
    if (e.counts == counts) return e.probability;
  return 0.0;
}

ModelSpec fixture(const char* name) { return load_model(oracle::models_dir() + "/" + name + ".json"); }

}  // namespace

TEST_CASE("tridiagonal laws put all children on one type") {
  const TridiagonalRule r{0.5, 0.5, 1.0 / 3.0};
  // Type 1: t = ceil(b + c) + 1 = 2.
  const ProgenyLaw l1 = tridiagonal_law(r, 1);
  CHECK(prob_of(l1, {{1, 2}}) == doctest::Approx(0.25));
  CHECK(prob_of(l1, {{2, 2}}) == doctest::Approx(1.0 / 6.0));
  CHECK(prob_of(l1, {}) == doctest::Approx(1.0 - 5.0 / 12.0));
  // Type >= 2: u = ceil(a + b + c) + 1 = 3.
  const ProgenyLaw l5 = tridiagonal_law(r, 5);
  CHECK(prob_of(l5, {{4, 3}}) == doctest::Approx(1.0 / 6.0));
  CHECK(prob_of(l5, {{5, 3}}) == doctest::Approx(1.0 / 6.0));
  CHECK(prob_of(l5, {{6, 3}}) == doctest::Approx(1.0 / 9.0));
  CHECK(l5.mean(4) == doctest::Approx(0.5));
  CHECK(l5.mean(5) == doctest::Approx(0.5));
  CHECK(l5.mean(6) == doctest::Approx(1.0 / 3.0));
  CHECK(l5.offsets(5) == std::pair<int, int>{1, 1});
}

TEST_CASE("super-diagonal law with b = 0 is the cubic") {
  const ProgenyLaw l = super_diagonal_law({0.0, 1.9}, 4);
  CHECK(l.events().size() == 2);
  CHECK(prob_of(l, {{5, 3}}) == doctest::Approx(19.0 / 30.0));
  CHECK(prob_of(l, {}) == doctest::Approx(11.0 / 30.0));
}

TEST_CASE("super-diagonal fixture overrides type 10") {
  const ModelSpec m = fixture("super_diagonal");
  const ProgenyLaw l = m.law(10);
  CHECK(prob_of(l, {{10, 4}}) == doctest::Approx(0.4));
  CHECK(prob_of(l, {{11, 4}}) == doctest::Approx(0.2));
  CHECK(l.mean(10) == doctest::Approx(1.6));
  CHECK(m.tail_start() == 11);
  CHECK(m.band_up() == 1);
  CHECK(m.band_down() == 0);
  CHECK_FALSE(m.tail_irreducible());
  CHECK(*m.tail_singleton_norm() == 0.0);
}

TEST_CASE("invalid laws are rejected") {
  CHECK_THROWS_AS(ProgenyLaw({OffspringEvent(Counts{{1, 1}}, 0.5)}), ModelError);
  CHECK_THROWS_AS(ProgenyLaw({OffspringEvent(Counts{{1, 1}}, 1.2), OffspringEvent(Counts{}, -0.2)}), ModelError);
  CHECK_THROWS_AS(ProgenyLaw({OffspringEvent(Counts{{1, 1}}, 0.5), OffspringEvent(Counts{{1, 1}}, 0.5)}), ModelError);
  CHECK_THROWS_AS(OffspringEvent(Counts{{0, 1}}, 1.0), ModelError);
  CHECK_THROWS_AS(OffspringEvent(Counts{{2, 1}, {2, 3}}, 1.0), ModelError);
  CHECK_NOTHROW(ProgenyLaw({OffspringEvent(Counts{{1, 1}}, 0.5), OffspringEvent(Counts{}, 0.5 + 5e-13)}));
}

TEST_CASE("zero counts are dropped from events") {
  const OffspringEvent e(Counts{{3, 0}, {1, 2}}, 1.0);
  CHECK(e.counts == std::vector<std::pair<TypeIndex, int>>{{1, 2}});
  CHECK(e.total_children() == 2);
}

TEST_CASE("explicit models must cover a contiguous support") {
  std::map<TypeIndex, ProgenyLaw> laws;
  laws.emplace(1, ProgenyLaw({OffspringEvent(Counts{{2, 1}}, 1.0)}));
  CHECK_THROWS_AS(ModelSpec::explicit_finite("gap", laws), ModelError);
  laws.emplace(2, ProgenyLaw({OffspringEvent(Counts{}, 1.0)}));
  const ModelSpec m = ModelSpec::explicit_finite("ok", laws);
  CHECK(*m.support() == 2);
  CHECK(m.clamp(10) == 2);
  CHECK_THROWS_AS(m.law(3), DomainError);
  std::map<TypeIndex, ProgenyLaw> out_of_range;
  out_of_range.emplace(1, ProgenyLaw({OffspringEvent(Counts{{5, 1}}, 1.0)}));
  CHECK_THROWS_AS(ModelSpec::explicit_finite("far", out_of_range), ModelError);
}

TEST_CASE("tridiagonal parameters must be positive") {
  CHECK_THROWS_AS(ModelSpec::tridiagonal("bad", 0.0, 0.5, 0.5), ModelError);
  CHECK_THROWS_AS(ModelSpec::tridiagonal("bad", 0.5, -0.1, 0.5), ModelError);
}

TEST_CASE("pgf_truncated distinguishes the two fills") {
  const ModelSpec m = fixture("case1");
  const std::vector<double> s = {0.5, 0.5};
  // Type 2 has children of types 1, 2, 3; type 3 lies above k = 2.
  const double p0 = pgf_truncated(m, 2, s, 0.0);
  const double p1 = pgf_truncated(m, 2, s, 1.0);
  CHECK(p0 == doctest::Approx(1.0 / 6.0 * 0.125 + 1.0 / 6.0 * 0.125 + (1.0 - 4.0 / 9.0)));
  CHECK(p1 == doctest::Approx(p0 + 1.0 / 9.0));
  CHECK_THROWS_AS(pgf_truncated(m, 2, s, 0.5), DomainError);
  CHECK_THROWS_AS(pgf_truncated(m, 2, std::vector<double>{1.5, 0.0}, 0.0), DomainError);
}

TEST_CASE("mean matrix truncation matches the dense oracle") {
  for (const char* name : {"case1", "case3", "super_diagonal", "diagonal"}) {
    const ModelSpec m = fixture(name);
    const TypeIndex k = m.clamp(15);
    const auto dense = oracle::dense_mean_matrix(m, k);
    const BandMatrix band = mean_matrix_truncation(m, k);
    for (TypeIndex i = 0; i < k; ++i)
      for (TypeIndex j = 0; j < k; ++j)
        CHECK(band.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) ==
              doctest::Approx(dense[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
  }
}

TEST_CASE("expected population") {
  const ModelSpec m = fixture("case1");
  const InitialDistribution a = InitialDistribution::from_map({{1, 0.25}, {3, 0.75}});
  CHECK(expected_population(m, a, 0, 20) == doctest::Approx(1.0));
  const auto dense = oracle::dense_mean_matrix(m, 20);
  for (int n : {1, 4, 9})
    CHECK(expected_population(m, a, n, 20) ==
          doctest::Approx(oracle::dense_expected_population(dense, a.weights, n)).epsilon(1e-12));
  // Nondecreasing in the truncation level.
  CHECK(expected_population(m, a, 6, 10) <= expected_population(m, a, 6, 20));
  CHECK_THROWS_AS(expected_population(m, a, 2, 2), ModelError);
}

TEST_CASE("initial distributions") {
  CHECK(InitialDistribution::point_mass(3).weights == std::vector<double>{0.0, 0.0, 1.0});
  CHECK_THROWS_AS(InitialDistribution::from_map({{1, 0.5}}), ModelError);
  InitialDistribution d{{0.5, 0.25}, 0.25};
  CHECK_NOTHROW(d.validate());
  CHECK(d.renormalized().weights[0] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("band matrix products") {
  BandMatrix a(4, 1, 2);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (j + 1 >= i && j <= i + 2) a.set(i, j, 1.0 + static_cast<double>(i) * 4 + static_cast<double>(j));
  CHECK_THROWS(a.set(3, 0, 1.0));
  const std::vector<double> x = {1.0, -2.0, 0.5, 3.0};
  std::vector<double> y(4), z(4);
  a.multiply(x, y);
  a.left_multiply(x, z);
  const DenseMatrix d = a.to_dense();
  for (std::size_t i = 0; i < 4; ++i) {
    double yi = 0.0, zi = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      yi += d(i, j) * x[j];
      zi += x[j] * d(j, i);
    }
    CHECK(y[i] == doctest::Approx(yi));
    CHECK(z[i] == doctest::Approx(zi));
  }
  const std::vector<std::size_t> idx = {0, 2, 3};
  const BandMatrix sub = a.principal_submatrix(idx);
  CHECK(sub.at(1, 2) == d(2, 3));
  CHECK(sub.at(0, 1) == d(0, 2));
  CHECK(sub.at(2, 0) == 0.0);
  CHECK(a.leading_block(2).at(1, 0) == d(1, 0));
}
