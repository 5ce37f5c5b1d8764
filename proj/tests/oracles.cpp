#include "oracles.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

namespace oracle {

DenseModel dense_from(const infbranch::ModelSpec& model) {
  DenseModel d;
  d.n = *model.support();
  for (int i = 1; i <= d.n; ++i) {
    Law law;
    for (const auto& e : model.law(i).events()) {
      std::vector<int> c(static_cast<std::size_t>(d.n), 0);
      for (const auto& [t, k] : e.counts) c[static_cast<std::size_t>(t - 1)] = k;
      law.emplace_back(std::move(c), e.probability);
    }
    d.laws.push_back(std::move(law));
  }
  return d;
}

infbranch::ModelSpec random_explicit_model(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  std::uniform_int_distribution<int> n_events(2, 4), n_children(0, 3), pick(1, n);
  std::map<infbranch::TypeIndex, infbranch::ProgenyLaw> laws;
  for (int i = 1; i <= n; ++i) {
    const int m = n_events(rng);
    std::set<std::map<int, int>> seen;
    std::vector<std::map<int, int>> shapes;
    while (static_cast<int>(shapes.size()) < m) {
      std::map<int, int> counts;
      const int kids = n_children(rng);
      for (int c = 0; c < kids; ++c) ++counts[pick(rng)];
      if (seen.insert(counts).second) shapes.push_back(counts);
    }
    std::vector<double> w(static_cast<std::size_t>(m));
    double total = 0.0;
    for (double& x : w) total += (x = unif(rng));
    std::vector<infbranch::OffspringEvent> events;
    double used = 0.0;
    for (int e = 0; e < m; ++e) {
      const double p = e + 1 < m ? w[static_cast<std::size_t>(e)] / total : 1.0 - used;
      used += p;
      events.emplace_back(shapes[static_cast<std::size_t>(e)], p);
    }
    laws.emplace(i, infbranch::ProgenyLaw(std::move(events)));
  }
  return infbranch::ModelSpec::explicit_finite("random-" + std::to_string(seed), std::move(laws));
}

double pgf(const Law& law, const std::vector<double>& s) {
  double v = 0.0;
  for (const auto& [counts, p] : law) {
    double term = p;
    for (std::size_t j = 0; j < counts.size(); ++j) term *= std::pow(s[j], counts[j]);
    v += term;
  }
  return v;
}

std::vector<double> pgf_all(const DenseModel& m, const std::vector<double>& s) {
  std::vector<double> out;
  for (const auto& law : m.laws) out.push_back(pgf(law, s));
  return out;
}

namespace {

// d P_i / d s_j
std::vector<std::vector<double>> jacobian(const DenseModel& m, const std::vector<double>& s) {
  const auto n = static_cast<std::size_t>(m.n);
  std::vector<std::vector<double>> jac(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& [counts, p] : m.laws[i])
      for (std::size_t j = 0; j < n; ++j) {
        if (counts[j] == 0) continue;
        double term = p * counts[j] * std::pow(s[j], counts[j] - 1);
        for (std::size_t l = 0; l < n; ++l)
          if (l != j) term *= std::pow(s[l], counts[l]);
        jac[i][j] += term;
      }
  return jac;
}

// Solves a x = b with partial pivoting; returns the smallest pivot magnitude.
double gauss_solve(std::vector<std::vector<double>> a, std::vector<double>& b) {
  const std::size_t n = b.size();
  double min_pivot = INFINITY;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    min_pivot = std::min(min_pivot, std::abs(a[c][c]));
    if (a[c][c] == 0.0) return 0.0;
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t c = n; c-- > 0;) {
    for (std::size_t k = c + 1; k < n; ++k) b[c] -= a[c][k] * b[k];
    b[c] /= a[c][c];
  }
  return min_pivot;
}

}  // namespace

std::optional<std::vector<double>> newton_fixed_point(const DenseModel& m) {
  const auto n = static_cast<std::size_t>(m.n);
  std::vector<double> s(n, 0.0);
  double pivot = 0.0;
  for (int it = 0; it < 200; ++it) {
    const auto p = pgf_all(m, s);
    auto jac = jacobian(m, s);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) jac[i][j] = (i == j ? 1.0 : 0.0) - jac[i][j];
    }
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = p[i] - s[i];
    pivot = gauss_solve(jac, rhs);
    if (!(pivot > 0.0)) return std::nullopt;
    double step = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::min(1.0, s[i] + rhs[i]);
      step = std::max(step, std::abs(rhs[i]));
    }
    if (step < 1e-16) break;
  }
  const auto p = pgf_all(m, s);
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(p[i] - s[i]) > 1e-14) return std::nullopt;
  if (pivot < 1e-3) return std::nullopt;
  return s;
}

double cubic_root() {
  return bisect([](double s) { return 19.0 / 30.0 * s * s * s + 11.0 / 30.0 - s; }, 0.0, 0.9);
}

double dense_spectral_radius(const std::vector<std::vector<double>>& a) {
  const auto n = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      m(i, j) = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

std::vector<std::vector<double>> dense_mean_matrix(const infbranch::ModelSpec& model, int k) {
  const auto n = static_cast<std::size_t>(k);
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (int i = 1; i <= k; ++i)
    for (const auto& e : model.law(i).events())
      for (const auto& [t, c] : e.counts)
        if (t <= k) m[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(t - 1)] += e.probability * c;
  return m;
}

double dense_expected_population(const std::vector<std::vector<double>>& m,
                                 const std::vector<double>& alpha, int n) {
  const std::size_t k = m.size();
  std::vector<double> row(k, 0.0);
  for (std::size_t i = 0; i < std::min(k, alpha.size()); ++i) row[i] = alpha[i];
  for (int step = 0; step < n; ++step) {
    std::vector<double> next(k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) next[j] += row[i] * m[i][j];
    row = next;
  }
  double total = 0.0;
  for (double v : row) total += v;
  return total;
}

double tridiagonal_nu(double a, double b, double c) { return b + 2.0 * std::sqrt(a * c); }

std::string models_dir() { return INFBRANCH_MODELS_DIR; }

}  // namespace oracle
