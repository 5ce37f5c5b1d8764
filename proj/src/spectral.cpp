#include "infbranch/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "infbranch/errors.hpp"
#include "infbranch/graph.hpp"
#include "infbranch/kernels.hpp"

namespace infbranch {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kRadiusSlack = 1e-10;
constexpr double kClassLimitTol = 1e-9;
constexpr TypeIndex kClassLimitCap = 8192;

std::string bracket_text(double lo, double hi) {
  std::ostringstream os;
  os.precision(17);
  os << "[" << lo << ", " << hi << "]";
  return os.str();
}

// Diagonal similarity D A D^{-1} with d_i = 2^exponent[i], chosen so that the
// off-diagonal row and column sums of every index are close (Osborne).
struct Balanced {
  BandMatrix matrix;
  std::vector<int> exponent;
};

Balanced balance(const BandMatrix& a) {
  Balanced out{a, std::vector<int>(a.size(), 0)};
  BandMatrix& b = out.matrix;
  const long n = static_cast<long>(b.size());
  const int lo = b.lower(), up = b.upper();
  // Seed: symmetrize the first off-diagonals in magnitude. For long graded chains
  // this does in one pass what Osborne sweeps would need O(n^2) passes for.
  if (lo > 0 && up > 0) {
    for (long i = 1; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const double below = b.at(ui, ui - 1), above = b.at(ui - 1, ui);
      int e = out.exponent[ui - 1];
      if (below > 0.0 && above > 0.0) e += static_cast<int>(std::lround(0.5 * std::log2(above / below)));
      out.exponent[ui] = e;
    }
    for (long i = 0; i < n; ++i)
      for (int d = -lo; d <= up; ++d) {
        const long j = i + d;
        if (d == 0 || j < 0 || j >= n) continue;
        const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
        b.set(ui, uj, std::ldexp(b.at(ui, uj), out.exponent[ui] - out.exponent[uj]));
      }
  }
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool changed = false;
    for (long i = 0; i < n; ++i) {
      // Row i spans offsets [-lo, up]; column i spans rows i + d for d in [-up, lo].
      const auto ui = static_cast<std::size_t>(i);
      double r = 0.0, c = 0.0;
      for (int d = -lo; d <= up; ++d) {
        const long j = i + d;
        if (d != 0 && j >= 0 && j < n) r += b.at(ui, static_cast<std::size_t>(j));
      }
      for (int d = -up; d <= lo; ++d) {
        const long j = i + d;
        if (d != 0 && j >= 0 && j < n) c += b.at(static_cast<std::size_t>(j), ui);
      }
      if (r == 0.0 || c == 0.0) continue;
      const int e = static_cast<int>(std::lround(0.5 * std::log2(c / r)));
      if (e == 0) continue;
      const double f = std::ldexp(1.0, e);
      if (c / f + r * f >= 0.95 * (c + r)) continue;
      for (int d = -lo; d <= up; ++d) {
        const long j = i + d;
        if (d != 0 && j >= 0 && j < n) b.set(ui, static_cast<std::size_t>(j), b.at(ui, static_cast<std::size_t>(j)) * f);
      }
      for (int d = -up; d <= lo; ++d) {
        const long j = i + d;
        if (d != 0 && j >= 0 && j < n) b.set(static_cast<std::size_t>(j), ui, b.at(static_cast<std::size_t>(j), ui) / f);
      }
      out.exponent[static_cast<std::size_t>(i)] += e;
      changed = true;
    }
    if (!changed) break;
  }
  return out;
}

// LU factorization without pivoting of sigma I - A in row-band storage.
// Valid for sigma > rho(A) where the matrix is a nonsingular M-matrix.
class ShiftedBandLU {
 public:
  explicit ShiftedBandLU(const BandMatrix& a) : a_(a), n_(a.size()), lo_(a.lower()), up_(a.upper()) {
    w_ = static_cast<std::size_t>(lo_ + up_ + 1);
    lu_.resize(n_ * w_);
  }

  // Returns false when a pivot is not positive (sigma too close to rho).
  bool factor(double sigma) {
    std::fill(lu_.begin(), lu_.end(), 0.0);
    const long n = static_cast<long>(n_);
    for (long i = 0; i < n; ++i)
      for (int d = -lo_; d <= up_; ++d) {
        const long j = i + d;
        if (j < 0 || j >= n) continue;
        const double v = a_.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        at(i, j) = (i == j ? sigma : 0.0) - v;
      }
    for (long p = 0; p < n; ++p) {
      const double pivot = at(p, p);
      if (!(pivot > 0.0)) return false;
      const long rmax = std::min(n - 1, p + lo_);
      const long cmax = std::min(n - 1, p + up_);
      for (long r = p + 1; r <= rmax; ++r) {
        const double f = at(r, p) / pivot;
        if (f == 0.0) continue;
        at(r, p) = f;
        for (long c = p + 1; c <= cmax; ++c) at(r, c) -= f * at(p, c);
      }
    }
    return true;
  }

  void solve(std::span<const double> rhs, std::span<double> x) const {
    const long n = static_cast<long>(n_);
    std::copy(rhs.begin(), rhs.end(), x.begin());
    for (long r = 0; r < n; ++r)
      for (long p = std::max(0L, r - lo_); p < r; ++p) x[static_cast<std::size_t>(r)] -= cat(r, p) * x[static_cast<std::size_t>(p)];
    for (long p = n - 1; p >= 0; --p) {
      double s = x[static_cast<std::size_t>(p)];
      for (long c = p + 1; c <= std::min(n - 1, p + up_); ++c) s -= cat(p, c) * x[static_cast<std::size_t>(c)];
      x[static_cast<std::size_t>(p)] = s / cat(p, p);
    }
  }

 private:
  double& at(long i, long j) { return lu_[static_cast<std::size_t>(i) * w_ + static_cast<std::size_t>(j - i + lo_)]; }
  double cat(long i, long j) const { return lu_[static_cast<std::size_t>(i) * w_ + static_cast<std::size_t>(j - i + lo_)]; }

  const BandMatrix& a_;
  std::size_t n_;
  int lo_, up_;
  std::size_t w_;
  std::vector<double> lu_;
};

Digraph graph_of(const BandMatrix& a) {
  const long n = static_cast<long>(a.size());
  Digraph g(a.size());
  for (long i = 0; i < n; ++i)
    for (int d = -a.lower(); d <= a.upper(); ++d) {
      const long j = i + d;
      if (d == 0 || j < 0 || j >= n) continue;
      if (a.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) > 0.0)
        g[static_cast<std::size_t>(i)].push_back(static_cast<std::size_t>(j));
    }
  return g;
}

}  // namespace

PerronResult perron_root(const BandMatrix& a, std::span<const double> start,
                         const PerronOptions& opt) {
  const std::size_t n = a.size();
  PerronResult res;
  if (n == 0) return res;
  if (n == 1) {
    res.value = res.lower = res.upper = a.at(0, 0);
    res.vector = {1.0};
    return res;
  }
  if (!a.nonnegative()) throw DomainError("perron_root: matrix has negative entries");

  const Balanced bal = balance(a);
  const BandMatrix& b = bal.matrix;
  const auto& kern = kernels::active();

  std::vector<double> v(n, 1.0), w(n), y(n);
  if (start.size() == n) {
    for (std::size_t i = 0; i < n; ++i) {
      const double s = std::ldexp(start[i], bal.exponent[i]);
      v[i] = std::isfinite(s) && s > 0.0 ? s : (i > 0 ? v[i - 1] : 1.0);
    }
    const double m = *std::max_element(v.begin(), v.end());
    for (double& x : v) x /= m;
  }

  ShiftedBandLU lu(b);
  b.multiply(v, w);
  double best_width = std::numeric_limits<double>::infinity();
  long since_improved = 0;

  for (long it = 1; it <= opt.max_iters; ++it) {
    const kernels::RatioBounds rb = kern.ratio_bounds(w.data(), v.data(), n);
    res.lower = std::max(rb.lo, 0.0);
    res.upper = rb.hi;
    res.iterations = it;
    const double width = res.upper - res.lower;
    if (width <= opt.rel_tol * res.upper || res.upper == 0.0) break;
    if (width < best_width * (1.0 - 1e-3)) {
      best_width = width;
      since_improved = 0;
    } else if (++since_improved > 50 && width <= opt.accept_tol * res.upper) {
      break;
    }

    double gap = std::max(width, 8.0 * kEps * res.upper);
    bool ok = false;
    for (int attempt = 0; attempt < 64 && !ok; ++attempt, gap *= 2.0) {
      if (!lu.factor(res.upper + gap)) continue;
      lu.solve(v, y);
      ok = std::all_of(y.begin(), y.end(), [](double t) { return std::isfinite(t) && t > 0.0; });
    }
    if (!ok) {
      // Plain power step on A + I, always positive for an irreducible A.
      for (std::size_t i = 0; i < n; ++i) y[i] = w[i] + v[i];
    }
    const double m = *std::max_element(y.begin(), y.end());
    for (std::size_t i = 0; i < n; ++i) v[i] = y[i] / m;
    b.multiply(v, w);
    if (it == opt.max_iters)
      throw ConvergenceError("Perron root did not converge after " + std::to_string(it) +
                             " iterations; bracket " + bracket_text(res.lower, res.upper));
  }
  res.value = 0.5 * (res.lower + res.upper);
  // Undo the balancing with the largest entry scaled to about 1; strongly graded
  // vectors may underflow to zero at their small end.
  int top = std::numeric_limits<int>::min();
  for (std::size_t i = 0; i < n; ++i) top = std::max(top, std::ilogb(v[i]) - bal.exponent[i]);
  res.vector.resize(n);
  for (std::size_t i = 0; i < n; ++i) res.vector[i] = std::ldexp(v[i], -bal.exponent[i] - top);
  return res;
}

double spectral_radius(const BandMatrix& a) {
  if (!a.nonnegative()) throw DomainError("spectral_radius: matrix has negative entries");
  const std::size_t n = a.size();
  if (n == 0) return 0.0;
  const Digraph g = graph_of(a);
  const SccResult scc = strongly_connected_components(g);
  std::vector<std::vector<std::size_t>> members(scc.count);
  for (std::size_t v = 0; v < n; ++v) members[scc.component[v]].push_back(v);
  double rho = 0.0;
  for (const auto& m : members) {
    if (m.size() == 1) {
      rho = std::max(rho, a.at(m[0], m[0]));
    } else {
      rho = std::max(rho, perron_root(a.principal_submatrix(m)).value);
    }
  }
  return rho;
}

double spectral_radius(const DenseMatrix& a) { return spectral_radius(BandMatrix::from_dense(a)); }

SpectralReport convergence_norm(const ModelSpec& model, TypeIndex K) {
  if (K < 1) throw DomainError("K must be >= 1");
  K = model.clamp(K);
  const BandMatrix m = mean_matrix_truncation(model, K);
  SpectralReport rep;
  rep.K = K;
  rep.radii.reserve(static_cast<std::size_t>(K));
  for (TypeIndex k = 1; k <= K; ++k) {
    const double r = spectral_radius(m.leading_block(static_cast<std::size_t>(k)));
    if (!rep.radii.empty() && r < rep.radii.back() - kRadiusSlack)
      throw InvariantViolation("truncation spectral radii decrease at k=" + std::to_string(k) +
                               ": " + bracket_text(rep.radii.back(), r));
    rep.radii.push_back(r);
  }
  rep.estimate = rep.radii.back();
  const SccResult scc = strongly_connected_components(graph_of(m));
  rep.irreducible = scc.count == 1 && model.tail_irreducible();
  return rep;
}

std::size_t ClassDecomposition::class_of(TypeIndex t) const {
  for (std::size_t c = 0; c < classes.size(); ++c)
    if (std::binary_search(classes[c].members.begin(), classes[c].members.end(), t)) return c;
  throw DomainError("type " + std::to_string(t) + " not in the decomposition");
}

namespace {

// Truncation limit of the Perron roots of the infinite class whose members
// inside the window are `inside` (1-based, sorted) and which contains every
// type above `window`.
std::pair<double, bool> infinite_class_norm(const ModelSpec& model,
                                            const std::vector<TypeIndex>& inside,
                                            TypeIndex window) {
  TypeIndex built = std::max<TypeIndex>(2 * window, 64);
  BandMatrix big = mean_matrix_truncation(model, built);
  std::vector<std::size_t> idx;
  for (TypeIndex t : inside) idx.push_back(static_cast<std::size_t>(t - 1));

  std::vector<double> warm;
  double prev = -1.0;
  for (TypeIndex n = window; n <= kClassLimitCap; ++n) {
    if (n > built) {
      built = std::min<TypeIndex>(2 * built, kClassLimitCap);
      big = mean_matrix_truncation(model, built);
    }
    if (n > window) idx.push_back(static_cast<std::size_t>(n - 1));
    const BandMatrix block = big.principal_submatrix(idx);
    if (!warm.empty()) warm.push_back(warm.back());
    const PerronResult pr = perron_root(block, warm);
    warm = pr.vector;
    if (prev >= 0.0 && std::abs(pr.value - prev) < kClassLimitTol) return {pr.value, false};
    prev = pr.value;
  }
  return {prev, true};
}

}  // namespace

ClassDecomposition class_decomposition(const ModelSpec& model, TypeIndex K) {
  if (K < 1) throw DomainError("K must be >= 1");
  K = model.clamp(K);
  const bool finite = model.support().has_value();
  const TypeIndex window =
      finite ? *model.support()
             : std::max(K, model.tail_start() - 1) + model.band_up() + model.band_down() + 1;
  const BandMatrix m = mean_matrix_truncation(model, window);

  Digraph g = graph_of(m);
  const std::size_t virt = static_cast<std::size_t>(window);
  if (!finite) {
    g.emplace_back();
    // Edges leaving the window.
    for (TypeIndex i = std::max<TypeIndex>(1, window - model.band_up() + 1); i <= window; ++i) {
      bool leaves = false;
      for (const auto& e : model.law(i).events())
        for (const auto& [type, count] : e.counts)
          if (type > window && e.probability > 0.0) leaves = true;
      if (leaves) g[static_cast<std::size_t>(i - 1)].push_back(virt);
    }
    // Edges re-entering the window from the tail.
    if (model.tail_irreducible()) {
      for (TypeIndex t = window + 1; t <= window + model.band_down(); ++t)
        for (const auto& e : model.law(t).events())
          for (const auto& [type, count] : e.counts)
            if (type <= window && e.probability > 0.0)
              g[virt].push_back(static_cast<std::size_t>(type - 1));
    }
  }

  const SccResult scc = strongly_connected_components(g);
  const auto reach = condensation_reachability(g, scc);
  std::vector<std::vector<TypeIndex>> members(scc.count);
  for (std::size_t v = 0; v < virt; ++v) members[scc.component[v]].push_back(static_cast<TypeIndex>(v + 1));

  std::vector<double> norm(scc.count, 0.0);
  std::vector<bool> infinite(scc.count, false), provisional(scc.count, false);
  for (std::size_t c = 0; c < scc.count; ++c) {
    const bool has_virtual = !finite && scc.component[virt] == c;
    if (has_virtual) {
      infinite[c] = true;
      if (model.tail_irreducible()) {
        const auto [value, capped] = infinite_class_norm(model, members[c], window);
        norm[c] = value;
        provisional[c] = capped;
      } else if (members[c].empty()) {
        norm[c] = model.tail_singleton_norm().value_or(0.0);
      } else {
        throw InvariantViolation("reducible tail rule produced a cycle through the tail");
      }
    } else if (members[c].size() == 1) {
      const auto i = static_cast<std::size_t>(members[c][0] - 1);
      norm[c] = m.at(i, i);
    } else {
      std::vector<std::size_t> idx;
      for (TypeIndex t : members[c]) idx.push_back(static_cast<std::size_t>(t - 1));
      norm[c] = perron_root(m.principal_submatrix(idx)).value;
    }
  }

  ClassDecomposition out;
  out.K = K;
  if (!finite && !model.tail_irreducible()) out.tail_norm = model.tail_singleton_norm().value_or(0.0);

  std::vector<std::size_t> report_id(scc.count, static_cast<std::size_t>(-1));
  std::vector<std::size_t> order;  // scc ids of reported classes, by smallest member
  for (TypeIndex t = 1; t <= K; ++t) {
    const std::size_t c = scc.component[static_cast<std::size_t>(t - 1)];
    if (report_id[c] == static_cast<std::size_t>(-1)) {
      report_id[c] = out.classes.size();
      order.push_back(c);
      out.classes.push_back({{}, norm[c], infinite[c], provisional[c]});
    }
    out.classes[report_id[c]].members.push_back(t);
  }
  for (std::size_t a = 0; a < order.size(); ++a)
    for (std::size_t b = 0; b < order.size(); ++b)
      if (a != b && reach[order[a]][order[b]]) out.reach.emplace_back(a, b);

  out.classification.resize(static_cast<std::size_t>(K));
  out.provisional.resize(static_cast<std::size_t>(K));
  for (TypeIndex t = 1; t <= K; ++t) {
    const std::size_t c = scc.component[static_cast<std::size_t>(t - 1)];
    bool survive = false, prov = false;
    for (std::size_t d = 0; d < scc.count; ++d) {
      if (!reach[c][d]) continue;
      survive = survive || norm[d] > 1.0;
      prov = prov || provisional[d];
    }
    out.classification[static_cast<std::size_t>(t - 1)] =
        survive ? TypeClassification::partial_survival_possible
                : TypeClassification::partial_extinction_certain;
    out.provisional[static_cast<std::size_t>(t - 1)] = prov;
  }
  return out;
}

CandidateMeasure CandidateMeasure::from_closed_form(const InvariantMeasure& m, int range) {
  return {m.values(range), m};
}

ExtinctionCertificate certify_global_extinction(const ModelSpec& model, double lambda,
                                                const CandidateMeasure& x,
                                                bool dichotomy_asserted) {
  if (!(lambda <= 1.0)) throw DomainError("certificate needs lambda <= 1");
  if (x.values.empty()) throw DomainError("certificate needs a nonempty measure");
  for (double v : x.values)
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("certificate measure must be strictly positive");

  ExtinctionCertificate cert;
  cert.lambda = lambda;
  cert.x = x;

  const auto range = static_cast<TypeIndex>(x.values.size());
  const auto support = model.support();
  const TypeIndex r = support ? std::min(range, *support) : range;
  if (support && range < *support) throw DomainError("certificate measure must cover every type of a finite model");

  const BandMatrix m = mean_matrix_truncation(model, r);
  std::vector<double> xm(static_cast<std::size_t>(r));
  const std::span<const double> xs(x.values.data(), static_cast<std::size_t>(r));
  m.left_multiply(xs, xm);
  // Column j of x M only sees rows <= r when j <= r - band_down.
  cert.checked = support ? r : std::max<TypeIndex>(0, r - model.band_down());
  cert.inequality_holds = true;
  for (TypeIndex j = 1; j <= cert.checked; ++j) {
    const auto u = static_cast<std::size_t>(j - 1);
    const double excess = xm[u] - lambda * xs[u];
    cert.max_excess = std::max(cert.max_excess, excess / xs[u]);
    if (excess > 1e-10 * xs[u] && cert.inequality_holds) {
      cert.inequality_holds = false;
      cert.offending = j;
    }
  }

  std::string tail_problem;
  if (!support) {
    const auto params = model.tridiagonal_params();
    if (!x.closed_form) {
      tail_problem = "no analytic tail bound supplied";
    } else if (!params) {
      tail_problem = "analytic tail bounds are only available for the tridiagonal family";
    } else {
      const InvariantMeasure& cf = *x.closed_form;
      const auto same = [](double p, double q) { return std::abs(p - q) <= 1e-15 * std::max(1.0, std::abs(q)); };
      if (!cf.summable) {
        tail_problem = "closed-form measure is not summable";
      } else if (!same(cf.params.a, params->a) || !same(cf.params.b, params->b) ||
                 !same(cf.params.c, params->c)) {
        tail_problem = "closed-form measure belongs to different parameters";
      } else if (std::abs(cf.lambda - lambda) > 1e-12 * std::max(1.0, lambda)) {
        tail_problem = "closed-form measure has a different lambda";
      } else if (model.tail_start() > range - 1 || range < 3) {
        tail_problem = "overrides extend past the checked range";
      } else {
        for (TypeIndex j = range - 1; j <= range; ++j) {
          const double v = x.values[static_cast<std::size_t>(j - 1)];
          if (std::abs(v - cf.x(j)) > 1e-12 * cf.x(j)) tail_problem = "values do not join the closed-form tail";
        }
      }
    }
  }

  cert.verified = cert.inequality_holds && tail_problem.empty();
  if (!cert.inequality_holds) {
    cert.conclusion = "not verified: x M <= lambda x fails at type " + std::to_string(*cert.offending);
  } else if (!tail_problem.empty()) {
    cert.conclusion = "not verified: " + tail_problem;
  } else if (dichotomy_asserted) {
    cert.conclusion = "q = 1";
  } else {
    cert.conclusion = "inequality holds; dichotomy not asserted - no conclusion";
  }
  return cert;
}

}  // namespace infbranch
