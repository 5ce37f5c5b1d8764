#include "infbranch/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "infbranch/errors.hpp"
#include "infbranch/kernels.hpp"

namespace infbranch {

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void require_finite_nonneg(double v, const char* what) {
  if (!std::isfinite(v) || v < 0.0)
    throw ModelError(std::string(what) + " must be finite and nonnegative, got " + fmt_double(v));
}

// Law with children of a single type drawn from `slots`: with probability
// mean/degree the parent has `degree` children of that type.
ProgenyLaw single_type_law(std::initializer_list<std::pair<TypeIndex, double>> slots) {
  double total = 0.0;
  for (const auto& [type, m] : slots) total += m;
  const int degree = static_cast<int>(std::ceil(total)) + 1;
  std::vector<OffspringEvent> events;
  for (const auto& [type, m] : slots) {
    if (m == 0.0) continue;
    events.emplace_back(std::vector<std::pair<TypeIndex, int>>{{type, degree}}, m / degree);
  }
  events.emplace_back(std::vector<std::pair<TypeIndex, int>>{}, 1.0 - total / degree);
  return ProgenyLaw(std::move(events));
}

}  // namespace

OffspringEvent::OffspringEvent(std::vector<std::pair<TypeIndex, int>> c, double p)
    : probability(p) {
  std::sort(c.begin(), c.end());
  for (const auto& [type, count] : c) {
    if (type < 1) throw ModelError("offspring type must be >= 1, got " + std::to_string(type));
    if (count < 0) throw ModelError("offspring count must be >= 0");
    if (count == 0) continue;
    if (!counts.empty() && counts.back().first == type)
      throw ModelError("offspring type " + std::to_string(type) + " listed twice");
    counts.emplace_back(type, count);
  }
}

OffspringEvent::OffspringEvent(const std::map<TypeIndex, int>& c, double p)
    : OffspringEvent(std::vector<std::pair<TypeIndex, int>>(c.begin(), c.end()), p) {}

int OffspringEvent::total_children() const {
  int n = 0;
  for (const auto& [type, count] : counts) n += count;
  return n;
}

ProgenyLaw::ProgenyLaw(std::vector<OffspringEvent> events) : events_(std::move(events)) {
  if (events_.empty()) throw ModelError("progeny law has no events");
  double sum = 0.0;
  for (const auto& e : events_) {
    if (!std::isfinite(e.probability) || e.probability < 0.0 || e.probability > 1.0)
      throw ModelError("event probability outside [0,1]: " + fmt_double(e.probability));
    sum += e.probability;
  }
  if (std::abs(sum - 1.0) > kProbabilityTolerance)
    throw ModelError("event probabilities sum to " + fmt_double(sum) + ", expected 1");
  for (std::size_t i = 0; i < events_.size(); ++i)
    for (std::size_t j = i + 1; j < events_.size(); ++j)
      if (events_[i].counts == events_[j].counts)
        throw ModelError("two events share the same offspring counts");
}

std::pair<int, int> ProgenyLaw::offsets(TypeIndex parent) const {
  int up = 0, down = 0;
  for (const auto& e : events_)
    for (const auto& [type, count] : e.counts) {
      up = std::max(up, type - parent);
      down = std::max(down, parent - type);
    }
  return {up, down};
}

double ProgenyLaw::mean(TypeIndex j) const {
  double m = 0.0;
  for (const auto& e : events_)
    for (const auto& [type, count] : e.counts)
      if (type == j) m += e.probability * count;
  return m;
}

std::string family_name(const TailRule& rule) {
  struct V {
    std::string operator()(const TridiagonalRule&) const { return "tridiagonal"; }
    std::string operator()(const SuperDiagonalRule&) const { return "super_diagonal"; }
    std::string operator()(const ExplicitFinite&) const { return "explicit"; }
  };
  return std::visit(V{}, rule);
}

ProgenyLaw tridiagonal_law(const TridiagonalRule& r, TypeIndex i) {
  if (i < 1) throw DomainError("type index must be >= 1");
  if (i == 1) return single_type_law({{1, r.b}, {2, r.c}});
  return single_type_law({{i - 1, r.a}, {i, r.b}, {i + 1, r.c}});
}

ProgenyLaw super_diagonal_law(const SuperDiagonalRule& r, TypeIndex i) {
  if (i < 1) throw DomainError("type index must be >= 1");
  return single_type_law({{i, r.b}, {i + 1, r.c}});
}

ModelSpec::ModelSpec(std::string name, TailRule tail, std::map<TypeIndex, ProgenyLaw> overrides,
                     bool dichotomy_asserted, std::string notes)
    : name_(std::move(name)),
      tail_(std::move(tail)),
      overrides_(std::move(overrides)),
      dichotomy_asserted_(dichotomy_asserted),
      notes_(std::move(notes)) {
  for (const auto& [type, law] : overrides_)
    if (type < 1) throw ModelError("override type must be >= 1, got " + std::to_string(type));

  if (auto* t = std::get_if<TridiagonalRule>(&tail_)) {
    require_finite_nonneg(t->a, "tridiagonal a");
    require_finite_nonneg(t->b, "tridiagonal b");
    require_finite_nonneg(t->c, "tridiagonal c");
    if (t->a <= 0.0 || t->c <= 0.0) throw ModelError("tridiagonal a and c must be > 0");
    band_up_ = 1;
    band_down_ = 1;
  } else if (auto* s = std::get_if<SuperDiagonalRule>(&tail_)) {
    require_finite_nonneg(s->b, "super_diagonal b");
    require_finite_nonneg(s->c, "super_diagonal c");
    if (s->c <= 0.0) throw ModelError("super_diagonal c must be > 0");
    band_up_ = 1;
  } else {
    auto& ex = std::get<ExplicitFinite>(tail_);
    if (overrides_.empty()) throw ModelError("explicit model needs at least one type");
    const TypeIndex n = overrides_.rbegin()->first;
    if (ex.support != 0 && ex.support != n)
      throw ModelError("explicit model declares " + std::to_string(ex.support) +
                       " types but lists laws up to type " + std::to_string(n));
    if (static_cast<TypeIndex>(overrides_.size()) != n)
      throw ModelError("explicit model must give a law for every type 1.." + std::to_string(n));
    ex.support = n;
    for (const auto& [type, law] : overrides_)
      for (const auto& e : law.events())
        for (const auto& [child, count] : e.counts)
          if (child > n)
            throw ModelError("type " + std::to_string(type) + " has offspring of type " +
                             std::to_string(child) + " outside the model support 1.." +
                             std::to_string(n));
  }
  for (const auto& [type, law] : overrides_) {
    const auto [up, down] = law.offsets(type);
    band_up_ = std::max(band_up_, up);
    band_down_ = std::max(band_down_, down);
  }
}

ModelSpec ModelSpec::tridiagonal(std::string name, double a, double b, double c) {
  return ModelSpec(std::move(name), TridiagonalRule{a, b, c});
}

ModelSpec ModelSpec::super_diagonal(std::string name, double b, double c,
                                    std::map<TypeIndex, ProgenyLaw> overrides) {
  return ModelSpec(std::move(name), SuperDiagonalRule{b, c}, std::move(overrides));
}

ModelSpec ModelSpec::explicit_finite(std::string name, std::map<TypeIndex, ProgenyLaw> laws) {
  return ModelSpec(std::move(name), ExplicitFinite{}, std::move(laws));
}

ProgenyLaw ModelSpec::law(TypeIndex i) const {
  if (i < 1) throw DomainError("type index must be >= 1, got " + std::to_string(i));
  if (auto it = overrides_.find(i); it != overrides_.end()) return it->second;
  if (auto* t = std::get_if<TridiagonalRule>(&tail_)) return tridiagonal_law(*t, i);
  if (auto* s = std::get_if<SuperDiagonalRule>(&tail_)) return super_diagonal_law(*s, i);
  throw DomainError("type out of model support: " + std::to_string(i));
}

std::optional<TypeIndex> ModelSpec::support() const {
  if (auto* ex = std::get_if<ExplicitFinite>(&tail_)) return ex->support;
  return std::nullopt;
}

TypeIndex ModelSpec::clamp(TypeIndex k) const {
  if (auto n = support()) return std::min(k, *n);
  return k;
}

TypeIndex ModelSpec::tail_start() const {
  if (auto n = support()) return *n + 1;
  return overrides_.empty() ? 1 : overrides_.rbegin()->first + 1;
}

bool ModelSpec::tail_irreducible() const {
  return !std::holds_alternative<SuperDiagonalRule>(tail_);
}

std::optional<double> ModelSpec::tail_singleton_norm() const {
  if (auto* s = std::get_if<SuperDiagonalRule>(&tail_)) return s->b;
  return std::nullopt;
}

std::optional<TridiagonalRule> ModelSpec::tridiagonal_params() const {
  if (auto* t = std::get_if<TridiagonalRule>(&tail_)) return *t;
  return std::nullopt;
}

InitialDistribution InitialDistribution::point_mass(TypeIndex type) {
  if (type < 1) throw ModelError("initial type must be >= 1");
  InitialDistribution d;
  d.weights.assign(static_cast<std::size_t>(type), 0.0);
  d.weights.back() = 1.0;
  return d;
}

InitialDistribution InitialDistribution::from_map(const std::map<TypeIndex, double>& w) {
  InitialDistribution d;
  TypeIndex last = 0;
  for (const auto& [type, p] : w) {
    if (type < 1) throw ModelError("initial type must be >= 1");
    if (p != 0.0) last = type;
  }
  d.weights.assign(static_cast<std::size_t>(last), 0.0);
  for (const auto& [type, p] : w)
    if (type <= last) d.weights[static_cast<std::size_t>(type - 1)] = p;
  d.validate();
  return d;
}

double InitialDistribution::mass() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

void InitialDistribution::validate() const {
  for (double w : weights)
    if (!std::isfinite(w) || w < 0.0 || w > 1.0)
      throw ModelError("initial weight outside [0,1]: " + fmt_double(w));
  if (!(tail_deficit >= 0.0 && tail_deficit <= 1.0))
    throw ModelError("initial tail deficit outside [0,1]");
  const double total = mass() + tail_deficit;
  if (std::abs(total - 1.0) > kProbabilityTolerance)
    throw ModelError("initial distribution sums to " + fmt_double(total) + ", expected 1");
}

InitialDistribution InitialDistribution::renormalized() const {
  InitialDistribution d{weights, 0.0};
  const double m = mass();
  if (m <= 0.0) throw ModelError("cannot renormalize an empty distribution");
  for (double& w : d.weights) w /= m;
  return d;
}

double pgf_truncated(const ProgenyLaw& law, std::span<const double> s, double fill) {
  if (fill != 0.0 && fill != 1.0) throw DomainError("fill must be 0 or 1");
  for (double v : s)
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("pgf argument outside [0,1]");
  const auto k = static_cast<TypeIndex>(s.size());
  double total = 0.0;
  for (const auto& e : law.events()) {
    double term = e.probability;
    for (const auto& [type, count] : e.counts) {
      const double x = type <= k ? s[static_cast<std::size_t>(type - 1)] : fill;
      for (int m = 0; m < count; ++m) term *= x;
    }
    total += term;
  }
  return std::min(total, 1.0);
}

double pgf_truncated(const ModelSpec& model, TypeIndex i, std::span<const double> s,
                     double fill) {
  return pgf_truncated(model.law(i), s, fill);
}

BandMatrix mean_matrix_truncation(const ModelSpec& model, TypeIndex k) {
  if (k < 1) throw DomainError("truncation level must be >= 1");
  BandMatrix m(static_cast<std::size_t>(k), model.band_down(), model.band_up());
  for (TypeIndex i = 1; i <= k; ++i) {
    const ProgenyLaw law = model.law(i);
    for (const auto& e : law.events())
      for (const auto& [type, count] : e.counts) {
        if (type > k) continue;
        const auto r = static_cast<std::size_t>(i - 1);
        const auto c = static_cast<std::size_t>(type - 1);
        m.set(r, c, m.at(r, c) + e.probability * count);
      }
  }
  return m;
}

std::vector<double> expected_population_series(const ModelSpec& model,
                                               const InitialDistribution& alpha, int n_max,
                                               TypeIndex k) {
  if (n_max < 0) throw DomainError("generation count must be >= 0");
  if (k < 1) throw DomainError("truncation level must be >= 1");
  if (alpha.support() > k)
    throw ModelError("initial distribution support (" + std::to_string(alpha.support()) +
                     ") exceeds truncation level " + std::to_string(k));
  const BandMatrix m = mean_matrix_truncation(model, k);
  const auto& kern = kernels::active();
  const auto n = static_cast<std::size_t>(k);
  std::vector<double> v(n, 1.0), w(n);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_max) + 1);
  const std::size_t sup = alpha.weights.size();
  for (int g = 0; g <= n_max; ++g) {
    if (g > 0) {
      m.multiply(v, w);
      v.swap(w);
    }
    out.push_back(kern.dot(alpha.weights.data(), v.data(), sup));
  }
  return out;
}

double expected_population(const ModelSpec& model, const InitialDistribution& alpha, int n,
                           TypeIndex k) {
  return expected_population_series(model, alpha, n, k).back();
}

}  // namespace infbranch
