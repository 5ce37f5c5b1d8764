#include "infbranch/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "infbranch/errors.hpp"
#include "infbranch/kernels.hpp"
#include "infbranch/model_io.hpp"
#include "infbranch/report.hpp"
#include "infbranch/simulate.hpp"
#include "infbranch/solver.hpp"
#include "infbranch/spectral.hpp"
#include "infbranch/tridiagonal.hpp"

namespace infbranch {

namespace {

namespace fs = std::filesystem;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Common {
  std::string model_file;
  std::string out_dir = ".";
};

struct ExtinctOptions {
  std::string mode = "both";
  int k_max = 50;
  int k_min = 1;
  int k_stride = 1;
  double inner_tol = 1e-12;
  double outer_tol = 1e-9;
  long inner_max_iters = 1'000'000;
  int probe = 10;
};

struct MeasureOptions {
  std::string lambda = "nu";
  std::optional<int> k_cut;
};

struct ExpectOptions {
  std::string alpha_file;
  std::string alpha_eigen;
  std::optional<int> k_cut;
  int n = 10;
  int K = 400;
};

struct SimulateOptions {
  std::uint64_t seed = 1;
  int generations = 50;
  int replicas = 1;
  std::uint64_t cap = 10'000'000;
  std::string initial = "1";
  unsigned threads = 0;
};

class Output {
 public:
  Output(const Common& c, std::string command, const std::vector<std::string>& args,
         const std::string& model_name)
      : dir_(c.out_dir), command_(command), env_(std::move(command), args, model_name) {
    fs::create_directories(dir_);
  }

  Envelope& envelope() { return env_; }

  void table(const std::string& name, const CsvTable& t) {
    const fs::path file = dir_ / (command_ + "_" + name + ".csv");
    write_csv_file(file, t);
    env_.add_series(name, t);
    files_.push_back(file.string());
  }

  void finish(std::ostream& out) {
    const fs::path file = dir_ / (command_ + ".json");
    env_.results()["files"] = files_;
    env_.write_file(file);
    for (const auto& w : env_.document()["warnings"]) out << "warning: " << w.get<std::string>() << "\n";
    out << "wrote " << file.string() << "\n";
  }

 private:
  fs::path dir_;
  std::string command_;
  Envelope env_;
  std::vector<std::string> files_;
};

double parse_lambda(const std::string& text, const ModelSpec& model) {
  if (text == "nu") {
    const auto p = model.tridiagonal_params();
    if (!p) throw ModelError("lambda 'nu' needs a tridiagonal model");
    return nu(TridiagonalParams::from_rule(*p));
  }
  return parse_rational(text);
}

TridiagonalParams require_tridiagonal(const ModelSpec& model, const char* command) {
  const auto p = model.tridiagonal_params();
  if (!p) throw ModelError(std::string(command) + " needs a model with a tridiagonal tail rule");
  return TridiagonalParams::from_rule(*p);
}

int cmd_extinct(const Common& c, const ExtinctOptions& o, const std::vector<std::string>& args,
                std::ostream& out) {
  const ModelSpec model = load_model(c.model_file);
  SolveSettings s;
  s.k_max = o.k_max;
  s.k_min = o.k_min;
  s.k_stride = o.k_stride;
  s.inner_tol = o.inner_tol;
  s.outer_tol = o.outer_tol;
  s.inner_max_iters = o.inner_max_iters;
  s.validate();
  const bool do_global = o.mode != "partial";
  const bool do_partial = o.mode != "global";

  Output files(c, "extinct", args, model.name());
  auto& env = files.envelope();
  env.settings() = {{"mode", o.mode},         {"k_max", o.k_max},
                    {"k_min", o.k_min},       {"k_stride", o.k_stride},
                    {"inner_tol", o.inner_tol}, {"outer_tol", o.outer_tol},
                    {"inner_max_iters", o.inner_max_iters}, {"probe", o.probe},
                    {"isa", std::string(kernels::to_string(kernels::active().isa))}};

  std::optional<ExtinctionSeries> g, p;
  if (do_global) g = global_extinction(model, s);
  if (do_partial) p = partial_extinction(model, s);
  if (g && p) check_sandwich(*g, *p);

  struct Named {
    const char* prefix;
    const ExtinctionSeries* series;
  };
  std::vector<Named> modes;
  if (g) modes.push_back({"q", &*g});
  if (p) modes.push_back({"qt", &*p});

  const TypeIndex probes = std::max(1, o.probe);
  std::set<TypeIndex> ks;
  for (const auto& m : modes)
    for (const auto& r : m.series->runs) ks.insert(r.k);

  CsvTable series;
  series.header.push_back("k");
  for (const auto& m : modes)
    for (TypeIndex i = 1; i <= probes; ++i) series.header.push_back(m.prefix + std::to_string(i));
  for (TypeIndex k : ks) {
    std::vector<double> row{static_cast<double>(k)};
    for (const auto& m : modes) {
      const auto it = std::find_if(m.series->runs.begin(), m.series->runs.end(),
                                   [k](const ExtinctionRun& r) { return r.k == k; });
      for (TypeIndex i = 1; i <= probes; ++i)
        row.push_back(it == m.series->runs.end() ? kNaN : it->padded(i));
    }
    series.add_row(std::move(row));
  }
  files.table("series", series);

  CsvTable vec;
  vec.header.push_back("i");
  TypeIndex widest = 0;
  for (const auto& m : modes) {
    vec.header.push_back(m.prefix);
    widest = std::max(widest, m.series->runs.back().k);
  }
  for (TypeIndex i = 1; i <= widest; ++i) {
    std::vector<double> row{static_cast<double>(i)};
    for (const auto& m : modes) row.push_back(m.series->runs.back().padded(i));
    vec.add_row(std::move(row));
  }
  files.table("vector", vec);

  CsvTable levels;
  levels.header.push_back("k");
  for (const auto& m : modes) {
    const std::string pre = m.prefix;
    for (const char* f : {"_inner_iters", "_residual", "_error_estimate", "_converged"})
      levels.header.push_back(pre + f);
  }
  for (TypeIndex k : ks) {
    std::vector<double> row{static_cast<double>(k)};
    for (const auto& m : modes) {
      const auto it = std::find_if(m.series->runs.begin(), m.series->runs.end(),
                                   [k](const ExtinctionRun& r) { return r.k == k; });
      if (it == m.series->runs.end()) {
        row.insert(row.end(), {kNaN, kNaN, kNaN, kNaN});
      } else {
        row.insert(row.end(), {static_cast<double>(it->inner_iters), it->residual, it->error_estimate,
                               it->converged ? 1.0 : 0.0});
      }
    }
    levels.add_row(std::move(row));
  }
  files.table("levels", levels);

  std::vector<RateEstimate> rates;
  for (const auto& m : modes) {
    const auto values = coordinate_series(*m.series, 1);
    try {
      rates.push_back(estimate_rate(values));
    } catch (const DomainError&) {
      rates.push_back({{}, kNaN, kNaN});  // constant or too short
    }
  }
  CsvTable rate;
  rate.header.push_back("n");
  for (const auto& m : modes) rate.header.push_back(std::string(m.prefix) + "_ratio");
  std::size_t rows = 0;
  for (const auto& r : rates) rows = std::max(rows, r.ratios.size());
  for (std::size_t n = 0; n < rows; ++n) {
    std::vector<double> row{static_cast<double>(n + 1)};
    for (const auto& r : rates) row.push_back(n < r.ratios.size() ? r.ratios[n] : kNaN);
    rate.add_row(std::move(row));
  }
  files.table("rate", rate);

  bool converged = true;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const ExtinctionSeries& sr = *modes[m].series;
    const ExtinctionRun& last = sr.runs.back();
    auto& res = env.results()[modes[m].prefix];
    res = {{"final_k", last.k},
           {"outer_converged", sr.outer_converged},
           {"first_coordinate", last.vector.front()},
           {"rate_mu", rates[m].mu},
           {"residual", last.residual}};
    for (const auto& r : sr.runs)
      if (!r.converged)
        env.warn(std::string(modes[m].prefix) + ": inner iteration hit the limit at k=" +
                 std::to_string(r.k) + " (residual " + format_double(r.residual) + ")");
    if (!sr.outer_converged) {
      converged = false;
      env.warn(std::string(modes[m].prefix) + ": k_max reached before the probe coordinates settled");
    }
    out << modes[m].prefix << "1 at k=" << last.k << ": " << format_double(last.vector.front())
        << (sr.outer_converged ? "" : " (not converged)") << "\n";
  }
  files.finish(out);
  return converged ? kExitOk : kExitNoConvergence;
}

int cmd_norm(const Common& c, int K, const std::vector<std::string>& args, std::ostream& out) {
  const ModelSpec model = load_model(c.model_file);
  Output files(c, "norm", args, model.name());
  auto& env = files.envelope();
  env.settings() = {{"K", K}};
  const SpectralReport rep = convergence_norm(model, K);
  CsvTable radii{{"k", "radius"}, {}};
  for (std::size_t k = 0; k < rep.radii.size(); ++k)
    radii.add_row({static_cast<double>(k + 1), rep.radii[k]});
  files.table("radii", radii);
  env.results() = {{"K", rep.K}, {"estimate", rep.estimate}, {"irreducible", rep.irreducible}};
  out << "estimate at K=" << rep.K << ": " << format_double(rep.estimate)
      << (rep.irreducible ? " (irreducible)" : " (reducible)") << "\n";
  if (const auto p = model.tridiagonal_params()) {
    const double v = nu(TridiagonalParams::from_rule(*p));
    env.results()["nu_closed_form"] = v;
    out << "closed-form nu: " << format_double(v) << "\n";
  }
  files.finish(out);
  return kExitOk;
}

int cmd_classify(const Common& c, int K, const std::vector<std::string>& args, std::ostream& out) {
  const ModelSpec model = load_model(c.model_file);
  Output files(c, "classify", args, model.name());
  auto& env = files.envelope();
  env.settings() = {{"K", K}};
  const ClassDecomposition d = class_decomposition(model, K);

  CsvTable types{{"type", "class", "survival_possible", "provisional"}, {}};
  for (TypeIndex t = 1; t <= d.K; ++t) {
    const auto u = static_cast<std::size_t>(t - 1);
    types.add_row({static_cast<double>(t), static_cast<double>(d.class_of(t)),
                   d.classification[u] == TypeClassification::partial_survival_possible ? 1.0 : 0.0,
                   d.provisional[u] ? 1.0 : 0.0});
  }
  files.table("types", types);

  CsvTable classes{{"class", "first_type", "last_type", "size", "norm", "infinite", "provisional"}, {}};
  for (std::size_t i = 0; i < d.classes.size(); ++i) {
    const auto& cl = d.classes[i];
    classes.add_row({static_cast<double>(i), static_cast<double>(cl.members.front()),
                     static_cast<double>(cl.members.back()), static_cast<double>(cl.members.size()),
                     cl.norm, cl.infinite ? 1.0 : 0.0, cl.provisional ? 1.0 : 0.0});
  }
  files.table("classes", classes);

  CsvTable reach{{"from", "to"}, {}};
  for (const auto& [a, b] : d.reach) reach.add_row({static_cast<double>(a), static_cast<double>(b)});
  files.table("reach", reach);

  std::vector<int> survivors;
  for (TypeIndex t = 1; t <= d.K; ++t)
    if (d.classification[static_cast<std::size_t>(t - 1)] == TypeClassification::partial_survival_possible)
      survivors.push_back(t);
  env.results() = {{"K", d.K}, {"classes", d.classes.size()}, {"survival_possible", survivors}};
  if (d.tail_norm) env.results()["tail_norm"] = *d.tail_norm;
  if (std::find(d.provisional.begin(), d.provisional.end(), true) != d.provisional.end())
    env.warn("some class norms come from a capped truncation sequence");
  out << d.classes.size() << " classes among types 1.." << d.K << "; survival possible for "
      << survivors.size() << " types\n";
  files.finish(out);
  return kExitOk;
}

int cmd_measure(const Common& c, const MeasureOptions& o, const std::vector<std::string>& args,
                std::ostream& out) {
  const ModelSpec model = load_model(c.model_file);
  const TridiagonalParams p = require_tridiagonal(model, "measure");
  const double lambda = parse_lambda(o.lambda, model);
  Output files(c, "measure", args, model.name());
  auto& env = files.envelope();
  env.settings() = {{"lambda", lambda}};
  if (o.k_cut) env.settings()["k_cut"] = *o.k_cut;

  const InvariantMeasure m = invariant_measure(p, lambda);
  std::optional<InitialDistribution> alpha;
  if (m.summable) alpha = eigen_distribution(p, lambda, o.k_cut);
  const int count = alpha ? alpha->support() : o.k_cut.value_or(50);

  CsvTable values{{"k", "x", "alpha"}, {}};
  for (int k = 1; k <= count; ++k)
    values.add_row({static_cast<double>(k), m.x(k),
                    alpha ? alpha->weights[static_cast<std::size_t>(k - 1)] : kNaN});
  files.table("values", values);

  const double residual = verify_measure(p, m, std::max(count, 3));
  auto& res = env.results();
  res = {{"nu", nu(p)},
         {"lambda", m.lambda},
         {"kind", m.kind == MeasureKind::critical ? "critical" : "supercritical"},
         {"summable", m.summable},
         {"residual", residual}};
  if (m.kind == MeasureKind::critical) {
    res["ratio"] = m.ratio;
  } else {
    res["rho_plus"] = m.rho_plus;
    res["rho_minus"] = m.rho_minus;
  }
  if (m.summable) {
    res["total_mass"] = m.total_mass;
    res["tail_deficit"] = alpha->tail_deficit;
  }
  if (!model.overrides().empty())
    env.warn("model has overrides; the measure describes the homogeneous tail rule");
  out << (m.summable ? "summable" : "not summable") << ", residual " << format_double(residual) << "\n";

  if (lambda <= 1.0) {
    const int range = std::max({count, model.tail_start() + 1, 3});
    const ExtinctionCertificate cert = certify_global_extinction(
        model, lambda, CandidateMeasure::from_closed_form(m, range), model.dichotomy_asserted());
    res["certificate"] = {{"verified", cert.verified},
                          {"inequality_holds", cert.inequality_holds},
                          {"checked", cert.checked},
                          {"max_excess", cert.max_excess},
                          {"conclusion", cert.conclusion}};
    out << "certificate: " << cert.conclusion << "\n";
  }
  files.finish(out);
  return kExitOk;
}

int cmd_expect(const Common& c, const ExpectOptions& o, const std::vector<std::string>& args,
               std::ostream& out) {
  const ModelSpec model = load_model(c.model_file);
  if (!o.alpha_file.empty() && !o.alpha_eigen.empty())
    throw ModelError("give either --alpha or --alpha-eigen, not both");
  if (o.n < 0) throw ModelError("--n must be >= 0");
  Output files(c, "expect", args, model.name());
  auto& env = files.envelope();
  env.settings() = {{"n", o.n}, {"K", o.K}};

  InitialDistribution alpha = InitialDistribution::point_mass(1);
  if (!o.alpha_file.empty()) {
    alpha = load_initial_distribution(o.alpha_file);
    env.settings()["alpha"] = o.alpha_file;
  } else if (!o.alpha_eigen.empty()) {
    const double lambda = parse_lambda(o.alpha_eigen, model);
    alpha = eigen_distribution(require_tridiagonal(model, "expect --alpha-eigen"), lambda,
                               o.k_cut ? o.k_cut : std::optional<int>(std::min(o.K, 400)));
    env.settings()["alpha_eigen"] = lambda;
  }
  if (alpha.tail_deficit > 0.0)
    env.warn("initial distribution omits mass " + format_double(alpha.tail_deficit) +
             " beyond type " + std::to_string(alpha.support()));

  const auto series = expected_population_series(model, alpha, o.n, o.K);
  CsvTable t{{"n", "expected_population"}, {}};
  for (std::size_t n = 0; n < series.size(); ++n) t.add_row({static_cast<double>(n), series[n]});
  files.table("series", t);
  env.results() = {{"final", series.back()}, {"tail_deficit", alpha.tail_deficit}};
  out << "E|Z_" << o.n << "| >= " << format_double(series.back()) << "\n";
  files.finish(out);
  return kExitOk;
}

int cmd_simulate(const Common& c, const SimulateOptions& o, const std::vector<std::string>& args,
                 std::ostream& out) {
  const ModelSpec model = load_model(c.model_file);
  SimConfig cfg;
  cfg.generations = o.generations;
  cfg.population_cap = o.cap;
  cfg.seed = o.seed;
  cfg.replicas = o.replicas;
  cfg.threads = o.threads;
  int type = 0;
  const auto [ptr, ec] = std::from_chars(o.initial.data(), o.initial.data() + o.initial.size(), type);
  if (ec == std::errc() && ptr == o.initial.data() + o.initial.size())
    cfg.initial = type;
  else
    cfg.initial = load_initial_distribution(o.initial);
  cfg.validate();

  Output files(c, "simulate", args, model.name());
  auto& env = files.envelope();
  env.settings() = {{"seed", o.seed},   {"generations", o.generations}, {"replicas", o.replicas},
                    {"cap", o.cap},     {"initial", o.initial}};

  if (o.replicas == 1) {
    const SimulationPath path = simulate_path(model, cfg);
    CsvTable counts{{"generation", "type", "count"}, {}};
    CsvTable totals{{"generation", "total"}, {}};
    for (std::size_t n = 0; n < path.per_generation.size(); ++n) {
      for (const auto& [t, k] : path.per_generation[n])
        counts.add_row({static_cast<double>(n), static_cast<double>(t), static_cast<double>(k)});
      totals.add_row({static_cast<double>(n), static_cast<double>(path.totals[n])});
    }
    files.table("counts", counts);
    files.table("totals", totals);
    const char* outcome = path.outcome == PathOutcome::extinct  ? "extinct"
                          : path.outcome == PathOutcome::capped ? "capped"
                                                                : "survived";
    env.results() = {{"outcome", outcome}, {"final_total", path.totals.back()}};
    if (path.extinct_generation) env.results()["extinct_generation"] = *path.extinct_generation;
    out << "outcome: " << outcome << " after " << path.totals.size() - 1 << " generations\n";
  } else {
    const EnsembleResult e = simulate_ensemble(model, cfg);
    CsvTable t{{"generation", "extinct_fraction", "extinct_se", "mean_total", "total_se"}, {}};
    for (std::size_t n = 0; n < e.extinct_fraction.size(); ++n)
      t.add_row({static_cast<double>(n), e.extinct_fraction[n], e.extinct_se[n], e.mean_total[n],
                 e.total_se[n]});
    files.table("ensemble", t);
    env.results() = {{"replicas", e.replicas},
                     {"capped", e.capped},
                     {"extinct_fraction", e.extinct_fraction.back()},
                     {"extinct_se", e.extinct_se.back()}};
    if (e.capped > 0)
      env.warn(std::to_string(e.capped) + " replicas hit the population cap; mean totals are unknown from then on");
    out << "extinct fraction at generation " << o.generations << ": "
        << format_double(e.extinct_fraction.back()) << " +- " << format_double(e.extinct_se.back())
        << "\n";
  }
  files.finish(out);
  return kExitOk;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("model", c.model_file, "Model file (JSON)")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", c.out_dir, "Output directory")->capture_default_str();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Extinction analysis of branching processes with countably many types"};
  app.require_subcommand(1);
  std::string isa = "auto";
  app.add_option("--isa", isa, "Kernel instruction set: auto, scalar, avx2, neon")->capture_default_str();

  Common common;
  ExtinctOptions ext;
  auto* extinct = app.add_subcommand("extinct", "Global and partial extinction probabilities");
  add_common(extinct, common);
  extinct->add_option("--mode", ext.mode, "Which extinction probabilities to compute")->check(CLI::IsMember({"global", "partial", "both"}))->capture_default_str();
  extinct->add_option("--k-max", ext.k_max, "Largest truncation level")->capture_default_str();
  extinct->add_option("--k-min", ext.k_min, "Never stop before this truncation level")->capture_default_str();
  extinct->add_option("--k-stride", ext.k_stride, "Step between truncation levels")->capture_default_str();
  extinct->add_option("--inner-tol", ext.inner_tol, "Fixed-point tolerance at one level")->capture_default_str();
  extinct->add_option("--outer-tol", ext.outer_tol, "Stop when the probe coordinates move less than this")->capture_default_str();
  extinct->add_option("--inner-max-iters", ext.inner_max_iters, "Iteration limit at one level")->capture_default_str();
  extinct->add_option("--probe", ext.probe, "Leading coordinates written per level")->capture_default_str();

  int norm_K = 200;
  auto* norm = app.add_subcommand("norm", "Spectral radii of north-west truncations");
  add_common(norm, common);
  norm->add_option("--K", norm_K, "Largest truncation")->capture_default_str();

  int classify_K = 30;
  auto* classify = app.add_subcommand("classify", "Communication classes and partial-extinction classification");
  add_common(classify, common);
  classify->add_option("--K", classify_K, "Types to classify")->capture_default_str();

  MeasureOptions mopt;
  auto* measure = app.add_subcommand("measure", "Invariant measure of a tridiagonal model");
  add_common(measure, common);
  measure->add_option("--lambda", mopt.lambda, "Number, p/q, or nu")->capture_default_str();
  measure->add_option("--k-cut", mopt.k_cut, "Last type of the written measure");

  ExpectOptions eopt;
  auto* expect = app.add_subcommand("expect", "Expected population sizes");
  add_common(expect, common);
  expect->add_option("--alpha", eopt.alpha_file, "CSV with columns type,probability")->check(CLI::ExistingFile);
  expect->add_option("--alpha-eigen", eopt.alpha_eigen, "Start from the normalized invariant measure for lambda (or nu)");
  expect->add_option("--k-cut", eopt.k_cut, "Last type of the eigen initial distribution");
  expect->add_option("--n", eopt.n, "Last generation")->capture_default_str();
  expect->add_option("--K", eopt.K, "Truncation of the mean matrix")->capture_default_str();

  SimulateOptions sopt;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo sample paths");
  add_common(simulate, common);
  simulate->add_option("--seed", sopt.seed, "Random seed")->capture_default_str();
  simulate->add_option("--generations", sopt.generations, "Generations per path")->capture_default_str();
  simulate->add_option("--replicas", sopt.replicas, "Paths; more than one writes ensemble statistics")->capture_default_str();
  simulate->add_option("--cap", sopt.cap, "Population size that ends a path")->capture_default_str();
  simulate->add_option("--initial", sopt.initial, "Initial type, or CSV with columns type,probability")->capture_default_str();
  simulate->add_option("--threads", sopt.threads, "Worker threads, 0 for all cores")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  const std::vector<std::string> args(argv + 1, argv + argc);
  try {
    if (isa != "auto") kernels::set_active(kernels::parse_isa(isa));
    if (extinct->parsed()) return cmd_extinct(common, ext, args, out);
    if (norm->parsed()) return cmd_norm(common, norm_K, args, out);
    if (classify->parsed()) return cmd_classify(common, classify_K, args, out);
    if (measure->parsed()) return cmd_measure(common, mopt, args, out);
    if (expect->parsed()) return cmd_expect(common, eopt, args, out);
    if (simulate->parsed()) return cmd_simulate(common, sopt, args, out);
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNoConvergence;
  } catch (const InvariantViolation& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace infbranch
