/// @file
/// @brief Experiment configuration (JSON), the (lambda x seed) grid runner with
/// CSV/SVG/JSON emission, the two benchmark presets and their band checks, and
/// the drivers behind the `certify`, `bias-sweep` and `apt` subcommands.
#pragma once

#include "sri/certify.hpp"
#include "sri/core.hpp"
#include "sri/dynamics.hpp"
#include "sri/geometry.hpp"
#include "sri/harness.hpp"
#include "sri/oracles.hpp"
#include "sri/problems.hpp"
#include "sri/report.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace sri {

using nlohmann::json;

/// Objective selection. `custom` problems name a family and its data.
struct ProblemConfig {
  std::string id = "f1";     ///< f1 | f2 | custom
  std::string kind;          ///< custom: quadratic | linear | sphere | l1
  std::vector<std::vector<double>> matrix;
  std::vector<double> vector;
  Eigen::Index dimension = 0;
};

struct MonitorConfig {
  std::vector<double> radii{1.0};
  std::vector<double> deltas{0.05};
  double bounded_threshold = 1e3;
};

struct AptConfig {
  double horizon = 1.0;
  std::vector<std::size_t> starts{100, 1000, 10000};
};

struct CertifyConfig {
  double radius = 5.0;
  std::size_t random_points = 1000;
  std::uint64_t seed = 7;
};

struct BiasSweepConfig {
  std::vector<double> lambdas{0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
  std::size_t samples = 200000;
  std::vector<double> point{1.0, 1.0};
};

struct ExperimentConfig {
  std::string name = "experiment";
  ProblemConfig problem;
  Algorithm algorithm = Algorithm::zo_sgd;
  OracleKind oracle = OracleKind::zeroth_order;
  double step_scale = 0.01;
  double step_exponent = 0.6;
  std::vector<double> lambdas{0.1};
  std::size_t iterations = 1000;
  std::vector<double> x0{1.0, 1.0};
  NoiseSpec noise{5.0, 1.0, 1.0};
  DirectionLaw direction_law = DirectionLaw::gaussian_isotropic;
  std::vector<std::uint64_t> seeds{1};
  std::optional<ConvexSet> set;
  BiasModel bias_model;
  BiasDirection bias_direction = BiasDirection::fixed_axis;
  bool decompose = false;
  MonitorConfig monitor;
  std::size_t max_stored_points = 2000;
  std::string out_dir = "out";
  std::size_t jobs = 1;
  AptConfig apt;
  CertifyConfig certify;
  BiasSweepConfig bias_sweep;

  void validate() const;
};

// ---------------------------------------------------------------------------
// JSON <-> config

namespace detail {

inline void reject_unknown(const json &j, std::initializer_list<const char *> allowed,
                           const std::string &where) {
  if (!j.is_object())
    throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char *k : allowed)
      ok = ok || it.key() == k;
    if (!ok)
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <typename T> struct unsigned_target : std::is_unsigned<T> {};
template <> struct unsigned_target<bool> : std::false_type {};
template <typename T> struct unsigned_target<std::vector<T>> : unsigned_target<T> {};

// nlohmann converts -5 to a huge unsigned value; refuse instead.
inline void require_counts(const json &v, const std::string &where) {
  if (v.is_array()) {
    for (const auto &e : v)
      require_counts(e, where);
    return;
  }
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                 v.get<long long>() < 0))
    throw ConfigError(where + ": expected a nonnegative integer");
}

template <typename T>
void read(const json &j, const char *key, T &out, const std::string &where) {
  if (!j.contains(key))
    return;
  if constexpr (unsigned_target<T>::value)
    require_counts(j.at(key), where + "." + key);
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception &e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

inline Point to_point(const std::vector<double> &v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> to_vector(const Point &p) {
  return {p.data(), p.data() + p.size()};
}

inline ConvexSet parse_set(const json &j) {
  std::string kind;
  read(j, "kind", kind, "set");
  if (kind == "box") {
    reject_unknown(j, {"kind", "lo", "hi"}, "set");
    std::vector<double> lo, hi;
    read(j, "lo", lo, "set");
    read(j, "hi", hi, "set");
    return ConvexSet::box(to_point(lo), to_point(hi));
  }
  if (kind == "ball") {
    reject_unknown(j, {"kind", "center", "radius"}, "set");
    std::vector<double> c;
    double r = 1.0;
    read(j, "center", c, "set");
    read(j, "radius", r, "set");
    return ConvexSet::ball(to_point(c), r);
  }
  if (kind == "simplex") {
    reject_unknown(j, {"kind", "dimension", "scale"}, "set");
    long d = 0;
    double s = 1.0;
    read(j, "dimension", d, "set");
    read(j, "scale", s, "set");
    return ConvexSet::simplex(d, s);
  }
  throw ConfigError("set.kind must be box, ball or simplex");
}

inline json set_to_json(const ConvexSet &S) {
  return std::visit(
      [](const auto &s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>)
          return {{"kind", "box"}, {"lo", to_vector(s.lo)}, {"hi", to_vector(s.hi)}};
        else if constexpr (std::is_same_v<T, Ball>)
          return {{"kind", "ball"}, {"center", to_vector(s.center)}, {"radius", s.radius}};
        else
          return {{"kind", "simplex"}, {"dimension", s.dimension}, {"scale", s.scale}};
      },
      S.variant());
}

template <typename E>
E parse_enum(const std::string &value, std::initializer_list<std::pair<const char *, E>> map,
             const std::string &where) {
  for (const auto &[k, v] : map)
    if (value == k)
      return v;
  std::string options;
  for (const auto &[k, v] : map)
    options += (options.empty() ? "" : ", ") + std::string(k);
  throw ConfigError(where + ": '" + value + "' is not one of " + options);
}

inline const char *algorithm_name(Algorithm a) {
  return a == Algorithm::zo_sgd ? "zo_sgd" : "projected_subgrad";
}

inline const char *oracle_name(OracleKind o) {
  switch (o) {
  case OracleKind::zeroth_order:
    return "zeroth_order";
  case OracleKind::exact_gradient:
    return "exact_gradient";
  case OracleKind::biased_subgradient:
    return "biased_subgradient";
  }
  return "?";
}

} // namespace detail

inline ExperimentConfig config_from_json(const json &j) {
  using namespace detail;
  reject_unknown(j,
                 {"name", "problem", "algorithm", "oracle", "schedule", "lambdas",
                  "iterations", "x0", "noise", "direction_law", "seeds", "set",
                  "bias_model", "bias_direction", "decompose", "monitor", "output",
                  "jobs", "apt", "certify", "bias_sweep"},
                 "config");
  ExperimentConfig c;
  read(j, "name", c.name, "config");

  if (j.contains("problem")) {
    const json &p = j.at("problem");
    if (p.is_string()) {
      c.problem.id = p.get<std::string>();
    } else {
      reject_unknown(p, {"id", "kind", "matrix", "vector", "dimension"}, "problem");
      read(p, "id", c.problem.id, "problem");
      read(p, "kind", c.problem.kind, "problem");
      read(p, "matrix", c.problem.matrix, "problem");
      read(p, "vector", c.problem.vector, "problem");
      long d = 0;
      read(p, "dimension", d, "problem");
      c.problem.dimension = d;
    }
  }

  std::string s;
  if (j.contains("algorithm")) {
    read(j, "algorithm", s, "config");
    c.algorithm = parse_enum<Algorithm>(
        s, {{"zo_sgd", Algorithm::zo_sgd}, {"projected_subgrad", Algorithm::projected_subgrad}},
        "algorithm");
  }
  if (j.contains("oracle")) {
    read(j, "oracle", s, "config");
    c.oracle = parse_enum<OracleKind>(s,
                                      {{"zeroth_order", OracleKind::zeroth_order},
                                       {"exact_gradient", OracleKind::exact_gradient},
                                       {"biased_subgradient", OracleKind::biased_subgradient}},
                                      "oracle");
  }
  if (j.contains("schedule")) {
    const json &sc = j.at("schedule");
    reject_unknown(sc, {"scale", "exponent"}, "schedule");
    read(sc, "scale", c.step_scale, "schedule");
    read(sc, "exponent", c.step_exponent, "schedule");
  }
  read(j, "lambdas", c.lambdas, "config");
  read(j, "iterations", c.iterations, "config");
  read(j, "x0", c.x0, "config");
  if (j.contains("noise")) {
    const json &n = j.at("noise");
    reject_unknown(n, {"mean_plus", "mean_minus", "sigma"}, "noise");
    read(n, "mean_plus", c.noise.mean_plus, "noise");
    read(n, "mean_minus", c.noise.mean_minus, "noise");
    read(n, "sigma", c.noise.sigma, "noise");
  }
  if (j.contains("direction_law")) {
    read(j, "direction_law", s, "config");
    c.direction_law = parse_enum<DirectionLaw>(
        s,
        {{"gaussian_isotropic", DirectionLaw::gaussian_isotropic},
         {"unit_sphere_scaled", DirectionLaw::unit_sphere_scaled}},
        "direction_law");
  }
  read(j, "seeds", c.seeds, "config");
  if (j.contains("set") && !j.at("set").is_null())
    c.set = parse_set(j.at("set"));
  if (j.contains("bias_model")) {
    const json &b = j.at("bias_model");
    reject_unknown(b, {"b1", "b2", "b3"}, "bias_model");
    read(b, "b1", c.bias_model.b1, "bias_model");
    read(b, "b2", c.bias_model.b2, "bias_model");
    read(b, "b3", c.bias_model.b3, "bias_model");
  }
  if (j.contains("bias_direction")) {
    read(j, "bias_direction", s, "config");
    c.bias_direction = parse_enum<BiasDirection>(
        s, {{"fixed_axis", BiasDirection::fixed_axis}, {"adversarial", BiasDirection::adversarial}},
        "bias_direction");
  }
  read(j, "decompose", c.decompose, "config");
  if (j.contains("monitor")) {
    const json &m = j.at("monitor");
    reject_unknown(m, {"radii", "deltas", "bounded_threshold"}, "monitor");
    read(m, "radii", c.monitor.radii, "monitor");
    read(m, "deltas", c.monitor.deltas, "monitor");
    read(m, "bounded_threshold", c.monitor.bounded_threshold, "monitor");
  }
  if (j.contains("output")) {
    const json &o = j.at("output");
    reject_unknown(o, {"dir", "max_points"}, "output");
    read(o, "dir", c.out_dir, "output");
    read(o, "max_points", c.max_stored_points, "output");
  }
  read(j, "jobs", c.jobs, "config");
  if (j.contains("apt")) {
    const json &a = j.at("apt");
    reject_unknown(a, {"horizon", "starts"}, "apt");
    read(a, "horizon", c.apt.horizon, "apt");
    read(a, "starts", c.apt.starts, "apt");
  }
  if (j.contains("certify")) {
    const json &a = j.at("certify");
    reject_unknown(a, {"radius", "random_points", "seed"}, "certify");
    read(a, "radius", c.certify.radius, "certify");
    read(a, "random_points", c.certify.random_points, "certify");
    read(a, "seed", c.certify.seed, "certify");
  }
  if (j.contains("bias_sweep")) {
    const json &a = j.at("bias_sweep");
    reject_unknown(a, {"lambdas", "samples", "point"}, "bias_sweep");
    read(a, "lambdas", c.bias_sweep.lambdas, "bias_sweep");
    read(a, "samples", c.bias_sweep.samples, "bias_sweep");
    read(a, "point", c.bias_sweep.point, "bias_sweep");
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot read config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

inline json config_to_json(const ExperimentConfig &c) {
  using namespace detail;
  json problem = {{"id", c.problem.id}};
  if (c.problem.id == "custom") {
    problem["kind"] = c.problem.kind;
    if (!c.problem.matrix.empty())
      problem["matrix"] = c.problem.matrix;
    if (!c.problem.vector.empty())
      problem["vector"] = c.problem.vector;
    if (c.problem.dimension > 0)
      problem["dimension"] = c.problem.dimension;
  }
  json j = {
      {"name", c.name},
      {"problem", problem},
      {"algorithm", algorithm_name(c.algorithm)},
      {"oracle", oracle_name(c.oracle)},
      {"schedule", {{"scale", c.step_scale}, {"exponent", c.step_exponent}}},
      {"lambdas", c.lambdas},
      {"iterations", c.iterations},
      {"x0", c.x0},
      {"noise",
       {{"mean_plus", c.noise.mean_plus},
        {"mean_minus", c.noise.mean_minus},
        {"sigma", c.noise.sigma}}},
      {"direction_law", to_string(c.direction_law)},
      {"seeds", c.seeds},
      {"bias_model", {{"b1", c.bias_model.b1}, {"b2", c.bias_model.b2}, {"b3", c.bias_model.b3}}},
      {"bias_direction",
       c.bias_direction == BiasDirection::fixed_axis ? "fixed_axis" : "adversarial"},
      {"decompose", c.decompose},
      {"monitor",
       {{"radii", c.monitor.radii},
        {"deltas", c.monitor.deltas},
        {"bounded_threshold", c.monitor.bounded_threshold}}},
      {"output", {{"dir", c.out_dir}, {"max_points", c.max_stored_points}}},
      {"jobs", c.jobs},
      {"apt", {{"horizon", c.apt.horizon}, {"starts", c.apt.starts}}},
      {"certify",
       {{"radius", c.certify.radius},
        {"random_points", c.certify.random_points},
        {"seed", c.certify.seed}}},
      {"bias_sweep",
       {{"lambdas", c.bias_sweep.lambdas},
        {"samples", c.bias_sweep.samples},
        {"point", c.bias_sweep.point}}},
  };
  if (c.set)
    j["set"] = set_to_json(*c.set);
  return j;
}

/// Builds the objective named by the config.
inline Problem make_problem(const ProblemConfig &pc) {
  using detail::to_point;
  if (pc.id == "f1")
    return problems::f1();
  if (pc.id == "f2")
    return problems::f2();
  if (pc.id != "custom")
    throw ConfigError("problem.id must be f1, f2 or custom");
  if (pc.kind == "quadratic") {
    const auto d = static_cast<Eigen::Index>(pc.matrix.size());
    if (d == 0)
      throw ConfigError("problem.matrix must be a nonempty square matrix");
    Eigen::MatrixXd A(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (static_cast<Eigen::Index>(pc.matrix[static_cast<std::size_t>(i)].size()) != d)
        throw ConfigError("problem.matrix must be square");
      for (Eigen::Index k = 0; k < d; ++k)
        A(i, k) = pc.matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
    Point b = pc.vector.empty() ? Point(Point::Zero(d)) : to_point(pc.vector);
    if (b.size() != d)
      throw ConfigError("problem.vector must match the matrix dimension");
    return problems::quadratic(A, b);
  }
  if (pc.kind == "linear") {
    if (pc.vector.empty())
      throw ConfigError("problem.vector required for a linear objective");
    return problems::linear(to_point(pc.vector));
  }
  if (pc.kind == "sphere" || pc.kind == "l1") {
    if (pc.dimension < 1)
      throw ConfigError("problem.dimension must be >= 1");
    return pc.kind == "sphere" ? problems::sphere(pc.dimension)
                               : problems::l1_norm(pc.dimension);
  }
  throw ConfigError("problem.kind must be quadratic, linear, sphere or l1");
}

inline void ExperimentConfig::validate() const {
  if (seeds.empty())
    throw ConfigError("seeds must be nonempty");
  if (lambdas.empty())
    throw ConfigError("lambdas must be nonempty");
  for (double l : lambdas)
    if (!(l > 0.0) || !std::isfinite(l))
      throw ConfigError("lambdas must be positive and finite");
  if (iterations < 1)
    throw ConfigError("iterations must be >= 1");
  if (!(step_scale > 0.0) || !(step_exponent >= 0.0))
    throw ConfigError("schedule needs scale > 0 and exponent >= 0");
  noise.validate();
  const Problem p = make_problem(problem);
  if (static_cast<Eigen::Index>(x0.size()) != p.dimension)
    throw ConfigError("x0 dimension " + std::to_string(x0.size()) +
                      " does not match the problem dimension " + std::to_string(p.dimension));
  if (algorithm == Algorithm::projected_subgrad) {
    if (!set)
      throw ConfigError("projected_subgrad needs a set");
    if (set->dimension() != p.dimension)
      throw ConfigError("set dimension does not match the problem");
    if (!set->contains(detail::to_point(x0)))
      throw ConfigError("x0 must lie in the set");
  }
  if (oracle == OracleKind::zeroth_order && !p.value)
    throw ConfigError("zeroth-order oracle needs function values");
  if (oracle == OracleKind::biased_subgradient &&
      (bias_model.b1 < 0.0 || bias_model.b2 < 0.0 || bias_model.b3 < 0.0))
    throw ConfigError("bias_model constants must be nonnegative");
  if (monitor.radii.empty() || monitor.deltas.empty())
    throw ConfigError("monitor radii and deltas must be nonempty");
  if (max_stored_points < 2 || max_stored_points > 10000)
    throw ConfigError("output.max_points must lie in [2, 10000]");
  if (jobs < 1)
    throw ConfigError("jobs must be >= 1");
  if (!(apt.horizon > 0.0))
    throw ConfigError("apt.horizon must be positive");
  if (!(certify.radius > 0.0))
    throw ConfigError("certify.radius must be positive");
  if (bias_sweep.lambdas.empty() || bias_sweep.samples < 1000)
    throw ConfigError("bias_sweep needs lambdas and >= 1000 samples");
}

// ---------------------------------------------------------------------------
// Presets

/// Benchmark settings shared by both presets.
inline ExperimentConfig benchmark_preset(const std::string &problem_id) {
  ExperimentConfig c;
  c.name = problem_id == "f1" ? "fig1" : "fig2";
  c.problem.id = problem_id;
  c.algorithm = Algorithm::zo_sgd;
  c.oracle = OracleKind::zeroth_order;
  c.step_scale = 0.01;
  c.step_exponent = 0.6;
  c.lambdas = {0.0005, 0.05, 0.1, 1.0};
  c.iterations = 100000;
  c.x0 = {1.0, 1.0};
  c.noise = {5.0, 1.0, 1.0};
  c.direction_law = DirectionLaw::gaussian_isotropic;
  c.seeds.clear();
  for (std::uint64_t s = 1; s <= 10; ++s)
    c.seeds.push_back(s);
  c.monitor.radii = {1.0};
  c.monitor.deltas = {0.05};
  c.out_dir = "out/" + c.name;
  return c;
}

inline ExperimentConfig preset(const std::string &name) {
  if (name == "fig1")
    return benchmark_preset("f1");
  if (name == "fig2")
    return benchmark_preset("f2");
  throw ConfigError("unknown preset '" + name + "' (expected fig1 or fig2)");
}

// ---------------------------------------------------------------------------
// Runs

struct RunSummary {
  double lambda = 0.0;
  std::uint64_t seed = 0;
  bool diverged = false;
  std::string error;
  double final_gap = 0.0;
  double sup_norm = 0.0;
  bool bounded = true;
  std::vector<std::size_t> index;     ///< decimated step indices
  std::vector<double> gap;            ///< gap at those indices
  std::vector<double> running_sup;    ///< sup_{k <= n} ||x_k||
  std::vector<RadiusVisits> visits;
  std::vector<double> deltas;
  std::vector<std::optional<std::size_t>> n_delta;
};

/// Reference point and value the gap is measured against; for constrained runs
/// the minimizer over the set.
struct Reference {
  Point minimizer;
  double value = 0.0;
};

inline Reference reference_for(const ExperimentConfig &cfg, const Problem &p) {
  const Eigen::Index d = p.dimension;
  if (cfg.algorithm == Algorithm::projected_subgrad && cfg.set) {
    const Point xs = projected_minimizer(p, *cfg.set, detail::to_point(cfg.x0));
    return {xs, p.value(xs)};
  }
  if (p.minimizer)
    return {*p.minimizer, p.optimum_value};
  return {Point::Zero(d), p.optimum_value};
}

inline std::vector<double> monitor_deltas(const ExperimentConfig &cfg) {
  std::vector<double> deltas = cfg.monitor.deltas;
  if (std::find(deltas.begin(), deltas.end(), 0.05) == deltas.end())
    deltas.push_back(0.05);
  return deltas;
}

inline RunSpec make_run_spec(const ExperimentConfig &cfg, const Problem &p) {
  RunSpec s;
  s.problem = p;
  s.algorithm = cfg.algorithm;
  s.oracle = cfg.oracle;
  s.schedule = StepSchedule(cfg.step_scale, cfg.step_exponent);
  s.iterations = cfg.iterations;
  s.x0 = detail::to_point(cfg.x0);
  s.noise = cfg.noise;
  s.direction_law = cfg.direction_law;
  s.set = cfg.set;
  s.bias_model = cfg.bias_model;
  s.bias_direction = cfg.bias_direction;
  s.decompose = cfg.decompose;
  s.log_estimates = true;
  return s;
}

inline RunSummary summarize(const Trace &tr, const Problem &p, const Reference &ref,
                            const ExperimentConfig &cfg, double lambda) {
  RunSummary s;
  s.lambda = lambda;
  s.seed = tr.seed;
  auto gap = [&](const Point &x) { return std::abs(p.value(x) - ref.value); };
  s.deltas = monitor_deltas(cfg);
  const auto m = monitor(tr.points, ref.minimizer, gap, cfg.monitor.radii, s.deltas,
                         cfg.monitor.bounded_threshold);
  s.visits = m.visits;
  s.n_delta = m.n_delta;
  s.sup_norm = m.sup_norm;
  s.bounded = m.bounded;
  const std::size_t N = tr.steps();
  s.final_gap = gap(Point(tr.points[N]));
  s.index = decimation_indices(N, cfg.max_stored_points);
  double sup = 0.0;
  std::size_t k = 0;
  for (std::size_t idx : s.index) {
    for (; k <= idx; ++k)
      sup = std::max(sup, tr.points[k].norm());
    s.gap.push_back(gap(Point(tr.points[idx])));
    s.running_sup.push_back(sup);
  }
  return s;
}

struct RunOutput {
  Trace trace;
  RunSummary summary;
};

/// One (lambda, seed) cell of the zeroth-order (or exact-gradient) SGD grid.
inline RunOutput run_zo_sgd(const ExperimentConfig &cfg, double lambda, std::uint64_t seed) {
  cfg.validate();
  if (cfg.algorithm != Algorithm::zo_sgd)
    throw ConfigError("run_zo_sgd: config selects the projected algorithm");
  const Problem p = make_problem(cfg.problem);
  const Reference ref = reference_for(cfg, p);
  RunOutput out{run_recursion(make_run_spec(cfg, p), lambda, seed), {}};
  out.summary = summarize(out.trace, p, ref, cfg, lambda);
  return out;
}

/// One cell of the projected stochastic subgradient grid.
inline RunOutput run_projected_subgrad(const ExperimentConfig &cfg, double lambda,
                                       std::uint64_t seed) {
  cfg.validate();
  if (cfg.algorithm != Algorithm::projected_subgrad)
    throw ConfigError("run_projected_subgrad: config selects the unconstrained algorithm");
  const Problem p = make_problem(cfg.problem);
  const Reference ref = reference_for(cfg, p);
  RunOutput out{run_recursion(make_run_spec(cfg, p), lambda, seed), {}};
  out.summary = summarize(out.trace, p, ref, cfg, lambda);
  return out;
}

struct LambdaAggregate {
  double lambda = 0.0;
  std::vector<double> final_gaps; ///< in seed order
  double median_gap = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  /// Median over seeds of n_delta for delta = 0.05; empty when that median is "none".
  std::optional<double> n_delta_05;
  std::size_t diverged = 0;
  bool all_bounded = true;
  double max_sup_norm = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RunSummary> runs; ///< ordered by (lambda index, seed index)
  std::vector<LambdaAggregate> aggregates;
  std::vector<std::string> warnings;
  std::vector<std::string> files;

  const LambdaAggregate &at(double lambda) const {
    for (const auto &a : aggregates)
      if (a.lambda == lambda)
        return a;
    throw RangeError("no aggregate for lambda " + format_number(lambda));
  }
};

/// Recomputes the benchmark optima by local minimization and compares them
/// with the published reference values.
inline std::vector<std::string> reference_optimum_warnings(const ProblemConfig &pc) {
  std::vector<std::string> w;
  auto compare = [&](const Problem &p, Point start, double quoted) {
    const Point xm = problems::local_minimize(p, std::move(start));
    const double v = p.value(xm);
    if (std::abs(v - quoted) > 5e-3)
      w.push_back(p.name + ": recomputed optimum " + format_number(v) +
                  " differs from the reference value " + format_number(quoted) +
                  " by more than 5e-3");
  };
  if (pc.id == "f1")
    compare(problems::f1(), make_point({0.3, 0.0}), problems::kQuotedF1Optimum);
  if (pc.id == "f2")
    compare(problems::f2(), make_point({0.9, 0.0}), problems::kQuotedF2Optimum);
  return w;
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// runs.csv body (everything after the timestamp comment line).
inline std::string runs_csv_body(const ExperimentResult &r) {
  std::ostringstream o;
  o << "lambda,seed,n,gap,sup_norm\n";
  for (const auto &s : r.runs) {
    if (s.diverged) {
      o << format_number(s.lambda) << ',' << s.seed << ",diverged,inf,inf\n";
      continue;
    }
    for (std::size_t i = 0; i < s.index.size(); ++i)
      o << format_number(s.lambda) << ',' << s.seed << ',' << s.index[i] << ','
        << format_number(s.gap[i]) << ',' << format_number(s.running_sup[i]) << '\n';
  }
  return o.str();
}

inline std::string summary_csv(const ExperimentResult &r) {
  std::ostringstream o;
  o << "lambda,median_gap,q25,q75,n_delta_0.05\n";
  for (const auto &a : r.aggregates)
    o << format_number(a.lambda) << ',' << format_number(a.median_gap) << ','
      << format_number(a.q25) << ',' << format_number(a.q75) << ','
      << (a.n_delta_05 ? format_number(*a.n_delta_05) : std::string("none")) << '\n';
  return o.str();
}

inline json summary_json(const ExperimentResult &r) {
  json aggregates = json::array();
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  for (const auto &a : r.aggregates) {
    json gaps = json::array();
    for (double g : a.final_gaps)
      gaps.push_back(num(g));
    aggregates.push_back({{"lambda", a.lambda},
                          {"median_gap", num(a.median_gap)},
                          {"q25", num(a.q25)},
                          {"q75", num(a.q75)},
                          {"n_delta_0.05", a.n_delta_05 ? json(*a.n_delta_05) : json(nullptr)},
                          {"final_gaps", gaps},
                          {"diverged", a.diverged},
                          {"all_bounded", a.all_bounded},
                          {"max_sup_norm", num(a.max_sup_norm)}});
  }
  json runs = json::array();
  for (const auto &s : r.runs) {
    json visits = json::array();
    for (const auto &v : s.visits)
      visits.push_back({{"radius", v.radius},
                        {"count", v.count},
                        {"last_index", v.last_index ? json(*v.last_index) : json(nullptr)}});
    json nd = json::object();
    for (std::size_t i = 0; i < s.deltas.size(); ++i)
      nd[format_number(s.deltas[i])] = s.n_delta[i] ? json(*s.n_delta[i]) : json(nullptr);
    runs.push_back({{"lambda", s.lambda},
                    {"seed", s.seed},
                    {"diverged", s.diverged},
                    {"final_gap", num(s.final_gap)},
                    {"sup_norm", num(s.sup_norm)},
                    {"bounded", s.bounded},
                    {"visits", visits},
                    {"n_delta", nd}});
    if (s.diverged)
      runs.back()["error"] = s.error;
  }
  return {{"config", config_to_json(r.config)},
          {"aggregates", aggregates},
          {"runs", runs},
          {"warnings", r.warnings}};
}

inline std::vector<LambdaAggregate> aggregate(const ExperimentConfig &cfg,
                                              const std::vector<RunSummary> &runs) {
  std::vector<LambdaAggregate> out;
  const std::size_t S = cfg.seeds.size();
  for (std::size_t li = 0; li < cfg.lambdas.size(); ++li) {
    LambdaAggregate a;
    a.lambda = cfg.lambdas[li];
    std::vector<double> nd;
    for (std::size_t si = 0; si < S; ++si) {
      const RunSummary &s = runs[li * S + si];
      a.final_gaps.push_back(s.diverged ? std::numeric_limits<double>::infinity()
                                        : s.final_gap);
      a.diverged += s.diverged ? 1 : 0;
      a.all_bounded = a.all_bounded && !s.diverged && s.bounded;
      a.max_sup_norm = std::max(a.max_sup_norm, s.diverged
                                                    ? std::numeric_limits<double>::infinity()
                                                    : s.sup_norm);
      double v = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < s.deltas.size(); ++k)
        if (s.deltas[k] == 0.05 && s.n_delta[k])
          v = static_cast<double>(*s.n_delta[k]);
      nd.push_back(v);
    }
    a.median_gap = median(a.final_gaps);
    a.q25 = quantile(a.final_gaps, 0.25);
    a.q75 = quantile(a.final_gaps, 0.75);
    const double m = median(nd);
    if (std::isfinite(m))
      a.n_delta_05 = m;
    out.push_back(std::move(a));
  }
  return out;
}

/// Writes runs.csv, summary.csv, summary.json and one SVG per lambda into
/// cfg.out_dir. Returns the written paths.
inline std::vector<std::string> write_outputs(const ExperimentResult &r) {
  namespace fs = std::filesystem;
  const fs::path dir(r.config.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("cannot create output directory " + dir.string() + ": " +
                             ec.message());
  std::vector<std::string> files;
  auto emit = [&](const fs::path &path, const std::string &body) {
    write_text_file(path.string(), body);
    files.push_back(path.string());
  };
  emit(dir / "runs.csv",
       "# " + r.config.name + " generated " + utc_timestamp() + "\n" + runs_csv_body(r));
  emit(dir / "summary.csv", summary_csv(r));
  emit(dir / "summary.json", summary_json(r).dump(2) + "\n");
  const std::size_t S = r.config.seeds.size();
  for (std::size_t li = 0; li < r.config.lambdas.size(); ++li) {
    std::vector<SvgSeries> series;
    for (std::size_t si = 0; si < S; ++si) {
      const RunSummary &s = r.runs[li * S + si];
      SvgSeries ser{"seed " + std::to_string(s.seed), {}};
      for (std::size_t i = 0; i < s.index.size(); ++i)
        ser.points.emplace_back(static_cast<double>(s.index[i]), s.gap[i]);
      series.push_back(std::move(ser));
    }
    const std::string lam = format_number(r.config.lambdas[li]);
    emit(dir / ("gap_lambda_" + lam + ".svg"),
         gap_chart_svg(r.config.name + ": lambda = " + lam, series));
  }
  return files;
}

/// Executes the (lambda x seed) grid on a bounded worker pool. Divergent cells
/// are recorded (gap = inf) rather than aborting the grid; other errors are
/// rethrown after all workers finish. Files are written when `write_files`.
inline ExperimentResult run_experiment(const ExperimentConfig &cfg, bool write_files = true) {
  cfg.validate();
  const Problem p = make_problem(cfg.problem);
  const Reference ref = reference_for(cfg, p);
  const RunSpec spec = make_run_spec(cfg, p);

  const std::size_t L = cfg.lambdas.size(), S = cfg.seeds.size();
  std::vector<RunSummary> runs(L * S);
  std::vector<std::exception_ptr> errors(L * S);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t cell = next++; cell < L * S; cell = next++) {
      const double lambda = cfg.lambdas[cell / S];
      const std::uint64_t seed = cfg.seeds[cell % S];
      try {
        const Trace tr = run_recursion(spec, lambda, seed);
        runs[cell] = summarize(tr, p, ref, cfg, lambda);
      } catch (const DivergenceError &e) {
        RunSummary s;
        s.lambda = lambda;
        s.seed = seed;
        s.diverged = true;
        s.bounded = false;
        s.error = e.what();
        s.final_gap = std::numeric_limits<double>::infinity();
        s.sup_norm = std::numeric_limits<double>::infinity();
        s.deltas = monitor_deltas(cfg);
        s.n_delta.assign(s.deltas.size(), std::nullopt);
        runs[cell] = std::move(s);
      } catch (...) {
        errors[cell] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(cfg.jobs, L * S);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back(worker);
    for (auto &t : pool)
      t.join();
  }
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);

  ExperimentResult r;
  r.config = cfg;
  r.runs = std::move(runs);
  r.aggregates = aggregate(cfg, r.runs);
  r.warnings = reference_optimum_warnings(cfg.problem);
  if (write_files)
    r.files = write_outputs(r);
  return r;
}

// ---------------------------------------------------------------------------
// Preset band checks

struct BandCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline bool all_passed(const std::vector<BandCheck> &checks) {
  return std::all_of(checks.begin(), checks.end(), [](const auto &c) { return c.passed; });
}

/// Bands for the f1 preset: small medians for moderate lambda, a large median
/// for the tiniest lambda, and median(0.1) <= median(1) under seed resampling.
inline std::vector<BandCheck> fig1_checks(const ExperimentResult &r) {
  std::vector<BandCheck> out;
  for (double l : {0.05, 0.1, 1.0}) {
    const double m = r.at(l).median_gap;
    out.push_back({"median gap <= 0.1 at lambda " + format_number(l), m <= 0.1,
                   "median " + format_number(m)});
  }
  const double tiny = r.at(0.0005).median_gap;
  out.push_back({"median gap >= 1 at lambda 0.0005", tiny >= 1.0,
                 "median " + format_number(tiny)});
  const std::size_t count =
      bootstrap_order_count(r.at(0.1).final_gaps, r.at(1.0).final_gaps, 10, 2024);
  out.push_back({"median(0.1) <= median(1) in >= 7/10 bootstrap resamples", count >= 7,
                 std::to_string(count) + "/10"});
  return out;
}

inline std::vector<BandCheck> fig2_checks(const ExperimentResult &r) {
  std::vector<BandCheck> out;
  for (double l : {0.05, 0.1}) {
    const double m = r.at(l).median_gap;
    out.push_back({"median gap <= 0.05 at lambda " + format_number(l), m <= 0.05,
                   "median " + format_number(m)});
  }
  const double m1 = r.at(1.0).median_gap;
  out.push_back({"median gap in [0.05, 1] at lambda 1", m1 >= 0.05 && m1 <= 1.0,
                 "median " + format_number(m1)});
  return out;
}

inline std::vector<BandCheck> preset_checks(const std::string &preset_name,
                                            const ExperimentResult &r) {
  if (preset_name == "fig1")
    return fig1_checks(r);
  if (preset_name == "fig2")
    return fig2_checks(r);
  throw ConfigError("unknown preset '" + preset_name + "'");
}

// ---------------------------------------------------------------------------
// Bias sweep

struct BiasSweepRow {
  double lambda = 0.0;
  double bias_norm = 0.0;
  double bias_se = 0.0;
  double second_moment = 0.0;
  double second_moment_se = 0.0;
};

struct BiasSweepResult {
  std::vector<BiasSweepRow> rows;
  BiasModel fitted;
  std::optional<double> lambda_star;
  std::optional<double> epsilon_star;
};

/// Measures bias and second moment of the two-point estimator over the sweep
/// grid, then fits epsilon(lambda) = b1/lambda + b2 lambda to the upper
/// confidence values (bias + 3 SE) and b3 to lambda^2 * second moment.
inline BiasSweepResult bias_sweep(const ExperimentConfig &cfg) {
  cfg.validate();
  const Problem p = make_problem(cfg.problem);
  const Point x = detail::to_point(cfg.bias_sweep.point);
  if (x.size() != p.dimension)
    throw ConfigError("bias_sweep.point dimension does not match the problem");
  BiasSweepResult out;
  std::vector<double> lams, upper, moments;
  for (std::size_t i = 0; i < cfg.bias_sweep.lambdas.size(); ++i) {
    const double l = cfg.bias_sweep.lambdas[i];
    const ZoEstimatorConfig zc{l, cfg.direction_law, cfg.noise};
    zc.validate();
    const std::uint64_t seed = cfg.seeds.front();
    RandomSource rb = RandomSource::for_cell(seed, l, 1);
    RandomSource rm = RandomSource::for_cell(seed, l, 2);
    const auto b = measure_bias(p, zc, x, cfg.bias_sweep.samples, rb);
    const auto m = measure_second_moment(p, zc, x, cfg.bias_sweep.samples, rm);
    out.rows.push_back({l, b.bias.norm(), b.standard_error, m.value, m.standard_error});
    lams.push_back(l);
    upper.push_back(b.bias.norm() + 3.0 * b.standard_error);
    moments.push_back(m.value);
  }
  out.fitted = fit_bias_envelope(lams, upper);
  out.fitted.b3 = fit_second_moment_constant(lams, moments);
  if (out.fitted.b1 > 0.0 && out.fitted.b2 > 0.0) {
    out.lambda_star = out.fitted.lambda_star();
    out.epsilon_star = out.fitted.epsilon(*out.lambda_star);
  }
  return out;
}

inline json to_json(const BiasSweepResult &r) {
  json rows = json::array();
  for (const auto &row : r.rows)
    rows.push_back({{"lambda", row.lambda},
                    {"bias_norm", row.bias_norm},
                    {"bias_se", row.bias_se},
                    {"second_moment", row.second_moment},
                    {"second_moment_se", row.second_moment_se}});
  json j = {{"rows", rows},
            {"fitted", {{"b1", r.fitted.b1}, {"b2", r.fitted.b2}, {"b3", r.fitted.b3}}},
            {"lambda_star", r.lambda_star ? json(*r.lambda_star) : json(nullptr)},
            {"epsilon_star", r.epsilon_star ? json(*r.epsilon_star) : json(nullptr)}};
  return j;
}

inline std::string bias_sweep_csv(const BiasSweepResult &r) {
  std::ostringstream o;
  o << "lambda,bias_norm,bias_se,second_moment,second_moment_se\n";
  for (const auto &row : r.rows)
    o << format_number(row.lambda) << ',' << format_number(row.bias_norm) << ','
      << format_number(row.bias_se) << ',' << format_number(row.second_moment) << ','
      << format_number(row.second_moment_se) << '\n';
  return o.str();
}

// ---------------------------------------------------------------------------
// Assumption certification

/// Runs every applicable assumption check on the configured objective. Fitted
/// constants are estimated on one sample set and verified on another.
inline json certify_report(const ExperimentConfig &cfg) {
  cfg.validate();
  const Problem p = make_problem(cfg.problem);
  const Eigen::Index d = p.dimension;
  const Reference ref = reference_for(cfg, p);
  json reports = json::array();
  json constants = json::object();

  SamplingPlan fit_plan;
  fit_plan.dimension = d;
  fit_plan.radius = cfg.certify.radius;
  fit_plan.random_points = cfg.certify.random_points;
  fit_plan.seed = cfg.certify.seed;
  fit_plan.center = ref.minimizer;
  SamplingPlan verify_plan = fit_plan;
  verify_plan.seed = cfg.certify.seed + 1;
  verify_plan.directions = fit_plan.directions + 7;

  const double lambda = cfg.lambdas.front();
  const bool biased = cfg.bias_model.b1 > 0.0 || cfg.bias_model.b2 > 0.0;
  const double eps = biased ? cfg.bias_model.epsilon(lambda) : 0.0;
  constants["epsilon"] = eps;
  constants["lambda"] = lambda;

  if (p.has_gradient()) {
    const double L = estimate_lipschitz(p.gradient, fit_plan, 20000);
    constants["lipschitz_estimate"] = L;

    Problem pref = p;
    pref.optimum_value = ref.value;
    const double mu = fit_pl_mu(pref, fit_plan);
    constants["pl_mu"] = std::isfinite(mu) ? json(mu) : json(nullptr);
    reports.push_back(check_pl(pref, std::isfinite(mu) ? mu : 0.0, verify_plan));

    Problem pmin = p;
    pmin.minimizer = ref.minimizer;
    const auto [r1, r2] = fit_quadratic_growth(pmin, fit_plan);
    constants["growth_low"] = r1;
    constants["growth_high"] = r2;
    reports.push_back(check_quadratic_growth(pmin, r1, r2, verify_plan));

    // V = f - f*, a(r) = mu r1 r^2, b(e) = e^2 / 2.
    LyapunovSpec V;
    V.V = [pref](const Point &x) { return pref.value(x) - pref.optimum_value; };
    V.gradient = p.gradient;
    const double rate = (std::isfinite(mu) ? mu : 0.0) * r1;
    V.a_fn = [rate](double r) { return rate * r * r; };
    V.b_fn = [](double e) { return 0.5 * e * e; };
    V.a_low = r1;
    V.a_high = r2;
    const VectorField h = [g = p.gradient](const Point &x) -> Point { return -g(x); };
    auto iss = check_iss_dissipation(V, std::span<const VectorField>(&h, 1), eps, verify_plan);
    reports.push_back(iss);

    double kappa = 0.0;
    for (const auto &x : sample_points(fit_plan))
      kappa = std::max(kappa, p.gradient(x).norm() / (1.0 + x.norm()));
    kappa *= 1.05;
    constants["marchaud_kappa"] = kappa;
    reports.push_back(check_marchaud_growth(std::span<const VectorField>(&h, 1),
                                            kappa + eps, verify_plan));
  }

  if (cfg.oracle == OracleKind::zeroth_order) {
    const ZoEstimatorConfig zc{lambda, cfg.direction_law, cfg.noise};
    if (conditional_mean_available(zc, d)) {
      const auto sampler = zo_noise_sampler(p, zc);
      SamplingPlan small = fit_plan;
      small.radius = std::min(cfg.certify.radius, 2.0);
      small.shells = 2;
      small.directions = 4;
      small.random_points = 8;
      const auto pts = sample_points(small);
      double worst = 0.0;
      RandomSource rng(cfg.certify.seed, {0x70e5ULL});
      for (const auto &x : pts) {
        double acc = 0.0;
        for (int k = 0; k < 2000; ++k)
          acc += sampler(x, rng).squaredNorm();
        worst = std::max(worst, acc / 2000.0);
      }
      const double K = 1.25 * worst;
      constants["noise_moment_bound"] = K;
      reports.push_back(check_noise_moment(sampler, K, pts, 2000, cfg.certify.seed + 2));
    }
  }

  if (cfg.set) {
    const double M = p.constants.monotonicity.value_or(0.0);
    constants["monotonicity"] = M;
    reports.push_back(
        check_strong_monotonicity(p, M, fit_plan, 4000, &*cfg.set));
    reports.push_back(check_iss_constrained(p, *cfg.set, M, eps, 2000, cfg.certify.seed,
                                            reference_for(cfg, p).minimizer));
  }

  bool all = true;
  for (const auto &r : reports)
    all = all && r.at("verdict") == "pass";
  return {{"problem", p.name},
          {"constants", constants},
          {"reports", reports},
          {"all_passed", all}};
}

// ---------------------------------------------------------------------------
// Pseudo-trajectory checks

/// For every (lambda, seed): runs with the decomposition logged, then reports
/// the interpolation-vs-flow deviation over [t(n), t(n) + T], the martingale
/// sup-tail and, for Lipschitz unconstrained drifts, the finite-horizon
/// certificate at each configured start index n.
inline json apt_report(const ExperimentConfig &cfg) {
  cfg.validate();
  const Problem p = make_problem(cfg.problem);
  RunSpec spec = make_run_spec(cfg, p);
  const bool decomposable = cfg.oracle != OracleKind::zeroth_order ||
                            conditional_mean_available(
                                {cfg.lambdas.front(), cfg.direction_law, cfg.noise},
                                p.dimension);
  if (!decomposable)
    throw CapabilityError("apt: the conditional mean is not computable for this setup");
  spec.decompose = true;

  InclusionSpec inc;
  if (cfg.algorithm == Algorithm::projected_subgrad) {
    inc.constrained = ConstrainedDrift{[p](const Point &x) { return p.subgradient_at(x); },
                                       *cfg.set,
                                       p.constants.subgradient_bound.value_or(0.0)};
  } else {
    inc.drift = [p](const Point &x) -> Point { return -p.subgradient_at(x); };
  }

  json rows = json::array();
  for (double lambda : cfg.lambdas) {
    for (std::uint64_t seed : cfg.seeds) {
      const Trace tr = run_recursion(spec, lambda, seed);
      const std::size_t N = tr.steps();
      double max_bias = 0.0;
      for (std::size_t k = 0; k < N; ++k)
        max_bias = std::max(max_bias, tr.bias[k].norm());
      InclusionSpec local = inc;
      local.epsilon = max_bias;
      for (std::size_t n : cfg.apt.starts) {
        if (n >= N)
          continue;
        json row = {{"lambda", lambda}, {"seed", seed}, {"n", n}, {"t_n", tr.time(n)}};
        const double t0 = tr.time(n);
        if (t0 + cfg.apt.horizon <= tr.time(N))
          row["apt_deviation"] = apt_deviation(tr, local, t0, cfg.apt.horizon);
        else
          row["apt_deviation"] = nullptr;
        row["martingale_tail"] = martingale_tail(tr, n);
        if (!local.constrained && p.constants.lipschitz) {
          try {
            const auto c = finite_horizon_certificate(tr, local, n, cfg.apt.horizon,
                                                      *p.constants.lipschitz);
            row["certificate"] = {{"m", c.m},           {"D", c.D},
                                  {"C_T", c.C_T},       {"K_nT", c.K_nT},
                                  {"psi_norm", c.psi_norm},
                                  {"psi_norm_inclusive", c.psi_norm_inclusive},
                                  {"psi_sup", c.psi_sup},
                                  {"bound", c.bound},   {"measured", c.measured},
                                  {"holds", c.holds()},
                                  {"uniform_bound", c.uniform_bound()},
                                  {"holds_uniform", c.holds_uniform()}};
          } catch (const RangeError &) {
            row["certificate"] = nullptr;
          }
        }
        rows.push_back(row);
      }
      const double eps = (cfg.bias_model.b1 > 0.0 || cfg.bias_model.b2 > 0.0)
                             ? cfg.bias_model.epsilon(lambda)
                             : max_bias;
      const auto audit = sri_membership(tr, [&](const Point &x) { return local.field(x); }, eps);
      rows.push_back({{"lambda", lambda},
                      {"seed", seed},
                      {"sri_epsilon", eps},
                      {"sri_worst_residual", audit.worst_residual},
                      {"sri_zero_fraction", audit.zero_fraction()},
                      {"sri_violation_indices", audit.violation_indices}});
    }
  }
  return {{"problem", p.name}, {"horizon", cfg.apt.horizon}, {"rows", rows}};
}

} // namespace sri
