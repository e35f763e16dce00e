/// @file
/// @brief Algorithm drivers (zeroth-order SGD, projected stochastic
/// subgradient), stochastic-recursive-inclusion audits and trace monitors.
#pragma once

#include "sri/core.hpp"
#include "sri/geometry.hpp"
#include "sri/oracles.hpp"
#include "sri/problems.hpp"
#include "sri/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sri {

/// Raised when a run violates an identity that holds for exact projections.
struct InternalConsistencyError : std::logic_error {
  using std::logic_error::logic_error;
};

enum class Algorithm { zo_sgd, projected_subgrad };

enum class OracleKind {
  zeroth_order,       ///< two-point estimator on noisy function values
  exact_gradient,     ///< noiseless gradient (or minimum-norm subgradient)
  biased_subgradient, ///< g + B + M with ||B|| = epsilon(lambda)
};

/// Everything one (lambda, seed) run needs besides lambda and seed.
struct RunSpec {
  Problem problem;
  Algorithm algorithm = Algorithm::zo_sgd;
  OracleKind oracle = OracleKind::zeroth_order;
  StepSchedule schedule{0.01, 0.6};
  std::size_t iterations = 1000;
  Point x0;
  NoiseSpec noise;
  DirectionLaw direction_law = DirectionLaw::gaussian_isotropic;
  std::optional<ConvexSet> set;
  BiasModel bias_model;
  BiasDirection bias_direction = BiasDirection::fixed_axis;
  /// Log the conditional-mean decomposition (bias and martingale noise) per step.
  bool decompose = false;
  /// Log raw oracle outputs.
  bool log_estimates = false;
};

/// Visits of the iterates to the ball of a given radius around the minimizer.
struct RadiusVisits {
  double radius = 0.0;
  std::size_t count = 0;
  std::optional<std::size_t> last_index;
};

struct MonitorResult {
  std::vector<RadiusVisits> visits;
  /// Smallest n from which the gap stays below delta through the end.
  std::vector<std::optional<std::size_t>> n_delta;
  double sup_norm = 0.0;
  bool bounded = true;
};

/// Scans iterates for recurrence, neighbourhood entry and boundedness.
template <typename Gap>
MonitorResult monitor(const PointSeries &points, const Point &center, Gap &&gap,
                      const std::vector<double> &radii, const std::vector<double> &deltas,
                      double bound = 1e3) {
  MonitorResult out;
  for (double r : radii)
    out.visits.push_back({r, 0, std::nullopt});
  const std::size_t N = points.size();
  std::vector<double> gaps(N);
  for (std::size_t n = 0; n < N; ++n) {
    const auto x = points[n];
    out.sup_norm = std::max(out.sup_norm, x.norm());
    const double dist = (x - center).norm();
    for (auto &v : out.visits) {
      if (dist <= v.radius) {
        ++v.count;
        v.last_index = n;
      }
    }
    gaps[n] = gap(Point(x));
  }
  for (double delta : deltas) {
    std::optional<std::size_t> entry;
    for (std::size_t k = N; k-- > 0;) {
      if (!(gaps[k] < delta))
        break;
      entry = k;
    }
    out.n_delta.push_back(entry);
  }
  out.bounded = std::isfinite(out.sup_norm) && out.sup_norm <= bound;
  return out;
}

namespace detail {

inline void divergence_guard(const Point &x, std::size_t n) {
  if (!x.allFinite() || x.norm() > kDivergenceNorm)
    throw DivergenceError("iterate diverged at step " + std::to_string(n + 1) +
                              " (last finite index " + std::to_string(n) + ")",
                          n, 0.0);
}

/// Output of one oracle call expressed relative to the drift -grad f(x):
/// estimate = grad f(x) - bias - noise, so that
/// (x_{n+1} - x_n) / alpha_n = -grad f(x_n) + bias + noise for the free recursion.
struct OracleCall {
  Point estimate;
  Point bias;
  Point noise;
  bool decomposed = false;
};

inline OracleCall call_oracle(const RunSpec &spec, double lambda, const Point &x,
                              RandomSource &rng) {
  OracleCall c;
  switch (spec.oracle) {
  case OracleKind::exact_gradient:
    c.estimate = spec.problem.subgradient_at(x);
    c.bias = Point::Zero(x.size());
    c.noise = Point::Zero(x.size());
    c.decomposed = true;
    break;
  case OracleKind::zeroth_order: {
    ZoEstimatorConfig cfg{lambda, spec.direction_law, spec.noise};
    c.estimate = zo_gradient(spec.problem, cfg, x, rng).estimate;
    if (spec.decompose) {
      const Point mean = conditional_mean(spec.problem, cfg, x);
      c.bias = -(mean - spec.problem.subgradient_at(x));
      c.noise = -(c.estimate - mean);
      c.decomposed = true;
    }
    break;
  }
  case OracleKind::biased_subgradient: {
    const auto s = biased_subgradient(spec.problem, spec.bias_model, lambda, x, rng,
                                      spec.bias_direction);
    c.estimate = s.value;
    c.bias = -s.bias;
    c.noise = -s.noise;
    c.decomposed = true;
    break;
  }
  }
  return c;
}

} // namespace detail

/// Runs x_{n+1} = x_n - alpha_n * estimate (or its projection onto the set for
/// the projected algorithm). Throws DivergenceError on blow-up and
/// InternalConsistencyError if a projected step breaks ||eta|| <= 2 ||g~||.
inline Trace run_recursion(const RunSpec &spec, double lambda, std::uint64_t seed) {
  if (!(lambda > 0.0))
    throw ConfigError("run: lambda must be positive");
  if (spec.x0.size() != spec.problem.dimension)
    throw ConfigError("run: x0 dimension does not match the problem");
  const bool projected = spec.algorithm == Algorithm::projected_subgrad;
  if (projected && !spec.set)
    throw ConfigError("run: projected algorithm needs a feasible set");
  if (projected && !spec.set->contains(spec.x0))
    throw ConfigError("run: x0 must lie in the feasible set");
  if (spec.oracle == OracleKind::zeroth_order && spec.decompose &&
      !conditional_mean_available({lambda, spec.direction_law, spec.noise},
                                  spec.problem.dimension))
    throw CapabilityError("run: conditional mean not computable for this setup");

  RandomSource rng = RandomSource::for_cell(seed, lambda, 0);
  Trace tr(spec.schedule, seed);
  const std::size_t N = spec.iterations;
  const Eigen::Index d = spec.problem.dimension;
  tr.points.reserve(N + 1, d);
  tr.points.push_back(spec.x0);
  Point x = spec.x0;
  for (std::size_t n = 0; n < N; ++n) {
    const double a = spec.schedule.alpha(n);
    const auto call = detail::call_oracle(spec, lambda, x, rng);
    Point next = x - a * call.estimate;
    if (projected) {
      next = spec.set->project(next);
      const Point eta = (x - next) / a - call.estimate;
      const double gn = call.estimate.norm();
      const double slack = 64.0 * std::numeric_limits<double>::epsilon() *
                           ((x.norm() + next.norm()) / a + gn);
      if (eta.norm() > 2.0 * gn + slack)
        throw InternalConsistencyError("normal-cone term exceeds 2 ||g~|| at step " +
                                       std::to_string(n));
      tr.normal_terms.push_back(eta);
    }
    detail::divergence_guard(next, n);
    if (call.decomposed) {
      tr.bias.push_back(call.bias);
      tr.noise.push_back(call.noise);
    }
    if (spec.log_estimates)
      tr.estimates.push_back(call.estimate);
    x = std::move(next);
    tr.points.push_back(x);
  }
  return tr;
}

/// Per-step audit of the inclusion
/// (x_{n+1} - x_n)/alpha_n - M_{n+1} [+ eta_n] in h(x_n) + B(0, eps).
struct SriAudit {
  double worst_residual = 0.0;
  std::size_t steps = 0;
  std::size_t violations = 0;
  std::vector<std::size_t> violation_indices; ///< first 100 offending steps

  double zero_fraction() const {
    return steps ? 1.0 - static_cast<double>(violations) / static_cast<double>(steps) : 1.0;
  }
};

/// Residual of step n is max(0, ||(x_{n+1}-x_n)/alpha_n - M_{n+1} [+ eta_n] - h(x_n)|| - eps),
/// where eta_n is added back when the trace logged normal-cone terms. A
/// floating-point slack proportional to ulp(x)/alpha_n absorbs cancellation in
/// the difference quotient.
inline SriAudit sri_membership(const Trace &tr, const VectorField &h, double eps) {
  if (!tr.has_noise())
    throw CapabilityError("sri_membership: trace has no reconstructed noise");
  SriAudit audit;
  const std::size_t N = tr.steps();
  const bool with_normal = tr.normal_terms.size() == N && N > 0;
  audit.steps = N;
  constexpr double ulp = std::numeric_limits<double>::epsilon();
  for (std::size_t n = 0; n < N; ++n) {
    const double a = tr.alpha(n);
    const Point xn = tr.points[n];
    const Point xn1 = tr.points[n + 1];
    Point v = (xn1 - xn) / a - tr.noise[n];
    if (with_normal)
      v += tr.normal_terms[n];
    const Point hx = h(xn);
    const double slack =
        64.0 * ulp *
        ((xn.norm() + xn1.norm()) / a + tr.noise[n].norm() + hx.norm() +
         (with_normal ? tr.normal_terms[n].norm() : 0.0));
    const double r = std::max(0.0, (v - hx).norm() - eps - slack);
    audit.worst_residual = std::max(audit.worst_residual, r);
    if (r > 0.0) {
      ++audit.violations;
      if (audit.violation_indices.size() < 100)
        audit.violation_indices.push_back(n);
    }
  }
  return audit;
}

/// Log-spaced step indices 0 = i_0 < ... < i_k = N with k + 1 <= max_points.
inline std::vector<std::size_t> decimation_indices(std::size_t N, std::size_t max_points) {
  std::vector<std::size_t> idx;
  if (max_points < 2 || N + 1 <= max_points) {
    for (std::size_t n = 0; n <= N; ++n)
      idx.push_back(n);
    return idx;
  }
  idx.push_back(0);
  const double logN = std::log(static_cast<double>(N));
  std::size_t budget = max_points - 1;
  for (std::size_t k = 0; k < budget; ++k) {
    const double f = static_cast<double>(k) / static_cast<double>(budget - 1);
    const auto n = static_cast<std::size_t>(std::llround(std::exp(f * logN)));
    if (n > idx.back())
      idx.push_back(std::min(n, N));
  }
  if (idx.back() != N)
    idx.push_back(N);
  return idx;
}

} // namespace sri
