/// @file
/// @brief Continuous-time side: solutions of x' in h(x) + B(0, eps) and of the
/// projected inclusion, pseudo-trajectory deviation and finite-horizon bounds.
#pragma once

#include "sri/core.hpp"
#include "sri/geometry.hpp"
#include "sri/problems.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace sri {

/// Measurable selection b(t) from the closed ball of radius epsilon.
struct BiasSelection {
  enum class Kind { zero, constant, adversarial };

  Kind kind = Kind::zero;
  Point direction;               ///< for `constant`; normalized on use
  VectorField lyapunov_gradient; ///< for `adversarial`

  static BiasSelection zero() { return {}; }
  static BiasSelection constant(Point dir) {
    BiasSelection s;
    s.kind = Kind::constant;
    s.direction = std::move(dir);
    return s;
  }
  /// b = eps * grad V / ||grad V||, zero where grad V vanishes.
  static BiasSelection adversarial(VectorField grad_v) {
    BiasSelection s;
    s.kind = Kind::adversarial;
    s.lyapunov_gradient = std::move(grad_v);
    return s;
  }

  Point at(const Point &x, double eps) const {
    switch (kind) {
    case Kind::zero:
      return Point::Zero(x.size());
    case Kind::constant: {
      const double n = direction.norm();
      return n > 0.0 ? Point(eps * direction / n) : Point(Point::Zero(x.size()));
    }
    case Kind::adversarial: {
      const Point g = lyapunov_gradient(x);
      const double n = g.norm();
      return n > 0.0 ? Point(eps * g / n) : Point(Point::Zero(x.size()));
    }
    }
    return Point::Zero(x.size());
  }
};

/// Constrained inclusion x' in -(subdifferential + truncated normal cone) + B(0, eps).
struct ConstrainedDrift {
  VectorField subgradient;
  ConvexSet set;
  double normal_bound = 0.0; ///< G
};

/// x' in h(x) + B(0, eps), or the constrained inclusion when `constrained` is set.
struct InclusionSpec {
  VectorField drift;
  std::optional<ConstrainedDrift> constrained;
  double epsilon = 0.0;
  BiasSelection selection;

  /// Unperturbed single-valued field: h(x), or -g(x) for the constrained case.
  Point field(const Point &x) const {
    if (constrained)
      return -constrained->subgradient(x);
    return drift(x);
  }

  void validate() const {
    if (!(epsilon >= 0.0))
      throw ConfigError("inclusion: epsilon must be nonnegative");
    if (!constrained && !drift)
      throw ConfigError("inclusion: drift missing");
  }
};

struct ContinuousTrajectory {
  std::vector<double> times;
  std::vector<Point> states;
  double dt = 0.0;

  const Point &back() const { return states.back(); }
};

namespace detail {

/// One explicit Euler step with bias b; projected for the constrained case.
inline void euler_step(const InclusionSpec &spec, Point &x, double h, const Point &b) {
  if (spec.constrained)
    x = spec.constrained->set.project(x + h * (spec.field(x) + b));
  else
    x += h * (spec.drift(x) + b);
}

inline void guard(const Point &x, double t) {
  if (!x.allFinite() || x.norm() > kDivergenceNorm)
    throw DivergenceError("integration diverged at t = " + std::to_string(t), 0, t);
}

/// Advances x from t0 to t1 in equal substeps no longer than max_dt. When
/// `fixed_bias` is given it replaces the configured selection. Calls
/// `visit(t, x)` after every substep.
template <typename Visit>
void advance(const InclusionSpec &spec, Point &x, double t0, double t1,
             double max_dt, const Point *fixed_bias, Visit &&visit) {
  const double span = t1 - t0;
  if (span <= 0.0)
    return;
  const auto steps = static_cast<std::size_t>(std::ceil(span / max_dt - 1e-9));
  const double h = span / static_cast<double>(std::max<std::size_t>(steps, 1));
  for (std::size_t k = 1; k <= std::max<std::size_t>(steps, 1); ++k) {
    if (fixed_bias)
      euler_step(spec, x, h, *fixed_bias);
    else
      euler_step(spec, x, h, spec.selection.at(x, spec.epsilon));
    const double t = k == steps ? t1 : t0 + static_cast<double>(k) * h;
    guard(x, t);
    visit(t, x);
  }
}

} // namespace detail

/// Explicit (projected) Euler solution on [t0, t0 + horizon] with step dt.
/// `store_every` thins the stored grid; the endpoint is always stored.
inline ContinuousTrajectory integrate(const InclusionSpec &spec, const Point &x0,
                                      double horizon, double dt, double t0 = 0.0,
                                      std::size_t store_every = 1) {
  spec.validate();
  if (!(dt > 0.0))
    throw ConfigError("integrate: dt must be positive");
  if (horizon < 0.0)
    throw ConfigError("integrate: horizon must be nonnegative");
  if (spec.constrained && !spec.constrained->set.contains(x0))
    throw DomainError("integrate: initial point outside the feasible set");
  ContinuousTrajectory tr;
  tr.dt = dt;
  tr.times.push_back(t0);
  tr.states.push_back(x0);
  Point x = x0;
  std::size_t k = 0;
  const double t1 = t0 + horizon;
  detail::advance(spec, x, t0, t1, dt, nullptr, [&](double t, const Point &y) {
    if (++k % store_every == 0 || t == t1) {
      tr.times.push_back(t);
      tr.states.push_back(y);
    }
  });
  return tr;
}

/// (D0 + (T + 1) eps) e^{L (T + 1)}.
inline double solution_growth_bound(double x0_norm, double horizon, double eps,
                                    double lipschitz) {
  if (lipschitz < 0.0 || horizon < 0.0 || eps < 0.0)
    throw DomainError("solution_growth_bound: arguments must be nonnegative");
  return (x0_norm + (horizon + 1.0) * eps) * std::exp(lipschitz * (horizon + 1.0));
}

/// Integrator step used against a trace window ending at step index `last`.
inline double default_comparison_dt(const Trace &tr, std::size_t last) {
  return std::min(tr.alpha(last), 1e-3) / 10.0;
}

/// sup over s in [0, T] of ||Xbar(t_start + s) - x_{t_start}(s)||, where the flow
/// starts at Xbar(t_start). Evaluated on the union of the trace grid and the
/// integrator grid. The logged realized bias is used as a piecewise-constant
/// selection when the trace carries it.
inline double apt_deviation(const Trace &tr, const InclusionSpec &spec,
                            double t_start, double horizon,
                            std::optional<double> dt = std::nullopt) {
  spec.validate();
  const std::size_t N = tr.steps();
  if (N == 0 || t_start < 0.0 || t_start + horizon > tr.time(N))
    throw RangeError("apt_deviation: horizon exceeds the trace");
  const double t_end = t_start + horizon;
  std::size_t n = std::min<std::size_t>(tr.schedule.index_at_time(t_start), N - 1);
  const std::size_t last = std::min<std::size_t>(tr.schedule.index_at_time(t_end), N - 1);
  const double step = dt.value_or(default_comparison_dt(tr, last));
  const bool logged = tr.has_bias();

  Point y = interpolate(tr, t_start);
  double worst = 0.0;
  double tau = t_start;
  for (; n < N && tau < t_end; ++n) {
    const double seg_end = std::min(tr.time(n + 1), t_end);
    const Point xa = tr.points[n];
    const Point xb = tr.points[n + 1];
    const double ta = tr.time(n), tb = tr.time(n + 1);
    const Point bias = logged ? Point(tr.bias[n]) : Point();
    detail::advance(spec, y, tau, seg_end, step, logged ? &bias : nullptr,
                    [&](double t, const Point &state) {
                      const Point xbar = xa + ((t - ta) / (tb - ta)) * (xb - xa);
                      worst = std::max(worst, (xbar - state).norm());
                    });
    tau = seg_end;
  }
  return worst;
}

/// Explicit finite-horizon bound on the distance between the interpolated
/// iterates and the flow started from x_n at t(n).
struct FiniteHorizonCertificate {
  std::size_t n = 0;
  double horizon = 0.0;
  std::size_t m = 0;
  double D = 0.0;
  double lipschitz = 0.0;
  double epsilon = 0.0;
  double C_T = 0.0;
  double step_square_sum = 0.0;
  /// ||sum_{k=0}^{m-1} alpha_{n+k} M_{n+k+1}||, the value used in K_nT.
  double psi_norm = 0.0;
  /// Same sum with upper limit m, reported for comparison.
  double psi_norm_inclusive = 0.0;
  /// max over 1 <= l <= m of the partial sums ||sum_{k<l} alpha_{n+k} M_{n+k+1}||.
  /// The Gronwall step needs every intermediate sum, and the endpoint value
  /// alone can cancel while the path does not.
  double psi_sup = 0.0;
  double K_nT = 0.0;
  double bound = 0.0;
  /// sup_{0 <= i <= m} ||x_{n+i} - x(t(n+i))||.
  double measured = 0.0;

  bool holds() const { return measured <= bound; }

  /// The bound with psi_sup in place of psi_norm.
  double uniform_bound() const {
    return (K_nT - psi_norm + psi_sup) * std::exp(lipschitz * (horizon + 1.0));
  }
  bool holds_uniform() const { return measured <= uniform_bound(); }
};

/// Certificate for a single-valued, globally Lipschitz drift.
/// `D` defaults to the largest iterate norm over the window.
inline FiniteHorizonCertificate
finite_horizon_certificate(const Trace &tr, const InclusionSpec &spec, std::size_t n,
                           double horizon, double lipschitz,
                           std::optional<double> D = std::nullopt,
                           std::optional<double> dt = std::nullopt) {
  spec.validate();
  if (spec.constrained)
    throw CapabilityError("finite_horizon_certificate: needs a single-valued drift");
  if (!tr.has_noise())
    throw CapabilityError("finite_horizon_certificate: trace has no logged noise");
  if (!(horizon > 0.0))
    throw ConfigError("finite_horizon_certificate: horizon must be positive");
  const std::size_t N = tr.steps();
  const std::size_t m = tr.schedule.steps_to_cover(n, horizon);
  if (n + m > N)
    throw RangeError("finite_horizon_certificate: horizon exceeds the trace");

  FiniteHorizonCertificate c;
  c.n = n;
  c.horizon = horizon;
  c.m = m;
  c.lipschitz = lipschitz;
  c.epsilon = spec.epsilon;
  if (D) {
    c.D = *D;
  } else {
    for (std::size_t k = n; k <= n + m; ++k)
      c.D = std::max(c.D, tr.points[k].norm());
  }
  const double growth = std::exp(lipschitz * (horizon + 1.0));
  c.C_T = lipschitz * (c.D + (horizon + 1.0) * c.epsilon) * growth + c.epsilon;

  const Eigen::Index d = tr.points.dimension();
  Point psi = Point::Zero(d);
  for (std::size_t k = 0; k < m; ++k) {
    const double a = tr.alpha(n + k);
    c.step_square_sum += a * a;
    psi += a * tr.noise[n + k];
    c.psi_sup = std::max(c.psi_sup, psi.norm());
  }
  c.psi_norm = psi.norm();
  if (n + m < N)
    c.psi_norm_inclusive = (psi + tr.alpha(n + m) * tr.noise[n + m]).norm();
  else
    c.psi_norm_inclusive = c.psi_norm;

  c.K_nT = lipschitz * c.C_T * c.step_square_sum + 2.0 * c.epsilon * (horizon + 1.0) +
           c.psi_norm;
  c.bound = c.K_nT * growth;

  const double step = dt.value_or(default_comparison_dt(tr, n + m));
  const bool logged = tr.has_bias();
  Point y = tr.points[n];
  for (std::size_t i = 0; i < m; ++i) {
    const Point bias = logged ? Point(tr.bias[n + i]) : Point();
    detail::advance(spec, y, tr.time(n + i), tr.time(n + i + 1), step,
                    logged ? &bias : nullptr, [](double, const Point &) {});
    c.measured = std::max(c.measured, (tr.points[n + i + 1] - y).norm());
  }
  return c;
}

/// sup_{n <= k < N} ||sum_{j=n}^{k} alpha_j M_{j+1}||.
inline double martingale_tail(const Trace &tr, std::size_t n) {
  if (!tr.has_noise())
    throw CapabilityError("martingale_tail: trace has no logged noise");
  const std::size_t N = tr.steps();
  if (n >= N)
    return 0.0;
  Point acc = Point::Zero(tr.points.dimension());
  double worst = 0.0;
  for (std::size_t k = n; k < N; ++k) {
    acc += tr.alpha(k) * tr.noise[k];
    worst = std::max(worst, acc.norm());
  }
  return worst;
}

} // namespace sri
