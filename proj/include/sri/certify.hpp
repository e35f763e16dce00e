/// @file
/// @brief Sampling-based numerical checks of the stability, regularity and
/// noise assumptions, producing reproducible witnesses on failure.
///
/// Verdicts are evidence gathered on finitely many samples. A `pass` means the
/// inequality held at every sample; a `fail` carries the worst violating
/// points, refined by a local pattern search on the margin.
#pragma once

#include "sri/core.hpp"
#include "sri/dynamics.hpp"
#include "sri/geometry.hpp"
#include "sri/oracles.hpp"
#include "sri/problems.hpp"
#include "sri/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace sri {

struct LyapunovSpec {
  ScalarField V;
  VectorField gradient;
  std::function<double(double)> a_fn; ///< class-K-infinity decay rate a(.)
  std::function<double(double)> b_fn; ///< class-K-infinity gain b(.)
  double a_low = 0.0;
  double a_high = 0.0;
};

/// V(x) = 0.5 ||x - c||^2 with a(r) = r^2 / 2, b(e) = e^2 / 2.
inline LyapunovSpec half_squared_norm(Eigen::Index d, Point center = Point()) {
  if (center.size() == 0)
    center = Point::Zero(d);
  LyapunovSpec L;
  L.V = [center](const Point &x) { return 0.5 * (x - center).squaredNorm(); };
  L.gradient = [center](const Point &x) -> Point { return x - center; };
  L.a_fn = [](double r) { return 0.5 * r * r; };
  L.b_fn = [](double e) { return 0.5 * e * e; };
  L.a_low = 0.5;
  L.a_high = 0.5;
  return L;
}

enum class Verdict { pass, fail };

struct AssumptionReport {
  std::string assumption;
  Verdict verdict = Verdict::pass;
  std::size_t samples_checked = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::vector<Point> witness;
  std::vector<double> witness_margin;
  std::string note;

  bool passed() const { return verdict == Verdict::pass; }

  std::string summary() const {
    return assumption + ": " + (passed() ? "numerically consistent" : "violated") +
           " on " + std::to_string(samples_checked) + " samples";
  }
};

inline void to_json(nlohmann::json &j, const AssumptionReport &r) {
  nlohmann::json w = nlohmann::json::array();
  for (std::size_t i = 0; i < r.witness.size(); ++i) {
    w.push_back({{"point", std::vector<double>(r.witness[i].data(),
                                                r.witness[i].data() + r.witness[i].size())},
                 {"margin", r.witness_margin[i]}});
  }
  j = nlohmann::json{{"assumption", r.assumption},
                     {"verdict", r.passed() ? "pass" : "fail"},
                     {"samples_checked", r.samples_checked},
                     {"worst_margin", std::isfinite(r.worst_margin)
                                          ? nlohmann::json(r.worst_margin)
                                          : nlohmann::json(nullptr)},
                     {"witness", w},
                     {"summary", r.summary()}};
  if (!r.note.empty())
    j["note"] = r.note;
}

/// Where and how densely to sample.
///
/// Points are a deterministic radial-shell grid (radii log-spaced in
/// [min_radius, radius], low-discrepancy directions) plus uniform random points
/// in the ball of `radius` around `center`.
struct SamplingPlan {
  Eigen::Index dimension = 1;
  double radius = 1.0;
  double min_radius = 1e-3;
  std::size_t shells = 12;
  std::size_t directions = 64;
  std::size_t random_points = 1000;
  std::uint64_t seed = 0;
  Point center;

  Point origin() const { return center.size() ? center : Point(Point::Zero(dimension)); }
};

namespace detail {

inline double radical_inverse(std::size_t index, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

inline unsigned nth_prime(std::size_t k) {
  static const unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37,
                                    41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};
  return primes[k % std::size(primes)];
}

/// Halton points pushed through Box-Muller and normalized.
inline std::vector<Point> halton_directions(Eigen::Index d, std::size_t count) {
  std::vector<Point> dirs;
  if (d == 1) {
    for (std::size_t i = 0; i < std::max<std::size_t>(count, 2); ++i)
      dirs.push_back(Point::Constant(1, i % 2 == 0 ? 1.0 : -1.0));
    return dirs;
  }
  const auto pairs = static_cast<std::size_t>((d + 1) / 2);
  for (std::size_t i = 1; dirs.size() < count; ++i) {
    Point z(2 * static_cast<Eigen::Index>(pairs));
    for (std::size_t k = 0; k < pairs; ++k) {
      const double u1 = radical_inverse(i, nth_prime(2 * k));
      const double u2 = radical_inverse(i, nth_prime(2 * k + 1));
      const double r = std::sqrt(-2.0 * std::log(std::max(u1, 1e-300)));
      z[static_cast<Eigen::Index>(2 * k)] = r * std::cos(2.0 * std::numbers::pi * u2);
      z[static_cast<Eigen::Index>(2 * k + 1)] = r * std::sin(2.0 * std::numbers::pi * u2);
    }
    Point u = z.head(d);
    const double n = u.norm();
    if (n > 1e-12)
      dirs.push_back(u / n);
  }
  return dirs;
}

/// Minimizes `margin` from `x` by compass search with halving steps.
inline Point refine_witness(const std::function<double(const Point &)> &margin, Point x,
                            double step, const std::function<Point(const Point &)> &clamp) {
  double best = margin(x);
  const Eigen::Index d = x.size();
  while (step > 1e-10) {
    bool improved = false;
    for (Eigen::Index i = 0; i < d; ++i) {
      for (double s : {step, -step}) {
        Point y = x;
        y[i] += s;
        y = clamp(y);
        const double m = margin(y);
        if (m < best) {
          best = m;
          x = y;
          improved = true;
        }
      }
    }
    if (!improved)
      step *= 0.5;
  }
  return x;
}

/// Shared driver: evaluates `margin` at every point, reports the worst ones.
///
/// With a positive `refine_step`, a clean sample is not the end: compass
/// search is run from up to `probes` low-margin points that are at least
/// `10 * refine_step` apart, so that narrow violation basins between sample
/// points are still found.
inline AssumptionReport evaluate_margins(
    std::string name, const std::vector<Point> &points,
    const std::function<double(const Point &)> &margin, double tolerance,
    double refine_step, const std::function<Point(const Point &)> &clamp,
    std::size_t max_witnesses = 3, std::size_t probes = 8) {
  AssumptionReport r;
  r.assumption = std::move(name);
  r.samples_checked = points.size();
  std::vector<std::pair<double, std::size_t>> bad, all;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double m = margin(points[i]);
    r.worst_margin = std::min(r.worst_margin, m);
    all.emplace_back(m, i);
    if (m < -tolerance)
      bad.emplace_back(m, i);
  }
  if (bad.empty() && refine_step > 0.0) {
    std::sort(all.begin(), all.end());
    std::vector<Point> starts;
    for (const auto &[m, i] : all) {
      if (starts.size() >= probes)
        break;
      const Point &x = points[i];
      bool far = true;
      for (const auto &s : starts)
        far = far && (s - x).norm() >= 10.0 * refine_step;
      if (!far)
        continue;
      starts.push_back(x);
      const Point y = refine_witness(margin, x, refine_step, clamp);
      const double my = margin(y);
      r.worst_margin = std::min(r.worst_margin, my);
      if (my < -tolerance) {
        r.verdict = Verdict::fail;
        r.witness.push_back(y);
        r.witness_margin.push_back(my);
      }
    }
    return r;
  }
  if (bad.empty())
    return r;
  r.verdict = Verdict::fail;
  std::sort(bad.begin(), bad.end());
  for (std::size_t k = 0; k < bad.size() && k < max_witnesses; ++k) {
    Point w = points[bad[k].second];
    if (k == 0 && refine_step > 0.0)
      w = refine_witness(margin, w, refine_step, clamp);
    const double m = margin(w);
    r.witness.push_back(w);
    r.witness_margin.push_back(m);
    r.worst_margin = std::min(r.worst_margin, m);
  }
  return r;
}

} // namespace detail

/// Sample points described by a plan.
inline std::vector<Point> sample_points(const SamplingPlan &plan) {
  const Eigen::Index d = plan.dimension;
  const Point c = plan.origin();
  std::vector<Point> pts;
  pts.push_back(c);
  const auto dirs = detail::halton_directions(d, plan.directions);
  const double lo = std::min(plan.min_radius, plan.radius);
  for (std::size_t s = 0; s < plan.shells; ++s) {
    const double frac = plan.shells > 1 ? static_cast<double>(s) / (plan.shells - 1) : 1.0;
    const double r = lo * std::pow(plan.radius / lo, frac);
    for (const auto &u : dirs)
      pts.push_back(c + r * u);
  }
  RandomSource rng(plan.seed, {0xce27ULL});
  for (std::size_t i = 0; i < plan.random_points; ++i)
    pts.push_back(c + rng.in_ball(d, plan.radius));
  return pts;
}

namespace detail {
inline std::function<Point(const Point &)> ball_clamp(const SamplingPlan &plan) {
  const Point c = plan.origin();
  const double R = plan.radius;
  return [c, R](const Point &y) -> Point {
    const Point r = y - c;
    const double n = r.norm();
    return n <= R ? y : Point(c + (R / n) * r);
  };
}
} // namespace detail

/// <grad V(x), nu + b> <= -a(||x - c||) + b_fn(eps) for every selection nu of H(x),
/// with b the adversarial element eps * grad V / ||grad V||.
inline AssumptionReport check_iss_dissipation(const LyapunovSpec &L,
                                              std::span<const VectorField> selections,
                                              double eps, const SamplingPlan &plan) {
  const Point c = plan.origin();
  auto margin = [&](const Point &x) {
    const Point g = L.gradient(x);
    const double gn = g.norm();
    double lhs = -std::numeric_limits<double>::infinity();
    for (const auto &h : selections)
      lhs = std::max(lhs, g.dot(h(x)) + eps * gn);
    const double rhs = -L.a_fn((x - c).norm()) + L.b_fn(eps);
    return rhs - lhs;
  };
  return detail::evaluate_margins("iss_dissipation", sample_points(plan), margin, 1e-12,
                                  plan.radius / 20.0, detail::ball_clamp(plan));
}

inline AssumptionReport check_iss_dissipation(const LyapunovSpec &L,
                                              const InclusionSpec &spec,
                                              const SamplingPlan &plan) {
  const VectorField h = [&spec](const Point &x) { return spec.field(x); };
  return check_iss_dissipation(L, std::span<const VectorField>(&h, 1), spec.epsilon, plan);
}

/// a_low ||x - c||^2 <= V(x) <= a_high ||x - c||^2.
inline AssumptionReport check_quadratic_sandwich(const LyapunovSpec &L,
                                                 const SamplingPlan &plan) {
  const Point c = plan.origin();
  auto margin = [&](const Point &x) {
    const double r2 = (x - c).squaredNorm();
    const double v = L.V(x);
    // Relative form so that growth-order failures show near 0 as well as far out.
    const double scale = std::max(r2, 1e-300);
    return std::min(v - L.a_low * r2, L.a_high * r2 - v) / scale;
  };
  return detail::evaluate_margins("quadratic_sandwich", sample_points(plan), margin, 1e-12,
                                  0.0, detail::ball_clamp(plan));
}

/// Sampled min/max of V(x) / ||x - c||^2 shrunk/expanded by `slack`.
inline std::pair<double, double> fit_quadratic_sandwich(const ScalarField &V,
                                                        const SamplingPlan &plan,
                                                        double slack = 0.05) {
  const Point c = plan.origin();
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto &x : sample_points(plan)) {
    const double r2 = (x - c).squaredNorm();
    if (r2 < 1e-12)
      continue;
    lo = std::min(lo, V(x) / r2);
    hi = std::max(hi, V(x) / r2);
  }
  return {lo * (1.0 - slack), hi * (1.0 + slack)};
}

/// Lower estimate of the Lipschitz constant of `field` over the sampling ball.
/// Pairs mix independent points with close pairs at log-spaced separations.
inline double estimate_lipschitz(const VectorField &field, const SamplingPlan &plan,
                                 std::size_t pairs) {
  RandomSource rng(plan.seed, {0x11b5ULL});
  const auto clamp = detail::ball_clamp(plan);
  const Point c = plan.origin();
  double best = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const Point x = c + rng.in_ball(plan.dimension, plan.radius);
    Point y;
    if (i % 2 == 0) {
      y = c + rng.in_ball(plan.dimension, plan.radius);
    } else {
      const double sep = plan.radius * std::pow(10.0, rng.uniform(-5.0, 0.0));
      y = clamp(x + sep * rng.unit_vector(plan.dimension));
    }
    const double dx = (x - y).norm();
    if (dx < 1e-12)
      continue;
    best = std::max(best, (field(x) - field(y)).norm() / dx);
  }
  return best;
}

/// 0.5 ||grad f||^2 >= mu (f - f*).
inline AssumptionReport check_pl(const Problem &p, double mu, const SamplingPlan &plan) {
  if (!p.has_gradient())
    throw CapabilityError(p.name + ": check_pl needs a gradient");
  auto margin = [&](const Point &x) {
    return 0.5 * p.gradient(x).squaredNorm() - mu * (p.value(x) - p.optimum_value);
  };
  return detail::evaluate_margins("polyak_lojasiewicz", sample_points(plan), margin, 1e-12,
                                  plan.radius / 20.0, detail::ball_clamp(plan));
}

/// Sampled min of 0.5 ||grad f||^2 / (f - f*), shrunk by `slack`.
inline double fit_pl_mu(const Problem &p, const SamplingPlan &plan, double slack = 0.05) {
  double mu = std::numeric_limits<double>::infinity();
  for (const auto &x : sample_points(plan)) {
    const double gap = p.value(x) - p.optimum_value;
    if (gap < 1e-8)
      continue;
    mu = std::min(mu, 0.5 * p.gradient(x).squaredNorm() / gap);
  }
  return mu * (1.0 - slack);
}

/// r1 ||x - x*||^2 <= f(x) - f(x*) <= r2 ||x - x*||^2 (relative margins).
inline AssumptionReport check_quadratic_growth(const Problem &p, double r1, double r2,
                                               const SamplingPlan &plan) {
  if (!p.minimizer)
    throw CapabilityError(p.name + ": check_quadratic_growth needs the minimizer");
  const Point xs = *p.minimizer;
  const double fs = p.value(xs);
  auto margin = [&, xs, fs](const Point &x) {
    const double d2 = (x - xs).squaredNorm();
    if (d2 < 1e-14)
      return 0.0;
    const double gap = p.value(x) - fs;
    return std::min(gap - r1 * d2, r2 * d2 - gap) / d2;
  };
  return detail::evaluate_margins("quadratic_growth", sample_points(plan), margin, 1e-12,
                                  plan.radius / 20.0, detail::ball_clamp(plan));
}

inline std::pair<double, double> fit_quadratic_growth(const Problem &p,
                                                      const SamplingPlan &plan,
                                                      double slack = 0.05) {
  if (!p.minimizer)
    throw CapabilityError(p.name + ": fit_quadratic_growth needs the minimizer");
  const Point xs = *p.minimizer;
  const double fs = p.value(xs);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto &x : sample_points(plan)) {
    const double d2 = (x - xs).squaredNorm();
    if (d2 < 1e-8)
      continue;
    const double q = (p.value(x) - fs) / d2;
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  return {lo * (1.0 - slack), hi * (1.0 + slack)};
}

/// <g(x) - g(y), x - y> >= M ||x - y||^2 over sampled pairs, with minimum-norm
/// subgradients. Each pair is encoded as one point of R^{2d} for witness output.
inline AssumptionReport check_strong_monotonicity(const Problem &p, double M,
                                                  const SamplingPlan &plan,
                                                  std::size_t pairs,
                                                  const ConvexSet *domain = nullptr) {
  const Eigen::Index d = plan.dimension;
  RandomSource rng(plan.seed, {0x5a0aULL});
  std::vector<Point> encoded;
  auto draw = [&]() -> Point {
    return domain ? domain->sample(rng) : Point(plan.origin() + rng.in_ball(d, plan.radius));
  };
  for (std::size_t i = 0; i < pairs; ++i) {
    const Point x = draw();
    Point y = draw();
    if (i % 2 == 1) {
      // close pair in the same neighbourhood
      const double sep = plan.radius * std::pow(10.0, rng.uniform(-4.0, -1.0));
      y = x + sep * rng.unit_vector(d);
      if (domain)
        y = domain->project(y);
    }
    Point z(2 * d);
    z << x, y;
    encoded.push_back(z);
  }
  auto margin = [&p, M, d](const Point &z) {
    const Point x = z.head(d), y = z.tail(d);
    const double d2 = (x - y).squaredNorm();
    if (d2 < 1e-20)
      return 0.0;
    return ((p.subgradient_at(x) - p.subgradient_at(y)).dot(x - y) - M * d2) / d2;
  };
  return detail::evaluate_margins("strong_monotonicity", encoded, margin, 1e-12, 0.0,
                                  [](const Point &z) { return z; });
}

/// sup_{nu in H(x)} ||nu|| <= kappa (1 + ||x||) over the given extreme selections.
inline AssumptionReport check_marchaud_growth(std::span<const VectorField> selections,
                                              double kappa, const SamplingPlan &plan) {
  auto margin = [&](const Point &x) {
    double sup = 0.0;
    for (const auto &h : selections)
      sup = std::max(sup, h(x).norm());
    return kappa * (1.0 + x.norm()) - sup;
  };
  auto r = detail::evaluate_margins("marchaud_linear_growth", sample_points(plan), margin,
                                    1e-12, 0.0, detail::ball_clamp(plan));
  r.note = "compact convex values and closed graph hold structurally for "
           "single-valued continuous fields and subdifferential-plus-cone sums";
  return r;
}

/// Draws one realization of the martingale-difference term at x.
using NoiseSampler = std::function<Point(const Point &, RandomSource &)>;

/// Noise of the two-point estimator: estimate - E[estimate | x].
inline NoiseSampler zo_noise_sampler(const Problem &p, const ZoEstimatorConfig &cfg) {
  return [p, cfg](const Point &x, RandomSource &rng) -> Point {
    return zo_gradient(p, cfg, x, rng).estimate - conditional_mean(p, cfg, x);
  };
}

/// E[||M||^2 | x] <= K at every point, with a 3-standard-error slack.
///
/// Each point is measured with `draws` and again with 2 * `draws` samples. The
/// second moment is flagged unstable (heavy-tailed) and the check fails when
/// the two estimates differ by more than 6 standard errors, or when a single
/// draw carries more than `kHeavyTailShare` of its sample's total.
inline constexpr double kHeavyTailShare = 0.1;

inline AssumptionReport check_noise_moment(const NoiseSampler &noise, double K,
                                           std::span<const Point> points,
                                           std::size_t draws, std::uint64_t seed = 0) {
  AssumptionReport r;
  r.assumption = "noise_second_moment";
  r.samples_checked = points.size();
  std::vector<std::pair<double, Point>> bad;
  bool unstable = false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    RandomSource rng(seed, {0x2013ULL, i});
    double largest_share = 0.0;
    auto estimate = [&](std::size_t n) {
      double mean = 0.0, m2 = 0.0, top = 0.0;
      for (std::size_t k = 1; k <= n; ++k) {
        const double v = noise(points[i], rng).squaredNorm();
        top = std::max(top, v);
        const double delta = v - mean;
        mean += delta / static_cast<double>(k);
        m2 += delta * (v - mean);
      }
      if (mean > 0.0)
        largest_share = std::max(largest_share, top / (mean * static_cast<double>(n)));
      const double se = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
      return std::pair{mean, se};
    };
    const auto [m1, se1] = estimate(draws);
    const auto [m2v, se2] = estimate(2 * draws);
    const double slack = 3.0 * se2;
    const double margin = K + slack - m2v;
    r.worst_margin = std::min(r.worst_margin, margin);
    if (std::abs(m2v - m1) > 6.0 * std::hypot(se1, se2) + 1e-12 * (1.0 + m1) ||
        largest_share > kHeavyTailShare) {
      unstable = true;
      bad.emplace_back(-std::abs(m2v - m1), points[i]);
    } else if (margin < 0.0) {
      bad.emplace_back(margin, points[i]);
    }
  }
  if (!bad.empty()) {
    r.verdict = Verdict::fail;
    std::sort(bad.begin(), bad.end(),
              [](const auto &a, const auto &b) { return a.first < b.first; });
    for (std::size_t k = 0; k < bad.size() && k < 3; ++k) {
      r.witness.push_back(bad[k].second);
      r.witness_margin.push_back(bad[k].first);
    }
  }
  if (unstable)
    r.note = "second-moment estimate unstable under sample-size doubling";
  return r;
}

/// x* of min f over S by projected (sub)gradient descent on the noiseless problem.
inline Point projected_minimizer(const Problem &p, const ConvexSet &S, Point x0,
                                 double step = 1e-2, std::size_t iterations = 200000) {
  Point x = S.project(x0);
  for (std::size_t k = 0; k < iterations; ++k) {
    const Point y = S.project(x - step * p.subgradient_at(x));
    const double move = (y - x).norm();
    x = y;
    if (move < 1e-15)
      break;
  }
  return x;
}

/// Lyapunov decrease of the projected inclusion with V = 0.5 ||x - x*||^2:
/// <x - x*, -g - eta + b> <= -(M - 1/(2 alpha)) ||x - x*||^2 + (alpha/2) eps^2
/// with alpha = 1/M, g the minimum-norm subgradient, b = eps (x - x*)/||x - x*||
/// and eta = P_{N(x)}(-g + b) the realized normal-cone element.
inline AssumptionReport check_iss_constrained(const Problem &p, const ConvexSet &S,
                                              double M, double eps, std::size_t samples,
                                              std::uint64_t seed = 0,
                                              std::optional<Point> minimizer = std::nullopt) {
  const Eigen::Index d = S.dimension();
  const Point xs = minimizer ? *minimizer
                             : projected_minimizer(p, S, S.project(Point::Zero(d)));
  RandomSource rng(seed, {0x1554ULL});
  std::vector<Point> pts{xs};
  for (std::size_t i = 0; i < samples; ++i)
    pts.push_back(i % 3 == 0 ? S.sample_boundary(rng) : S.sample(rng));

  auto lhs_at = [&](const Point &x) {
    const Point r = x - xs;
    const double rn = r.norm();
    const Point b = rn > 0.0 ? Point(eps * r / rn) : Point(Point::Zero(d));
    const Point g = p.subgradient_at(x);
    const Point eta = S.normal_cone_project(x, -g + b);
    return r.dot(-g - eta + b);
  };

  if (!(M > 0.0)) {
    // Without strong monotonicity the decrease coefficient -(M - 1/(2 alpha)) is
    // positive for every alpha > 0, so no ISS decrease estimate exists.
    AssumptionReport r;
    r.assumption = "iss_constrained";
    r.verdict = Verdict::fail;
    r.samples_checked = pts.size();
    r.worst_margin = M;
    std::size_t worst = 0;
    double worst_lhs = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double l = lhs_at(pts[i]);
      if ((pts[i] - xs).norm() > 1e-9 && l > worst_lhs) {
        worst_lhs = l;
        worst = i;
      }
    }
    r.witness.push_back(pts[worst]);
    r.witness_margin.push_back(M);
    r.note = "monotonicity constant must be positive; no negative-definite term";
    return r;
  }
  const double alpha = 1.0 / M;
  auto margin = [&](const Point &x) {
    const double r2 = (x - xs).squaredNorm();
    const double rhs = -(M - 1.0 / (2.0 * alpha)) * r2 + 0.5 * alpha * eps * eps;
    const double lhs = lhs_at(x);
    return rhs - lhs;
  };
  return detail::evaluate_margins("iss_constrained", pts, margin, 1e-10, 0.0,
                                  [&S](const Point &x) { return S.project(x); });
}

} // namespace sri
