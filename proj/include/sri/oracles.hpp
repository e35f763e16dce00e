/// @file
/// @brief Noisy zeroth-order oracles, the two-point gradient estimator and
/// biased subgradient oracles, with Monte-Carlo bias/variance measurement.
#pragma once

#include "sri/core.hpp"
#include "sri/problems.hpp"
#include "sri/random.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace sri {

/// Additive Gaussian noise on function evaluations, with a different mean at
/// the plus and minus query points.
struct NoiseSpec {
  double mean_plus = 0.0;
  double mean_minus = 0.0;
  double sigma = 0.0;

  void validate() const {
    if (!(sigma >= 0.0) || !std::isfinite(sigma) || !std::isfinite(mean_plus) ||
        !std::isfinite(mean_minus))
      throw ConfigError("noise: sigma must be >= 0 and all moments finite");
  }
};

enum class Side { plus, minus };

/// Law of the random direction u. Both laws satisfy E[u u^T] = I.
enum class DirectionLaw { gaussian_isotropic, unit_sphere_scaled };

inline const char *to_string(DirectionLaw law) {
  return law == DirectionLaw::gaussian_isotropic ? "gaussian_isotropic"
                                                 : "unit_sphere_scaled";
}

struct ZoEstimatorConfig {
  double lambda = 0.1;
  DirectionLaw direction_law = DirectionLaw::gaussian_isotropic;
  NoiseSpec noise;

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw ConfigError("zo estimator: lambda must be positive");
    noise.validate();
  }
};

/// Bias and second-moment constants of a biased oracle.
///
/// epsilon(lambda) = b1 / lambda + b2 * lambda bounds the conditional bias and
/// b3 / lambda^2 bounds the conditional second moment of the error.
struct BiasModel {
  double b1 = 0.0;
  double b2 = 0.0;
  double b3 = 0.0;

  double epsilon(double lambda) const { return b1 / lambda + b2 * lambda; }
  double second_moment_bound(double lambda) const { return b3 / (lambda * lambda); }

  /// Minimizer of epsilon over lambda > 0. Requires b1, b2 > 0.
  double lambda_star() const {
    if (!(b1 > 0.0 && b2 > 0.0))
      throw DomainError("lambda_star needs b1 > 0 and b2 > 0");
    return std::sqrt(b1 / b2);
  }
  double epsilon_star() const { return 2.0 * std::sqrt(b1 * b2); }
};

/// Smallest envelope b1/lambda + b2*lambda lying above every (lambda, value)
/// pair, in the sense of minimal summed envelope height over the grid.
///
/// This is a two-variable linear program; the optimum sits on a vertex formed
/// by two active constraints (or one constraint and an axis), so all vertices
/// are enumerated.
inline BiasModel fit_bias_envelope(std::span<const double> lambdas,
                                   std::span<const double> values) {
  if (lambdas.size() != values.size() || lambdas.empty())
    throw ConfigError("fit_bias_envelope: need matching nonempty inputs");
  for (double l : lambdas)
    if (!(l > 0.0))
      throw ConfigError("fit_bias_envelope: lambdas must be positive");
  const std::size_t n = lambdas.size();
  auto feasible = [&](double b1, double b2) {
    if (b1 < 0.0 || b2 < 0.0)
      return false;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = b1 / lambdas[i] + b2 * lambdas[i];
      if (e < values[i] * (1.0 - 1e-12) - 1e-300)
        return false;
    }
    return true;
  };
  double inv_sum = 0.0, lam_sum = 0.0;
  for (double l : lambdas) {
    inv_sum += 1.0 / l;
    lam_sum += l;
  }
  auto cost = [&](double b1, double b2) { return b1 * inv_sum + b2 * lam_sum; };

  std::vector<std::pair<double, double>> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    const double vi = std::max(values[i], 0.0);
    candidates.emplace_back(vi * lambdas[i], 0.0);  // b2 = 0 axis
    candidates.emplace_back(0.0, vi / lambdas[i]);  // b1 = 0 axis
    for (std::size_t j = i + 1; j < n; ++j) {
      const double vj = std::max(values[j], 0.0);
      // b1/li + b2 li = vi ; b1/lj + b2 lj = vj
      const double a11 = 1.0 / lambdas[i], a12 = lambdas[i];
      const double a21 = 1.0 / lambdas[j], a22 = lambdas[j];
      const double det = a11 * a22 - a12 * a21;
      if (std::abs(det) < 1e-300)
        continue;
      candidates.emplace_back((vi * a22 - a12 * vj) / det,
                              (a11 * vj - a21 * vi) / det);
    }
  }
  BiasModel best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (auto [b1, b2] : candidates) {
    if (!feasible(b1, b2))
      continue;
    const double c = cost(b1, b2);
    if (c < best_cost) {
      best_cost = c;
      best.b1 = b1;
      best.b2 = b2;
    }
  }
  if (!std::isfinite(best_cost))
    throw ConfigError("fit_bias_envelope: no feasible envelope");
  return best;
}

/// Smallest b3 with b3 / lambda^2 >= moment at every grid point.
inline double fit_second_moment_constant(std::span<const double> lambdas,
                                         std::span<const double> moments) {
  double b3 = 0.0;
  for (std::size_t i = 0; i < lambdas.size(); ++i)
    b3 = std::max(b3, lambdas[i] * lambdas[i] * moments[i]);
  return b3;
}

/// f(x) + e with e ~ N(mean_side, sigma^2).
inline double query_value(const Problem &p, const NoiseSpec &noise, Side side,
                          const Point &x, RandomSource &rng) {
  const double mean = side == Side::plus ? noise.mean_plus : noise.mean_minus;
  const double e = noise.sigma > 0.0 ? rng.normal(mean, noise.sigma) : mean;
  return p.value(x) + e;
}

inline Point draw_direction(DirectionLaw law, Eigen::Index d, RandomSource &rng) {
  if (law == DirectionLaw::gaussian_isotropic)
    return rng.normal_vector(d);
  return std::sqrt(static_cast<double>(d)) * rng.unit_vector(d);
}

/// One realization of the symmetric two-point estimator with its raw inputs.
struct ZoSample {
  Point estimate;
  Point direction;
  double f_plus = 0.0;
  double f_minus = 0.0;
};

/// (f^(x + lambda u) - f^(x - lambda u)) / (2 lambda) * u.
inline ZoSample zo_gradient(const Problem &p, const ZoEstimatorConfig &cfg,
                            const Point &x, RandomSource &rng) {
  cfg.validate();
  ZoSample s;
  s.direction = draw_direction(cfg.direction_law, x.size(), rng);
  s.f_plus = query_value(p, cfg.noise, Side::plus, x + cfg.lambda * s.direction, rng);
  s.f_minus = query_value(p, cfg.noise, Side::minus, x - cfg.lambda * s.direction, rng);
  s.estimate = ((s.f_plus - s.f_minus) / (2.0 * cfg.lambda)) * s.direction;
  return s;
}

namespace detail {

/// Nodes and weights of the K-point Gauss-Hermite rule for the standard
/// normal density (Golub-Welsch on the probabilists' Hermite recurrence).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussHermiteRule gauss_hermite(int K) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(K, K);
  for (int k = 1; k < K; ++k) {
    J(k, k - 1) = std::sqrt(static_cast<double>(k));
    J(k - 1, k) = J(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
  GaussHermiteRule rule;
  for (int k = 0; k < K; ++k) {
    rule.nodes.push_back(eig.eigenvalues()[k]);
    const double v = eig.eigenvectors()(0, k);
    rule.weights.push_back(v * v);
  }
  return rule;
}

inline const GaussHermiteRule &cached_gauss_hermite(int K) {
  static const GaussHermiteRule r24 = gauss_hermite(24);
  static const GaussHermiteRule r12 = gauss_hermite(12);
  return K >= 24 ? r24 : r12;
}

} // namespace detail

/// True when `conditional_mean` can be evaluated by deterministic quadrature.
inline bool conditional_mean_available(const ZoEstimatorConfig &cfg, Eigen::Index d) {
  if (cfg.direction_law == DirectionLaw::gaussian_isotropic)
    return d >= 1 && d <= 3;
  return d >= 1 && d <= 2;
}

/// E[estimate | x], integrating the direction out by quadrature.
///
/// The noise-mean gap contributes (mean_plus - mean_minus)/(2 lambda) E[u],
/// which vanishes for both supported laws, so only the noiseless difference
/// quotient is integrated. Gaussian law: tensor Gauss-Hermite (24 nodes per
/// axis for d <= 2, 12 for d = 3). Scaled-sphere law: exact for d = 1,
/// 512-point trapezoid on the circle for d = 2.
inline Point conditional_mean(const Problem &p, const ZoEstimatorConfig &cfg,
                              const Point &x) {
  cfg.validate();
  const Eigen::Index d = x.size();
  if (!conditional_mean_available(cfg, d))
    throw CapabilityError("conditional_mean: no quadrature for this law/dimension");
  const double lam = cfg.lambda;
  auto quotient = [&](const Point &u) -> Point {
    return ((p.value(x + lam * u) - p.value(x - lam * u)) / (2.0 * lam)) * u;
  };
  Point acc = Point::Zero(d);
  if (cfg.direction_law == DirectionLaw::unit_sphere_scaled) {
    if (d == 1) {
      Point u(1);
      u[0] = 1.0;
      return quotient(u); // u and -u give the same term
    }
    constexpr int K = 512;
    for (int k = 0; k < K; ++k) {
      const double th = 2.0 * std::numbers::pi * k / K;
      acc += quotient(std::numbers::sqrt2 * make_point({std::cos(th), std::sin(th)}));
    }
    return acc / K;
  }
  const auto &rule = detail::cached_gauss_hermite(d <= 2 ? 24 : 12);
  const int K = static_cast<int>(rule.nodes.size());
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Point u(d);
  while (true) {
    double w = 1.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      u[i] = rule.nodes[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
      w *= rule.weights[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    }
    acc += w * quotient(u);
    Eigen::Index i = 0;
    while (i < d && ++idx[static_cast<std::size_t>(i)] == K) {
      idx[static_cast<std::size_t>(i)] = 0;
      ++i;
    }
    if (i == d)
      break;
  }
  return acc;
}

struct BiasMeasurement {
  Point bias;
  /// Radius of the CLT standard error of the mean, sqrt(sum_i var_i / n).
  double standard_error = 0.0;
};

/// Monte-Carlo estimate of E[estimate] - grad f(x).
inline BiasMeasurement measure_bias(const Problem &p, const ZoEstimatorConfig &cfg,
                                    const Point &x, std::size_t samples,
                                    RandomSource &rng) {
  if (!p.has_gradient())
    throw CapabilityError(p.name + ": measure_bias needs the true gradient");
  if (samples < 1000)
    throw ConfigError("measure_bias: at least 1000 samples required");
  const Eigen::Index d = x.size();
  Point mean = Point::Zero(d);
  Point m2 = Point::Zero(d);
  for (std::size_t k = 1; k <= samples; ++k) {
    const Point e = zo_gradient(p, cfg, x, rng).estimate;
    const Point delta = e - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta.cwiseProduct(e - mean);
  }
  const double n = static_cast<double>(samples);
  BiasMeasurement out;
  out.bias = mean - p.gradient(x);
  out.standard_error = std::sqrt((m2 / (n - 1.0)).sum() / n);
  return out;
}

struct MomentMeasurement {
  double value = 0.0;
  double standard_error = 0.0;
};

/// Monte-Carlo estimate of E[||estimate - grad f(x)||^2].
inline MomentMeasurement measure_second_moment(const Problem &p,
                                               const ZoEstimatorConfig &cfg,
                                               const Point &x, std::size_t samples,
                                               RandomSource &rng) {
  if (!p.has_gradient())
    throw CapabilityError(p.name + ": measure_second_moment needs the true gradient");
  if (samples < 1000)
    throw ConfigError("measure_second_moment: at least 1000 samples required");
  const Point g = p.gradient(x);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t k = 1; k <= samples; ++k) {
    const double v = (zo_gradient(p, cfg, x, rng).estimate - g).squaredNorm();
    const double delta = v - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (v - mean);
  }
  const double n = static_cast<double>(samples);
  return {mean, std::sqrt(m2 / (n - 1.0) / n)};
}

/// Direction of the deterministic bias term of `biased_subgradient`.
enum class BiasDirection {
  fixed_axis,  ///< +e1 scaled to the bound
  adversarial, ///< -g / ||g|| scaled to the bound (e1 when g = 0)
};

struct SubgradientSample {
  Point value;       ///< g + B + M, the oracle output
  Point subgradient; ///< g, the minimum-norm subgradient element
  Point bias;        ///< B, with ||B|| = epsilon(lambda)
  Point noise;       ///< M, zero-mean Gaussian with E||M||^2 = b3 / lambda^2
};

inline SubgradientSample biased_subgradient(const Problem &p, const BiasModel &bm,
                                            double lambda, const Point &x,
                                            RandomSource &rng,
                                            BiasDirection mode = BiasDirection::fixed_axis) {
  if (!p.has_subgradient())
    throw CapabilityError(p.name + ": biased_subgradient needs a subgradient");
  if (!(lambda > 0.0))
    throw ConfigError("biased_subgradient: lambda must be positive");
  const Eigen::Index d = x.size();
  SubgradientSample s;
  s.subgradient = p.subgradient_at(x);
  const double eps = bm.epsilon(lambda);
  Point dir = Point::Zero(d);
  dir[0] = 1.0;
  if (mode == BiasDirection::adversarial) {
    const double gn = s.subgradient.norm();
    if (gn > 0.0)
      dir = -s.subgradient / gn;
  }
  s.bias = eps * dir;
  const double sd = std::sqrt(bm.second_moment_bound(lambda) / static_cast<double>(d));
  s.noise = sd > 0.0 ? Point(sd * rng.normal_vector(d)) : Point(Point::Zero(d));
  s.value = s.subgradient + s.bias + s.noise;
  return s;
}

} // namespace sri
