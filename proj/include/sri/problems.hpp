/// @file
/// @brief Objective functions with gradients, subgradients and reference optima.
#pragma once

#include "sri/core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>

namespace sri {

using ScalarField = std::function<double(const Point &)>;
using VectorField = std::function<Point(const Point &)>;

/// Analytic constants a problem is known to satisfy, when available.
struct ProblemConstants {
  std::optional<double> lipschitz;       // L: gradient Lipschitz constant
  std::optional<double> pl_mu;           // PL constant
  std::optional<double> growth_low;      // r1
  std::optional<double> growth_high;     // r2
  std::optional<double> monotonicity;    // M: strong monotonicity of the subdifferential
  std::optional<double> subgradient_bound; // G
};

/// An objective together with whatever first-order information is known.
///
/// `subgradient` must return the minimum-norm element of the subdifferential.
struct Problem {
  std::string name;
  Eigen::Index dimension = 0;
  ScalarField value;
  VectorField gradient;
  VectorField subgradient;
  double optimum_value = 0.0;
  std::optional<Point> minimizer;
  ProblemConstants constants;

  bool has_gradient() const { return static_cast<bool>(gradient); }
  bool has_subgradient() const {
    return static_cast<bool>(subgradient) || static_cast<bool>(gradient);
  }
  /// Minimum-norm subgradient, falling back to the gradient for smooth f.
  Point subgradient_at(const Point &x) const {
    if (subgradient)
      return subgradient(x);
    if (gradient)
      return gradient(x);
    throw CapabilityError(name + ": no subgradient available");
  }
  double gap(const Point &x) const { return std::abs(value(x) - optimum_value); }
};

namespace problems {

/// Root of 2 t + cos t = 0, the second coordinate of the minimizers of f1, f2.
inline double sin_quadratic_root() {
  double t = -0.45;
  for (int i = 0; i < 60; ++i) {
    const double step = (2.0 * t + std::cos(t)) / (2.0 - std::sin(t));
    t -= step;
    if (std::abs(step) < 1e-17)
      break;
  }
  return t;
}

/// f1(x) = x1^2 + x2^2 + sin(x2). Smooth, PL, unique minimizer.
inline Problem f1() {
  Problem p;
  p.name = "f1";
  p.dimension = 2;
  p.value = [](const Point &x) {
    return x[0] * x[0] + x[1] * x[1] + std::sin(x[1]);
  };
  p.gradient = [](const Point &x) {
    return make_point({2.0 * x[0], 2.0 * x[1] + std::cos(x[1])});
  };
  const double t = sin_quadratic_root();
  p.minimizer = make_point({0.0, t});
  p.optimum_value = t * t + std::sin(t);
  // Hessian diag(2, 2 - sin x2) has spectral norm at most 3.
  p.constants.lipschitz = 3.0;
  return p;
}

/// f2(x) = x1^4 - x1^2 + x2^2 + sin(x2). Two minimizers at x1 = +-1/sqrt(2).
inline Problem f2() {
  Problem p;
  p.name = "f2";
  p.dimension = 2;
  p.value = [](const Point &x) {
    const double a = x[0] * x[0];
    return a * a - a + x[1] * x[1] + std::sin(x[1]);
  };
  p.gradient = [](const Point &x) {
    return make_point({4.0 * x[0] * x[0] * x[0] - 2.0 * x[0],
                       2.0 * x[1] + std::cos(x[1])});
  };
  const double t = sin_quadratic_root();
  p.minimizer = make_point({std::numbers::sqrt2 / 2.0, t});
  p.optimum_value = -0.25 + t * t + std::sin(t);
  return p;
}

/// f(x) = 0.5 x^T A x + b^T x with symmetric A.
inline Problem quadratic(const Eigen::MatrixXd &A, const Point &b) {
  if (A.rows() != A.cols() || A.rows() != b.size())
    throw DomainError("quadratic: shape mismatch");
  const Eigen::MatrixXd S = 0.5 * (A + A.transpose());
  Problem p;
  p.name = "quadratic";
  p.dimension = b.size();
  p.value = [S, b](const Point &x) { return 0.5 * x.dot(S * x) + b.dot(x); };
  p.gradient = [S, b](const Point &x) -> Point { return S * x + b; };
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  const double lo = eig.eigenvalues().minCoeff();
  p.constants.lipschitz = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (lo > 0.0) {
    Point xs = S.ldlt().solve(-b);
    p.minimizer = xs;
    p.optimum_value = 0.5 * xs.dot(S * xs) + b.dot(xs);
    p.constants.pl_mu = lo;
    p.constants.growth_low = 0.5 * lo;
    p.constants.growth_high = 0.5 * eig.eigenvalues().maxCoeff();
    p.constants.monotonicity = lo;
  }
  return p;
}

/// f(x) = ||x||^2.
inline Problem sphere(Eigen::Index d) {
  Problem p = quadratic(2.0 * Eigen::MatrixXd::Identity(d, d), Point::Zero(d));
  p.name = "sphere";
  return p;
}

/// f(x) = <c, x>.
inline Problem linear(const Point &c) {
  Problem p;
  p.name = "linear";
  p.dimension = c.size();
  p.value = [c](const Point &x) { return c.dot(x); };
  p.gradient = [c](const Point &) -> Point { return c; };
  p.constants.lipschitz = 0.0;
  p.constants.monotonicity = 0.0;
  return p;
}

inline Problem constant(Eigen::Index d, double value) {
  Problem p;
  p.name = "constant";
  p.dimension = d;
  p.value = [value](const Point &) { return value; };
  p.gradient = [d](const Point &) -> Point { return Point::Zero(d); };
  p.optimum_value = value;
  p.minimizer = Point::Zero(d);
  return p;
}

/// f(x) = ||x||_1; the subgradient uses 0 at zero coordinates.
inline Problem l1_norm(Eigen::Index d) {
  Problem p;
  p.name = "l1";
  p.dimension = d;
  p.value = [](const Point &x) { return x.lpNorm<1>(); };
  p.subgradient = [](const Point &x) -> Point {
    return x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
  };
  p.minimizer = Point::Zero(d);
  p.optimum_value = 0.0;
  p.constants.monotonicity = 0.0;
  p.constants.subgradient_bound = std::sqrt(static_cast<double>(d));
  return p;
}

/// Published reference values for the two benchmark optima.
inline constexpr double kQuotedF1Optimum = -0.231;
inline constexpr double kQuotedF2Optimum = -0.481;

/// Gradient descent with Armijo backtracking; used to recompute reference optima.
inline Point local_minimize(const Problem &p, Point x, double tol = 1e-13,
                            int max_iter = 100000) {
  if (!p.has_gradient())
    throw CapabilityError(p.name + ": local_minimize needs a gradient");
  double fx = p.value(x);
  for (int it = 0; it < max_iter; ++it) {
    const Point g = p.gradient(x);
    const double gn2 = g.squaredNorm();
    if (std::sqrt(gn2) < tol)
      break;
    double step = 1.0;
    Point y = x - step * g;
    double fy = p.value(y);
    while (fy > fx - 1e-4 * step * gn2 && step > 1e-20) {
      step *= 0.5;
      y = x - step * g;
      fy = p.value(y);
    }
    if (step <= 1e-20)
      break;
    x = y;
    fx = fy;
  }
  return x;
}

} // namespace problems
} // namespace sri
