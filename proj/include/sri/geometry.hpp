/// @file
/// @brief Compact convex sets with exact projections onto the set and onto its
/// normal and tangent cones.
#pragma once

#include "sri/core.hpp"
#include "sri/random.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

namespace sri {

/// Tolerance for membership and active-constraint detection.
inline constexpr double kBoundaryTol = 1e-9;

struct Box {
  Point lo;
  Point hi;
};

struct Ball {
  Point center;
  double radius = 1.0;
};

/// Solid simplex {x >= 0, sum(x) <= scale}.
struct Simplex {
  Eigen::Index dimension = 1;
  double scale = 1.0;
};

/// Nonempty compact convex set: a box, a Euclidean ball or a solid simplex.
class ConvexSet {
public:
  using Variant = std::variant<Box, Ball, Simplex>;

  static ConvexSet box(Point lo, Point hi) {
    if (lo.size() != hi.size() || lo.size() < 1)
      throw ConfigError("box: bounds must have equal positive dimension");
    if (!(lo.array() < hi.array()).all() || !lo.allFinite() || !hi.allFinite())
      throw ConfigError("box: need finite lo < hi coordinate-wise");
    return ConvexSet(Box{std::move(lo), std::move(hi)});
  }

  static ConvexSet ball(Point center, double radius) {
    if (center.size() < 1 || !center.allFinite())
      throw ConfigError("ball: center must be a finite point");
    if (!(radius > 0.0) || !std::isfinite(radius))
      throw ConfigError("ball: radius must be positive");
    return ConvexSet(Ball{std::move(center), radius});
  }

  static ConvexSet simplex(Eigen::Index d, double scale) {
    if (d < 1)
      throw ConfigError("simplex: dimension must be >= 1");
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw ConfigError("simplex: scale must be positive");
    return ConvexSet(Simplex{d, scale});
  }

  const Variant &variant() const { return set_; }

  std::string kind() const {
    return std::visit(
        [](const auto &s) -> std::string {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Box>)
            return "box";
          else if constexpr (std::is_same_v<T, Ball>)
            return "ball";
          else
            return "simplex";
        },
        set_);
  }

  Eigen::Index dimension() const {
    return std::visit(
        [](const auto &s) -> Eigen::Index {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Box>)
            return s.lo.size();
          else if constexpr (std::is_same_v<T, Ball>)
            return s.center.size();
          else
            return s.dimension;
        },
        set_);
  }

  bool contains(const Point &x, double tol = kBoundaryTol) const {
    check_dim(x);
    return std::visit(
        [&](const auto &s) -> bool {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Box>)
            return ((x - s.lo).array() >= -tol).all() && ((s.hi - x).array() >= -tol).all();
          else if constexpr (std::is_same_v<T, Ball>)
            return (x - s.center).norm() <= s.radius + tol;
          else
            return (x.array() >= -tol).all() && x.sum() <= s.scale + tol;
        },
        set_);
  }

  /// Euclidean projection.
  Point project(const Point &v) const {
    check_dim(v);
    return std::visit(
        [&](const auto &s) -> Point {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Box>) {
            return v.cwiseMax(s.lo).cwiseMin(s.hi);
          } else if constexpr (std::is_same_v<T, Ball>) {
            const Point r = v - s.center;
            const double n = r.norm();
            if (n <= s.radius)
              return v;
            return s.center + (s.radius / n) * r;
          } else {
            const Point w = v.cwiseMax(0.0);
            if (w.sum() <= s.scale)
              return w;
            return project_onto_face(v, s.scale);
          }
        },
        set_);
  }

  /// Projection of v onto the normal cone N(x); zero at interior points.
  Point normal_cone_project(const Point &x, const Point &v) const {
    check_dim(x);
    check_dim(v);
    if (!contains(x))
      throw DomainError("normal_cone_project: base point is not in the set");
    return std::visit(
        [&](const auto &s) -> Point {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Box>) {
            Point out = Point::Zero(v.size());
            for (Eigen::Index i = 0; i < v.size(); ++i) {
              if (x[i] >= s.hi[i] - kBoundaryTol)
                out[i] = std::max(v[i], 0.0);
              else if (x[i] <= s.lo[i] + kBoundaryTol)
                out[i] = std::min(v[i], 0.0);
            }
            return out;
          } else if constexpr (std::is_same_v<T, Ball>) {
            const Point r = x - s.center;
            const double n = r.norm();
            if (n < s.radius - kBoundaryTol)
              return Point::Zero(v.size());
            const Point unit = r / n;
            return std::max(v.dot(unit), 0.0) * unit;
          } else {
            return simplex_normal_project(x, v, s.scale);
          }
        },
        set_);
  }

  /// Projection onto the tangent cone, v - normal_cone_project(x, v).
  Point tangent_cone_project(const Point &x, const Point &v) const {
    return v - normal_cone_project(x, v);
  }

  /// True iff nu lies in N(x) up to the boundary tolerance.
  bool in_normal_cone(const Point &x, const Point &nu) const {
    const Point p = normal_cone_project(x, nu);
    return (p - nu).norm() <= kBoundaryTol * std::max(1.0, nu.norm());
  }

  /// Membership in the truncated normal cone {nu in N(x) : ||nu|| <= G}.
  bool truncated_normal_membership(const Point &x, const Point &nu, double G) const {
    return in_normal_cone(x, nu) && nu.norm() <= G + kBoundaryTol;
  }

  /// A point of the set: uniform for boxes and balls; for simplices, uniform on
  /// the solid simplex via sorted uniform spacings.
  Point sample(RandomSource &rng) const {
    return std::visit(
        [&](const auto &s) -> Point {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Box>) {
            Point x(s.lo.size());
            for (Eigen::Index i = 0; i < x.size(); ++i)
              x[i] = rng.uniform(s.lo[i], s.hi[i]);
            return x;
          } else if constexpr (std::is_same_v<T, Ball>) {
            return s.center + rng.in_ball(s.center.size(), s.radius);
          } else {
            const auto d = static_cast<std::size_t>(s.dimension);
            std::vector<double> c(d + 1);
            for (auto &e : c)
              e = -std::log(1.0 - rng.uniform());
            const double total = std::accumulate(c.begin(), c.end(), 0.0);
            Point x(s.dimension);
            for (std::size_t i = 0; i < d; ++i)
              x[static_cast<Eigen::Index>(i)] = s.scale * c[i] / total;
            return x;
          }
        },
        set_);
  }

  /// A point on the boundary: the projection of a point drawn far outside.
  Point sample_boundary(RandomSource &rng) const {
    const Eigen::Index d = dimension();
    const Point anchor = sample(rng);
    return project(anchor + 10.0 * extent() * rng.unit_vector(d));
  }

  double extent() const {
    return std::visit(
        [](const auto &s) -> double {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Box>)
            return (s.hi - s.lo).norm();
          else if constexpr (std::is_same_v<T, Ball>)
            return 2.0 * s.radius;
          else
            return s.scale * std::sqrt(2.0);
        },
        set_);
  }

private:
  explicit ConvexSet(Variant v) : set_(std::move(v)) {}

  void check_dim(const Point &v) const {
    if (v.size() != dimension())
      throw DomainError("convex set: dimension mismatch");
  }

  /// Projection onto {x >= 0, sum(x) = scale} by the sort-and-threshold rule.
  static Point project_onto_face(const Point &v, double scale) {
    std::vector<double> u(v.data(), v.data() + v.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
      cum += u[j];
      const double t = (cum - scale) / static_cast<double>(j + 1);
      if (u[j] - t > 0.0)
        theta = t;
    }
    return (v.array() - theta).max(0.0).matrix();
  }

  /// Normal cone of the solid simplex at x is
  /// {t * 1 - w : t >= 0 if sum(x) = scale else t = 0, w >= 0, w_i = 0 if x_i > 0}.
  /// For fixed t the best w is explicit, leaving a convex piecewise quadratic
  /// in t whose minimizer is found by scanning breakpoints.
  static Point simplex_normal_project(const Point &x, const Point &v, double scale) {
    const Eigen::Index d = x.size();
    std::vector<bool> zero(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i)
      zero[static_cast<std::size_t>(i)] = x[i] <= kBoundaryTol;
    const bool face_active = x.sum() >= scale - kBoundaryTol;

    double t = 0.0;
    if (face_active) {
      // phi'(t) = 0 with phi(t) = sum_{free}(v_i - t)^2 + sum_{zero} max(0, v_i - t)^2.
      double free_sum = 0.0;
      std::size_t free_count = 0;
      std::vector<double> zv;
      for (Eigen::Index i = 0; i < d; ++i) {
        if (zero[static_cast<std::size_t>(i)])
          zv.push_back(v[i]);
        else {
          free_sum += v[i];
          ++free_count;
        }
      }
      std::sort(zv.begin(), zv.end(), std::greater<>());
      bool found = false;
      double sum = free_sum;
      std::size_t count = free_count;
      for (std::size_t k = 0; k <= zv.size(); ++k) {
        // the k largest zero-coordinates satisfy v_i > t
        if (count > 0) {
          const double cand = sum / static_cast<double>(count);
          const bool upper_ok = k == 0 || zv[k - 1] >= cand;
          const bool lower_ok = k == zv.size() || zv[k] <= cand;
          if (upper_ok && lower_ok) {
            t = cand;
            found = true;
            break;
          }
        }
        if (k < zv.size()) {
          sum += zv[k];
          ++count;
        }
      }
      if (!found) // no free coordinates: phi vanishes for t >= max v
        t = zv.empty() ? 0.0 : zv.front();
      t = std::max(t, 0.0);
    }
    Point out(d);
    for (Eigen::Index i = 0; i < d; ++i)
      out[i] = zero[static_cast<std::size_t>(i)] ? std::min(t, v[i]) : t;
    return out;
  }

  Variant set_;
};

inline Point project(const ConvexSet &S, const Point &v) { return S.project(v); }

inline Point normal_cone_project(const ConvexSet &S, const Point &x, const Point &v) {
  return S.normal_cone_project(x, v);
}

inline Point tangent_cone_project(const ConvexSet &S, const Point &x, const Point &v) {
  return S.tangent_cone_project(x, v);
}

inline bool truncated_normal_membership(const ConvexSet &S, const Point &x,
                                        const Point &nu, double G) {
  return S.truncated_normal_membership(x, nu, G);
}

} // namespace sri
