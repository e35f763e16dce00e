/// @file
/// @brief Points, step-size schedules, the algorithmic clock and iterate traces.
#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sri {

using Point = Eigen::VectorXd;

/// Raised when an argument lies outside the domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Raised when a query falls outside the range covered by a trace or grid.
struct RangeError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// Raised when an operation needs data or callbacks the caller did not provide.
struct CapabilityError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Raised on invalid configuration values.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Raised when a recursion or an integration blows up.
struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string &what, std::size_t last_finite_index,
                  double time)
      : std::runtime_error(what), last_finite_index(last_finite_index),
        time(time) {}
  std::size_t last_finite_index;
  double time;
};

inline constexpr double kDivergenceNorm = 1e12;

inline bool all_finite(const Point &x) { return x.allFinite(); }

inline Point make_point(std::initializer_list<double> coords) {
  Point x(static_cast<Eigen::Index>(coords.size()));
  Eigen::Index i = 0;
  for (double c : coords)
    x[i++] = c;
  return x;
}

inline void require_finite(const Point &x, const char *what) {
  if (x.size() < 1)
    throw DomainError(std::string(what) + ": point must have dimension >= 1");
  if (!all_finite(x))
    throw DomainError(std::string(what) + ": point has non-finite coordinates");
}

enum class RobbinsMonroVerdict { admissible, divergent_sum_of_squares, summable };

inline const char *to_string(RobbinsMonroVerdict v) {
  switch (v) {
  case RobbinsMonroVerdict::admissible:
    return "admissible";
  case RobbinsMonroVerdict::divergent_sum_of_squares:
    return "divergent-sum-of-squares";
  case RobbinsMonroVerdict::summable:
    return "summable";
  }
  return "unknown";
}

/// Power-law step sizes c / n^p.
///
/// The law is indexed from n = 1. The recursion uses zero-based step indices,
/// so the k-th applied step is `alpha(k) = value(k + 1)` and `alpha(0) = c`.
/// An exponent of 0 gives constant steps (used for closed-form checks).
/// The clock t(n) = alpha(0) + ... + alpha(n - 1) is cached as a prefix sum
/// shared between copies; extending the cache is guarded by a mutex.
class StepSchedule {
public:
  StepSchedule(double scale, double exponent)
      : scale_(scale), exponent_(exponent),
        cache_(std::make_shared<PrefixCache>()) {
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw ConfigError("step schedule scale must be positive");
    if (!(exponent >= 0.0) || !std::isfinite(exponent))
      throw ConfigError("step schedule exponent must be nonnegative");
  }

  double scale() const { return scale_; }
  double exponent() const { return exponent_; }

  /// The law c / n^p, n >= 1.
  double value(std::uint64_t n) const {
    if (n == 0)
      throw DomainError("step schedule is indexed from n = 1");
    return scale_ * std::pow(static_cast<double>(n), -exponent_);
  }

  /// Step applied at zero-based iteration k.
  double alpha(std::uint64_t k) const { return value(k + 1); }

  /// t(n) = sum_{k < n} alpha(k); t(0) = 0.
  double clock(std::uint64_t n) const {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    extend_locked(n);
    return cache_->prefix[n];
  }

  /// Smallest k with clock(n + k) >= clock(n) + horizon.
  std::uint64_t steps_to_cover(std::uint64_t n, double horizon) const {
    const double target = clock(n) + horizon;
    std::uint64_t k = 0;
    double t = clock(n);
    while (t < target) {
      t += alpha(n + k);
      ++k;
    }
    return k;
  }

  /// Largest n such that clock(n) <= t; requires t >= 0.
  std::uint64_t index_at_time(double t) const {
    if (t < 0.0)
      throw RangeError("negative clock value");
    std::lock_guard<std::mutex> lock(cache_->mutex);
    std::uint64_t hi = 1;
    while (true) {
      extend_locked(hi);
      if (cache_->prefix[hi] > t)
        break;
      hi *= 2;
    }
    const auto &p = cache_->prefix;
    auto it = std::upper_bound(p.begin(), p.begin() + static_cast<long>(hi) + 1, t);
    return static_cast<std::uint64_t>(it - p.begin()) - 1;
  }

  RobbinsMonroVerdict robbins_monro_verdict() const {
    if (exponent_ > 1.0)
      return RobbinsMonroVerdict::summable;
    if (exponent_ <= 0.5)
      return RobbinsMonroVerdict::divergent_sum_of_squares;
    return RobbinsMonroVerdict::admissible;
  }

private:
  struct PrefixCache {
    std::mutex mutex;
    std::vector<double> prefix{0.0};
  };

  void extend_locked(std::uint64_t n) const {
    auto &p = cache_->prefix;
    if (p.size() > n)
      return;
    if (p.capacity() < n + 1)
      p.reserve(std::max<std::size_t>(n + 1, 2 * p.capacity()));
    // Compensated summation keeps the clock accurate out to ~1e7 steps.
    double sum = p.back();
    double comp = 0.0;
    for (std::uint64_t k = p.size() - 1; k < n; ++k) {
      const double y = alpha(k) - comp;
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
      p.push_back(sum);
    }
  }

  double scale_;
  double exponent_;
  std::shared_ptr<PrefixCache> cache_;
};

inline double schedule_value(const StepSchedule &s, std::uint64_t n) {
  return s.value(n);
}

inline double clock(const StepSchedule &s, std::uint64_t n) {
  return s.clock(n);
}

inline RobbinsMonroVerdict robbins_monro_verdict(const StepSchedule &s) {
  return s.robbins_monro_verdict();
}

/// Append-only sequence of equal-dimension points stored contiguously.
class PointSeries {
public:
  using ConstMap = Eigen::Map<const Eigen::VectorXd>;

  PointSeries() = default;

  void reserve(std::size_t n, Eigen::Index d) {
    dim_ = d;
    data_.reserve(n * static_cast<std::size_t>(d));
  }

  void push_back(const Eigen::Ref<const Eigen::VectorXd> &x) {
    if (dim_ == 0)
      dim_ = x.size();
    if (x.size() != dim_)
      throw DomainError("PointSeries: dimension mismatch");
    data_.insert(data_.end(), x.data(), x.data() + x.size());
  }

  std::size_t size() const {
    return dim_ == 0 ? 0 : data_.size() / static_cast<std::size_t>(dim_);
  }
  bool empty() const { return data_.empty(); }
  Eigen::Index dimension() const { return dim_; }

  ConstMap operator[](std::size_t i) const {
    return ConstMap(data_.data() + i * static_cast<std::size_t>(dim_), dim_);
  }
  ConstMap back() const { return (*this)[size() - 1]; }

  void clear() { data_.clear(); }

private:
  Eigen::Index dim_ = 0;
  std::vector<double> data_;
};

/// Iterate sequence x_0..x_N with per-step records.
///
/// `noise[k]` is the realized martingale term M_{k+1} in recursion form, i.e.
/// (x_{k+1} - x_k) / alpha_k = drift(x_k) + bias[k] + noise[k]. `estimates[k]`
/// holds the raw oracle output used at step k. `bias` is filled only when the
/// conditional mean of the estimator was computable; `normal_terms` only for
/// projected runs.
struct Trace {
  explicit Trace(StepSchedule schedule, std::uint64_t seed = 0)
      : schedule(std::move(schedule)), seed(seed) {}

  StepSchedule schedule;
  std::uint64_t seed;
  PointSeries points;
  PointSeries noise;
  PointSeries estimates;
  PointSeries bias;
  PointSeries normal_terms;

  std::size_t steps() const { return points.empty() ? 0 : points.size() - 1; }
  bool has_noise() const { return !noise.empty() && noise.size() == steps(); }
  bool has_bias() const { return !bias.empty() && bias.size() == steps(); }

  double time(std::size_t n) const { return schedule.clock(n); }
  double alpha(std::size_t k) const { return schedule.alpha(k); }
};

/// Piecewise-linear interpolation of the trace on the clock grid.
inline Point interpolate(const Trace &tr, double t) {
  const std::size_t N = tr.steps();
  if (tr.points.empty())
    throw RangeError("interpolate: empty trace");
  if (t < 0.0 || t > tr.time(N))
    throw RangeError("interpolate: time outside [t(0), t(N)]");
  if (N == 0 || t == tr.time(N))
    return Point(tr.points[N]);
  std::size_t n = tr.schedule.index_at_time(t);
  if (n >= N)
    n = N - 1;
  const double t0 = tr.time(n);
  const double t1 = tr.time(n + 1);
  const double w = (t - t0) / (t1 - t0);
  return tr.points[n] + w * (tr.points[n + 1] - tr.points[n]);
}

} // namespace sri
