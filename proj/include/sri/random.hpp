/// @file
/// @brief Seeded, splittable random streams.
#pragma once

#include "sri/core.hpp"

#include <bit>
#include <cstdint>
#include <random>

namespace sri {

/// Deterministic random stream.
///
/// A stream is keyed by a root seed plus a path of integer tags. `split`
/// derives a child stream from the key path and a per-parent counter, so
/// streams for distinct (seed, lambda, replicate) triples are seeded from
/// distinct seed sequences and do not depend on scheduling order.
class RandomSource {
public:
  explicit RandomSource(std::uint64_t seed) : RandomSource(seed, {}) {}

  RandomSource(std::uint64_t seed, std::vector<std::uint64_t> path)
      : seed_(seed), path_(std::move(path)) {
    std::vector<std::uint32_t> words;
    words.reserve(2 * path_.size() + 3);
    push(words, seed_);
    words.push_back(static_cast<std::uint32_t>(path_.size()));
    for (std::uint64_t tag : path_)
      push(words, tag);
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
  }

  /// Stream for one (lambda, replicate) cell of an experiment grid.
  static RandomSource for_cell(std::uint64_t seed, double lambda,
                               std::uint64_t replicate) {
    return RandomSource(seed, {std::bit_cast<std::uint64_t>(lambda), replicate});
  }

  /// Child stream; successive calls return distinct streams.
  RandomSource split() {
    auto path = path_;
    path.push_back(0x5eed0000ULL + split_counter_++);
    return RandomSource(seed_, std::move(path));
  }

  std::uint64_t seed() const { return seed_; }

  double normal(double mean = 0.0, double sd = 1.0) {
    return mean + sd * std_normal_(engine_);
  }

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  Point normal_vector(Eigen::Index d) {
    Point u(d);
    for (Eigen::Index i = 0; i < d; ++i)
      u[i] = std_normal_(engine_);
    return u;
  }

  /// Uniform direction on the unit sphere.
  Point unit_vector(Eigen::Index d) {
    Point u;
    double n = 0.0;
    do {
      u = normal_vector(d);
      n = u.norm();
    } while (n == 0.0);
    return u / n;
  }

  /// Uniform point in the ball of radius r around the origin.
  Point in_ball(Eigen::Index d, double r) {
    const double rad = r * std::pow(uniform(), 1.0 / static_cast<double>(d));
    return rad * unit_vector(d);
  }

  std::mt19937_64 &engine() { return engine_; }

private:
  static void push(std::vector<std::uint32_t> &w, std::uint64_t v) {
    w.push_back(static_cast<std::uint32_t>(v & 0xffffffffULL));
    w.push_back(static_cast<std::uint32_t>(v >> 32));
  }

  std::uint64_t seed_;
  std::vector<std::uint64_t> path_;
  std::uint64_t split_counter_ = 0;
  std::mt19937_64 engine_;
  std::normal_distribution<double> std_normal_{0.0, 1.0};
};

} // namespace sri
