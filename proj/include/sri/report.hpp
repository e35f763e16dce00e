/// @file
/// @brief Order statistics, shape tests on lambda sweeps, and CSV/SVG emission.
#pragma once

#include "sri/core.hpp"
#include "sri/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace sri {

/// Linear-interpolation quantile (the "type 7" rule); q in [0, 1].
inline double quantile(std::vector<double> v, double q) {
  if (v.empty())
    return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  if (w == 0.0)
    return v[lo];
  return v[lo] + w * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

/// Number of bootstrap resamples (over seeds, with replacement) in which
/// median(a*) <= median(b*). a and b are resampled independently.
inline std::size_t bootstrap_order_count(const std::vector<double> &a,
                                         const std::vector<double> &b,
                                         std::size_t resamples, std::uint64_t seed) {
  RandomSource rng(seed, {0xb007ULL});
  auto resample = [&](const std::vector<double> &v) {
    std::vector<double> out(v.size());
    for (auto &e : out)
      e = v[static_cast<std::size_t>(rng.uniform(0.0, static_cast<double>(v.size()))) %
            v.size()];
    return out;
  };
  std::size_t count = 0;
  for (std::size_t r = 0; r < resamples; ++r)
    if (median(resample(a)) <= median(resample(b)))
      ++count;
  return count;
}

/// Least-squares nondecreasing fit (pool adjacent violators).
inline std::vector<double> isotonic_increasing(const std::vector<double> &y) {
  std::vector<double> level, weight;
  std::vector<std::size_t> count;
  for (double v : y) {
    level.push_back(v);
    weight.push_back(1.0);
    count.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      const double w = weight[weight.size() - 2] + weight.back();
      const double l = (level[level.size() - 2] * weight[weight.size() - 2] +
                        level.back() * weight.back()) /
                       w;
      const std::size_t c = count[count.size() - 2] + count.back();
      level.pop_back();
      weight.pop_back();
      count.pop_back();
      level.back() = l;
      weight.back() = w;
      count.back() = c;
    }
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < level.size(); ++i)
    out.insert(out.end(), count[i], level[i]);
  return out;
}

inline std::vector<double> isotonic_decreasing(const std::vector<double> &y) {
  std::vector<double> neg(y.size());
  std::transform(y.begin(), y.end(), neg.begin(), [](double v) { return -v; });
  auto fit = isotonic_increasing(neg);
  for (auto &v : fit)
    v = -v;
  return fit;
}

/// Best valley-shaped (nonincreasing then nondecreasing) least-squares fit.
struct ValleyFit {
  std::vector<double> fitted;
  std::size_t min_index = 0;
  double sse = 0.0;
  /// Raw minimum strictly interior and both fitted ends strictly above the
  /// fitted minimum.
  bool u_shaped = false;
};

inline ValleyFit valley_fit(const std::vector<double> &y) {
  ValleyFit best;
  best.sse = std::numeric_limits<double>::infinity();
  const std::size_t n = y.size();
  if (n == 0)
    return best;
  for (std::size_t split = 0; split <= n; ++split) {
    std::vector<double> left(y.begin(), y.begin() + static_cast<long>(split));
    std::vector<double> right(y.begin() + static_cast<long>(split), y.end());
    auto fl = isotonic_decreasing(left);
    auto fr = isotonic_increasing(right);
    std::vector<double> fit = fl;
    fit.insert(fit.end(), fr.begin(), fr.end());
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      sse += (fit[i] - y[i]) * (fit[i] - y[i]);
    if (sse < best.sse - 1e-15) {
      best.sse = sse;
      best.fitted = fit;
    }
  }
  const auto raw_min = static_cast<std::size_t>(
      std::min_element(y.begin(), y.end()) - y.begin());
  const auto fit_min = static_cast<std::size_t>(
      std::min_element(best.fitted.begin(), best.fitted.end()) - best.fitted.begin());
  best.min_index = raw_min;
  const double lowest = best.fitted[fit_min];
  best.u_shaped = n >= 3 && raw_min > 0 && raw_min + 1 < n &&
                  best.fitted.front() > lowest && best.fitted.back() > lowest;
  return best;
}

/// Shortest round-trip decimal representation used in every emitted file.
inline std::string format_number(double v) {
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v)
      break;
  }
  return buf;
}

struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points; ///< (iteration, gap)
};

/// Log-log line chart of gap against iteration.
inline std::string gap_chart_svg(const std::string &title,
                                 const std::vector<SvgSeries> &series) {
  constexpr double W = 720, H = 440, left = 70, right = 20, top = 40, bottom = 50;
  double xmin = std::numeric_limits<double>::infinity(), xmax = 1.0;
  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  auto floor_gap = [](double g) { return std::max(g, 1e-16); };
  for (const auto &s : series)
    for (auto [n, g] : s.points) {
      if (!std::isfinite(g))
        continue;
      xmin = std::min(xmin, std::max(n, 1.0));
      xmax = std::max(xmax, std::max(n, 1.0));
      ymin = std::min(ymin, floor_gap(g));
      ymax = std::max(ymax, floor_gap(g));
    }
  if (!std::isfinite(xmin)) {
    xmin = 1.0;
    ymin = 1e-3;
    ymax = 1.0;
  }
  const double lx0 = std::floor(std::log10(xmin)), lx1 = std::max(std::ceil(std::log10(xmax)), lx0 + 1);
  const double ly0 = std::floor(std::log10(ymin)), ly1 = std::max(std::ceil(std::log10(ymax)), ly0 + 1);
  auto px = [&](double n) {
    return left + (std::log10(std::max(n, 1.0)) - lx0) / (lx1 - lx0) * (W - left - right);
  };
  auto py = [&](double g) {
    return top + (ly1 - std::log10(floor_gap(g))) / (ly1 - ly0) * (H - top - bottom);
  };
  static const char *palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title
    << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << W - left - right
    << "\" height=\"" << H - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double e = lx0; e <= lx1; e += 1.0) {
    const double x = px(std::pow(10.0, e));
    o << "<line x1=\"" << x << "\" y1=\"" << top << "\" x2=\"" << x << "\" y2=\"" << H - bottom
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << x << "\" y=\"" << H - bottom + 18 << "\" text-anchor=\"middle\">1e"
      << static_cast<int>(e) << "</text>\n";
  }
  for (double e = ly0; e <= ly1; e += 1.0) {
    const double y = py(std::pow(10.0, e));
    o << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << W - right << "\" y2=\"" << y
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">1e"
      << static_cast<int>(e) << "</text>\n";
  }
  o << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">iteration n</text>\n";
  o << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
    << ")\" text-anchor=\"middle\">|f(x_n) - f*|</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char *colour = palette[i % std::size(palette)];
    o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1\" points=\"";
    for (auto [n, g] : series[i].points)
      if (std::isfinite(g))
        o << format_number(std::round(px(n) * 100) / 100) << ','
          << format_number(std::round(py(g) * 100) / 100) << ' ';
    o << "\"/>\n";
    o << "<text x=\"" << W - right - 6 << "\" y=\"" << top + 16 + 14 * static_cast<double>(i)
      << "\" text-anchor=\"end\" fill=\"" << colour << "\">" << series[i].label << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

/// Writes `contents` to `path`, throwing with the path on failure.
inline void write_text_file(const std::string &path, const std::string &contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open " + path + " for writing");
  out << contents;
  if (!out)
    throw std::runtime_error("write failed for " + path);
}

} // namespace sri
