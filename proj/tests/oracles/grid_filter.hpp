#ifndef POLYFACTOR_TESTS_ORACLES_GRID_FILTER_HPP
#define POLYFACTOR_TESTS_ORACLES_GRID_FILTER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "oracles/quadrant_path.hpp"

// Point-mass filter for the quadrant model with diagonal noise:
//   f_t = f_{t−1} + step · drift[q(f_{t−1})] + w,  w ~ N(0, diag(q1, q2))
//   y_t = f_t + v,                                 v ~ N(0, diag(r1, r2))
// on a square grid of cell width h whose edges include both axes, so every cell lies in
// exactly one quadrant. Cells with negligible mass are skipped.

namespace polyfactor::oracle {

struct GridFilterConfig {
  std::array<Point, 4> drift;
  double step;
  double q1, q2;
  double r1, r2;
  Point start;
  double start_var1, start_var2;
  double half_width = 4.0;
  double h = 0.02;
};

struct GridStep {
  double mean1, mean2, var1, var2;
  std::array<double, 4> quadrant;
  double loglik;
};

inline std::vector<GridStep> grid_quadrant_filter(const GridFilterConfig& c, const std::vector<Point>& ys) {
  const int n = static_cast<int>(std::lround(2.0 * c.half_width / c.h));
  const auto centre = [&](int i) { return -c.half_width + (i + 0.5) * c.h; };
  const auto at = [n](int i, int j) { return static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j); };
  const auto pdf = [](double x, double m, double v) {
    return std::exp(-0.5 * (x - m) * (x - m) / v) / std::sqrt(2.0 * std::numbers::pi * v);
  };

  std::vector<double> p(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      p[at(i, j)] = pdf(centre(i), c.start[0], c.start_var1) * pdf(centre(j), c.start[1], c.start_var2) * c.h * c.h;
    }
  }

  const int radius1 = static_cast<int>(std::ceil(9.0 * std::sqrt(c.q1) / c.h)) + 1;
  const int radius2 = static_cast<int>(std::ceil(9.0 * std::sqrt(c.q2) / c.h)) + 1;
  std::vector<GridStep> out;
  std::vector<double> next(p.size());
  std::vector<double> tmp(p.size());
  for (const auto& y : ys) {
    double peak = 0.0;
    for (double v : p) {
      peak = std::max(peak, v);
    }
    const double floor = peak * 1e-20;
    std::fill(next.begin(), next.end(), 0.0);
    const int mid = n / 2;  // cells [0, mid) have negative coordinate
    for (int q = 0; q < 4; ++q) {
      const bool right = q == 0 || q == 3;
      const bool up = q == 0 || q == 1;
      int lo1 = n, hi1 = -1, lo2 = n, hi2 = -1;
      for (int i = right ? mid : 0; i < (right ? n : mid); ++i) {
        for (int j = up ? mid : 0; j < (up ? n : mid); ++j) {
          if (p[at(i, j)] > floor) {
            lo1 = std::min(lo1, i);
            hi1 = std::max(hi1, i);
            lo2 = std::min(lo2, j);
            hi2 = std::max(hi2, j);
          }
        }
      }
      if (hi1 < 0) {
        continue;
      }
      const double s1 = c.step * c.drift[static_cast<std::size_t>(q)][0];
      const double s2 = c.step * c.drift[static_cast<std::size_t>(q)][1];
      const int shift1 = static_cast<int>(std::lround(s1 / c.h));
      const int shift2 = static_cast<int>(std::lround(s2 / c.h));
      std::vector<double> k1(static_cast<std::size_t>(2 * radius1 + 1));
      std::vector<double> k2(static_cast<std::size_t>(2 * radius2 + 1));
      for (int m = -radius1; m <= radius1; ++m) {
        k1[static_cast<std::size_t>(m + radius1)] = pdf((m + shift1) * c.h, s1, c.q1) * c.h;
      }
      for (int m = -radius2; m <= radius2; ++m) {
        k2[static_cast<std::size_t>(m + radius2)] = pdf((m + shift2) * c.h, s2, c.q2) * c.h;
      }
      const int olo1 = std::max(0, lo1 + shift1 - radius1);
      const int ohi1 = std::min(n - 1, hi1 + shift1 + radius1);
      const int olo2 = std::max(0, lo2 + shift2 - radius2);
      const int ohi2 = std::min(n - 1, hi2 + shift2 + radius2);
      // Pass along the first axis: tmp(i, l) = Σ_k K1(i − k) p(k, l).
      for (int i = olo1; i <= ohi1; ++i) {
        for (int l = lo2; l <= hi2; ++l) {
          double acc = 0.0;
          for (int k = std::max(lo1, i - shift1 - radius1); k <= std::min(hi1, i - shift1 + radius1); ++k) {
            acc += k1[static_cast<std::size_t>(i - k - shift1 + radius1)] * p[at(k, l)];
          }
          tmp[at(i, l)] = acc;
        }
      }
      for (int i = olo1; i <= ohi1; ++i) {
        for (int j = olo2; j <= ohi2; ++j) {
          double acc = 0.0;
          for (int l = std::max(lo2, j - shift2 - radius2); l <= std::min(hi2, j - shift2 + radius2); ++l) {
            acc += k2[static_cast<std::size_t>(j - l - shift2 + radius2)] * tmp[at(i, l)];
          }
          next[at(i, j)] += acc;
        }
      }
    }

    double evidence = 0.0;
    for (int i = 0; i < n; ++i) {
      const double l1 = pdf(y[0], centre(i), c.r1);
      for (int j = 0; j < n; ++j) {
        double& v = next[at(i, j)];
        v *= l1 * pdf(y[1], centre(j), c.r2);
        evidence += v;
      }
    }
    GridStep s{0, 0, 0, 0, {0, 0, 0, 0}, std::log(evidence)};
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double& v = next[at(i, j)];
        v /= evidence;
        s.mean1 += v * centre(i);
        s.mean2 += v * centre(j);
        s.quadrant[static_cast<std::size_t>(plain_quadrant({centre(i), centre(j)}))] += v;
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double v = next[at(i, j)];
        s.var1 += v * (centre(i) - s.mean1) * (centre(i) - s.mean1);
        s.var2 += v * (centre(j) - s.mean2) * (centre(j) - s.mean2);
      }
    }
    out.push_back(s);
    std::swap(p, next);
  }
  return out;
}

}  // namespace polyfactor::oracle

#endif
