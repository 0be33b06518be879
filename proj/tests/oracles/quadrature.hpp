#ifndef POLYFACTOR_TESTS_ORACLES_QUADRATURE_HPP
#define POLYFACTOR_TESTS_ORACLES_QUADRATURE_HPP

#include <cmath>
#include <cstddef>

// Composite Simpson rules, kept deliberately naive: test oracles only.

namespace polyfactor::oracle {

/// ∫_a^b f(x) dx with `intervals` (even) Simpson panels.
template <class F>
double simpson(F&& f, double a, double b, std::size_t intervals = 20000) {
  if (intervals % 2 != 0) {
    ++intervals;
  }
  const double h = (b - a) / static_cast<double>(intervals);
  double s = f(a) + f(b);
  for (std::size_t i = 1; i < intervals; ++i) {
    s += (i % 2 == 1 ? 4.0 : 2.0) * f(a + h * static_cast<double>(i));
  }
  return s * h / 3.0;
}

/// ∫∫ f(x, y) over [ax, bx] × [ay, by] with `nodes` points per axis (odd).
template <class F>
double simpson2d(F&& f, double ax, double bx, double ay, double by, std::size_t nodes = 401) {
  if (nodes % 2 == 0) {
    ++nodes;
  }
  const double hx = (bx - ax) / static_cast<double>(nodes - 1);
  const double hy = (by - ay) / static_cast<double>(nodes - 1);
  auto weight = [nodes](std::size_t i) { return (i == 0 || i == nodes - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0); };
  double s = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) {
    const double x = ax + hx * static_cast<double>(i);
    for (std::size_t j = 0; j < nodes; ++j) {
      s += weight(i) * weight(j) * f(x, ay + hy * static_cast<double>(j));
    }
  }
  return s * hx * hy / 9.0;
}

inline double normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * M_PI * var);
}

}  // namespace polyfactor::oracle

#endif
