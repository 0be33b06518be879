#ifndef POLYFACTOR_HYBRID_TRUNCATED_NORMAL_HPP
#define POLYFACTOR_HYBRID_TRUNCATED_NORMAL_HPP

#include <vector>

#include "polyfactor/core/rng.hpp"
#include "polyfactor/gaussian/linalg.hpp"

namespace polyfactor {

/// Mass and moments of N(mean, cov) restricted to the box [lower, upper).
struct BoxMoments {
  /// ln P(lower ≤ X < upper) for X ~ N(mean, cov); −∞ when the box has no mass.
  double log_mass = 0.0;
  /// Mean and covariance of the truncated distribution (undefined when log_mass = −∞).
  Vector mean;
  Matrix covariance;
};

/// Standardized interval mass ln(Φ(b) − Φ(a)), accurate in both tails.
double log_normal_interval(double a, double b);

/// 1-D truncated normal with location mu and scale sigma on [lo, hi).
BoxMoments truncated_normal_1d(double mu, double sigma, double lo, double hi);

/// Inverse-CDF draw from N(mu, sigma²) restricted to [lo, hi).
double sample_truncated_1d(double mu, double sigma, double lo, double hi, Rng& rng);

/// Options for the 2-D quadrature used on correlated bounded pairs.
struct QuadratureOptions {
  double relative_tolerance = 1e-8;
  std::size_t max_nodes = std::size_t{1} << 14;
};

/// Mass and moments of a box-truncated multivariate normal.
///
/// Unbounded coordinates are handled by regression on the bounded ones. Bounded
/// coordinates are grouped by correlation; singletons and uncorrelated groups use
/// closed forms, correlated pairs use iterated Gauss–Legendre quadrature, and larger
/// correlated groups are Unsupported.
BoxMoments truncated_moments(const Vector& mean, const Matrix& cov, const Vector& lower, const Vector& upper,
                             const QuadratureOptions& options = {});

/// Only the log mass (cheaper where moments are not needed).
double truncated_log_mass(const Vector& mean, const Matrix& cov, const Vector& lower, const Vector& upper,
                          const QuadratureOptions& options = {});

/// Groups of mutually correlated coordinates among `dims` (|cov_ij| > 0).
std::vector<std::vector<std::size_t>> correlated_groups(const Matrix& cov, const std::vector<std::size_t>& dims);

}  // namespace polyfactor

#endif
