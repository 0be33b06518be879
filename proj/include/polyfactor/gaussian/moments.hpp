#ifndef POLYFACTOR_GAUSSIAN_MOMENTS_HPP
#define POLYFACTOR_GAUSSIAN_MOMENTS_HPP

#include "polyfactor/core/factor.hpp"
#include "polyfactor/gaussian/linalg.hpp"

namespace polyfactor {

/// First and second moments of a continuous factor together with its total mass.
struct GaussianMoments {
  Scope scope;
  Vector mean;
  Matrix covariance;
  double log_mass = 0.0;
};

/// Implemented by continuous representations that can report their moments.
class MomentSource {
 public:
  virtual ~MomentSource() = default;
  /// Throws ZeroMass when the factor has no mass, NotNormalizable when moments do not exist.
  [[nodiscard]] virtual GaussianMoments moments() const = 0;
};

/// Moments of any factor whose representation implements MomentSource; Unsupported otherwise.
[[nodiscard]] GaussianMoments moments_of(const Factor& f);

/// Mass-weighted combination of component moments (the mixture's moments).
[[nodiscard]] GaussianMoments combine_moments(const std::vector<GaussianMoments>& parts);

}  // namespace polyfactor

#endif
