#ifndef POLYFACTOR_HYBRID_TRUNCATED_GAUSSIAN_HPP
#define POLYFACTOR_HYBRID_TRUNCATED_GAUSSIAN_HPP

#include <map>
#include <mutex>
#include <string>

#include "polyfactor/core/factor.hpp"
#include "polyfactor/gaussian/canonical_gaussian.hpp"
#include "polyfactor/gaussian/moments.hpp"
#include "polyfactor/hybrid/truncated_normal.hpp"

namespace polyfactor {

class DispatchRegistry;

/// Bounds keyed by variable name; variables not listed are unbounded.
using Box = std::map<std::string, std::pair<double, double>, std::less<>>;

/// A canonical Gaussian restricted to an axis-aligned half-open box.
///
/// The base may extend over latent variables (names starting with '~'): bounded
/// variables that were summed out. Their box still applies, so the factor's value is
/// the base integrated over the latent part of the box. Unbounded variables are
/// marginalized exactly and never become latent.
class TruncatedGaussian final : public FactorImpl, public MomentSource {
 public:
  static constexpr std::string_view kTag = "truncated";

  /// `lower`/`upper` are aligned with the canonical order of base.scope(); `latent` ⊆ base.scope().
  TruncatedGaussian(Factor base, Vector lower, Vector upper, Scope latent);

  /// As the constructor, but returns the plain base when nothing is bounded, and the
  /// zero canonical when the box is empty.
  static Factor make(Factor base, Vector lower, Vector upper, Scope latent = {});

  [[nodiscard]] std::string_view tag() const noexcept override { return kTag; }
  [[nodiscard]] const Factor& base_factor() const noexcept { return base_; }
  [[nodiscard]] const CanonicalGaussian& base() const { return base_.get<CanonicalGaussian>(); }
  [[nodiscard]] const Vector& lower() const noexcept { return lower_; }
  [[nodiscard]] const Vector& upper() const noexcept { return upper_; }
  [[nodiscard]] const Scope& latent() const noexcept { return latent_; }
  /// ln of the total mass (the base restricted to the box).
  [[nodiscard]] double log_mass() const;

  [[nodiscard]] double evaluate(const Assignment& a) const override;
  [[nodiscard]] Factor sum_out(const Scope& vars) const override;
  [[nodiscard]] Factor reduce(const Assignment& evidence) const override;
  [[nodiscard]] Factor scaled(double log_factor) const override;
  [[nodiscard]] Factor renamed(const RenameMap& mapping) const override;
  [[nodiscard]] bool is_zero() const override;
  [[nodiscard]] std::unique_ptr<PointEvaluator> make_evaluator(const Scope& layout) const override;
  [[nodiscard]] std::unique_ptr<ConditionalSampler> make_sampler(const Scope& given) const override;
  [[nodiscard]] std::string describe() const override;

  /// Mean and covariance of the truncated density over the visible scope, with its mass.
  [[nodiscard]] GaussianMoments moments() const override;

  /// Product with a canonical factor: the canonical joins the base, the box is kept.
  [[nodiscard]] static Factor multiply(const TruncatedGaussian& t, const CanonicalGaussian& g);
  [[nodiscard]] static Factor multiply(const TruncatedGaussian& t, const TruncatedGaussian& u);
  [[nodiscard]] static Factor divide(const TruncatedGaussian& t, const CanonicalGaussian& g);

  /// Same factor with `box` intersected into its bounds (bounds keyed by visible variable name).
  [[nodiscard]] Factor intersected(const Box& box) const;
  /// Bounds of the bounded variables (visible and latent).
  [[nodiscard]] Box box() const;

 private:
  struct Cache {
    double base_log_mass = 0.0;
    BoxMoments box;  // over base.scope(); box.log_mass includes the base mass
  };
  [[nodiscard]] const Cache& cache() const;

  Factor base_;
  Vector lower_;
  Vector upper_;
  Scope latent_;
  mutable std::once_flag once_;
  mutable Cache cache_;
};

/// Restricts a normalizable canonical Gaussian to the box [lower, upper) (aligned with f's scope).
/// Throws ZeroMass when the restricted mass is below 1e−300.
[[nodiscard]] Factor truncate(const Factor& f, const Vector& lower, const Vector& upper);

[[nodiscard]] Factor truncate(const Factor& f, const Box& box);

void register_truncated_kernels(DispatchRegistry& registry);

}  // namespace polyfactor

#endif
