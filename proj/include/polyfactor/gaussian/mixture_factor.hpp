#ifndef POLYFACTOR_GAUSSIAN_MIXTURE_FACTOR_HPP
#define POLYFACTOR_GAUSSIAN_MIXTURE_FACTOR_HPP

#include <vector>

#include "polyfactor/core/factor.hpp"
#include "polyfactor/gaussian/moments.hpp"

namespace polyfactor {

class DispatchRegistry;

/// Sum of continuous factors over a common scope, the exact result of adding Gaussians.
///
/// Each component carries its own scale (a canonical component's weight lives in its g).
/// Components may be canonical or truncated Gaussians.
class MixtureFactor final : public FactorImpl, public MomentSource {
 public:
  static constexpr std::string_view kTag = "mixture";

  MixtureFactor(Scope scope, std::vector<Factor> components);

  /// Flattens nested mixtures, drops zero components, merges canonical components with
  /// identical K and h, and collapses to the single component (or a zero canonical) when possible.
  static Factor make(const Scope& scope, const std::vector<Factor>& components);

  [[nodiscard]] std::string_view tag() const noexcept override { return kTag; }
  [[nodiscard]] const std::vector<Factor>& components() const noexcept { return components_; }

  [[nodiscard]] double evaluate(const Assignment& a) const override;
  [[nodiscard]] Factor sum_out(const Scope& vars) const override;
  [[nodiscard]] Factor reduce(const Assignment& evidence) const override;
  [[nodiscard]] Factor scaled(double log_factor) const override;
  [[nodiscard]] Factor renamed(const RenameMap& mapping) const override;
  [[nodiscard]] bool is_zero() const override { return false; }
  [[nodiscard]] std::unique_ptr<PointEvaluator> make_evaluator(const Scope& layout) const override;
  [[nodiscard]] std::unique_ptr<ConditionalSampler> make_sampler(const Scope& given) const override;
  [[nodiscard]] std::string describe() const override;

  /// Moment matching: the single Gaussian with the mixture's mass, mean and covariance.
  [[nodiscard]] GaussianMoments moments() const override;

 private:
  std::vector<Factor> components_;
};

/// Moment-matched Gaussian of a mixture (or any MomentSource), in moment form.
[[nodiscard]] Factor moment_match(const Factor& f);

/// Registers per-component multiply/divide/add for mixtures against `tag`.
void register_mixture_kernels(DispatchRegistry& registry, const std::string& tag);

}  // namespace polyfactor

#endif
