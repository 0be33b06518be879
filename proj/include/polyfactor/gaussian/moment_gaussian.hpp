#ifndef POLYFACTOR_GAUSSIAN_MOMENT_GAUSSIAN_HPP
#define POLYFACTOR_GAUSSIAN_MOMENT_GAUSSIAN_HPP

#include "polyfactor/core/factor.hpp"
#include "polyfactor/gaussian/linalg.hpp"
#include "polyfactor/gaussian/moments.hpp"

namespace polyfactor {

/// Gaussian in moment form: exp(log_weight) · N(x; mean, covariance).
///
/// Binary operations promote to canonical form.
class MomentGaussian final : public FactorImpl, public MomentSource {
 public:
  static constexpr std::string_view kTag = "moment";

  /// Covariance must be symmetric with eigenvalues above 1e−10.
  explicit MomentGaussian(GaussianMoments m);

  static Factor make(const std::vector<Variable>& vars, const Vector& mean, const Matrix& covariance,
                     double log_weight = 0.0);
  static Factor make(GaussianMoments m);

  [[nodiscard]] std::string_view tag() const noexcept override { return kTag; }
  [[nodiscard]] const Vector& mean() const noexcept { return m_.mean; }
  [[nodiscard]] const Matrix& covariance() const noexcept { return m_.covariance; }
  [[nodiscard]] double log_weight() const noexcept { return m_.log_mass; }

  [[nodiscard]] double evaluate(const Assignment& a) const override;
  [[nodiscard]] double log_scalar() const override { return m_.log_mass; }
  [[nodiscard]] Factor sum_out(const Scope& vars) const override;
  [[nodiscard]] Factor reduce(const Assignment& evidence) const override;
  [[nodiscard]] Factor scaled(double log_factor) const override;
  [[nodiscard]] Factor renamed(const RenameMap& mapping) const override;
  [[nodiscard]] std::unique_ptr<PointEvaluator> make_evaluator(const Scope& layout) const override;
  [[nodiscard]] std::unique_ptr<ConditionalSampler> make_sampler(const Scope& given) const override;
  [[nodiscard]] std::string describe() const override;

  [[nodiscard]] GaussianMoments moments() const override { return m_; }

  [[nodiscard]] Factor to_canonical() const;

 private:
  GaussianMoments m_;
};

}  // namespace polyfactor

#endif
