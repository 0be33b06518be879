#ifndef POLYFACTOR_GAUSSIAN_CANONICAL_GAUSSIAN_HPP
#define POLYFACTOR_GAUSSIAN_CANONICAL_GAUSSIAN_HPP

#include <vector>

#include "polyfactor/core/factor.hpp"
#include "polyfactor/gaussian/linalg.hpp"
#include "polyfactor/gaussian/moments.hpp"

namespace polyfactor {

class DispatchRegistry;

/// Gaussian factor in canonical (information) form over continuous variables:
///
///     f(x) = exp(−½ xᵀKx + hᵀx + g)
///
/// K need not be positive definite; integrability is checked where it matters
/// (sum-out, moments, sampling). g = −∞ encodes the zero factor.
class CanonicalGaussian final : public FactorImpl, public MomentSource {
 public:
  static constexpr std::string_view kTag = "canonical";

  /// K and h are indexed by the canonical order of `scope`.
  CanonicalGaussian(Scope scope, Matrix precision, Vector information, double log_constant);

  static Factor make(Scope scope, Matrix precision, Vector information, double log_constant);
  /// K and h indexed by `vars` in the order given.
  static Factor from_ordered(const std::vector<Variable>& vars, const Matrix& precision, const Vector& information,
                             double log_constant);
  /// exp(log_weight) · N(x; mean, covariance), mean and covariance indexed by `vars` in order.
  static Factor from_moments(const std::vector<Variable>& vars, const Vector& mean, const Matrix& covariance,
                             double log_weight = 0.0);
  static Factor from_moments(const GaussianMoments& m);
  /// The constant factor 1.
  static Factor unit(const Scope& scope);
  /// The constant factor 0.
  static Factor zero(const Scope& scope);
  /// Conditional density N(y; A x + b, Q) as a factor over inputs x and outputs y.
  static Factor linear_gaussian(const std::vector<Variable>& inputs, const std::vector<Variable>& outputs,
                                const Matrix& transition, const Vector& offset, const Matrix& noise);

  [[nodiscard]] std::string_view tag() const noexcept override { return kTag; }
  [[nodiscard]] const Matrix& precision() const noexcept { return k_; }
  [[nodiscard]] const Vector& information() const noexcept { return h_; }
  [[nodiscard]] double log_constant() const noexcept { return g_; }

  /// K and h zero-padded onto a superset scope.
  [[nodiscard]] std::pair<Matrix, Vector> embedded(const Scope& target) const;
  [[nodiscard]] double log_density(std::span<const double> x) const;

  [[nodiscard]] double evaluate(const Assignment& a) const override;
  [[nodiscard]] double log_scalar() const override;
  [[nodiscard]] Factor sum_out(const Scope& vars) const override;
  [[nodiscard]] Factor reduce(const Assignment& evidence) const override;
  [[nodiscard]] Factor scaled(double log_factor) const override;
  [[nodiscard]] Factor renamed(const RenameMap& mapping) const override;
  [[nodiscard]] bool is_zero() const override;
  [[nodiscard]] std::unique_ptr<PointEvaluator> make_evaluator(const Scope& layout) const override;
  [[nodiscard]] std::unique_ptr<ConditionalSampler> make_sampler(const Scope& given) const override;
  [[nodiscard]] std::string describe() const override;

  /// Mean, covariance and mass; NotNormalizable unless K is positive definite.
  [[nodiscard]] GaussianMoments moments() const override;

  [[nodiscard]] static Factor multiply(const CanonicalGaussian& f, const CanonicalGaussian& g);
  [[nodiscard]] static Factor divide(const CanonicalGaussian& f, const CanonicalGaussian& g);

 private:
  Matrix k_;
  Vector h_;
  double g_;
};

/// Conditions a canonical factor on fixed values of some of its variables, reusing
/// one factorization for many conditioning points.
class GaussianConditioner {
 public:
  /// `given` ⊆ f.scope(); the remaining block of K must be positive definite.
  GaussianConditioner(const CanonicalGaussian& f, const Scope& given);

  [[nodiscard]] const Scope& free_scope() const noexcept { return free_; }
  /// Covariance of the free block (independent of the conditioning point).
  [[nodiscard]] const Matrix& covariance() const noexcept { return cov_; }
  /// Lower Cholesky factor of covariance().
  [[nodiscard]] const Matrix& covariance_factor() const noexcept { return cov_l_; }
  /// Mean of the free block given `x` (canonical order of the given scope).
  [[nodiscard]] Vector mean(std::span<const double> x) const;
  /// As above, writing into `out` (no allocation once `out` has the right size).
  void mean(std::span<const double> x, Vector& out) const;
  /// ln ∫ f(x, y) dy.
  [[nodiscard]] double log_mass(std::span<const double> x) const;

 private:
  Scope free_;
  Vector mean_offset_;  // E[y | x] = mean_offset_ + mean_gain_ x
  Matrix mean_gain_;
  Matrix cov_;
  Matrix cov_l_;
  double g_;
  // ln ∫ f(x, y) dy = mass_constant_ + mass_linear_ᵀx − ½ xᵀ mass_quadratic_ x
  double mass_constant_ = 0.0;
  Vector mass_linear_;
  Matrix mass_quadratic_;
};

[[nodiscard]] Factor to_moment(const CanonicalGaussian& f);

void register_gaussian_kernels(DispatchRegistry& registry);

}  // namespace polyfactor

#endif
