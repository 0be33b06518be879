#ifndef POLYFACTOR_SAMPLE_SAMPLE_FACTOR_HPP
#define POLYFACTOR_SAMPLE_SAMPLE_FACTOR_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polyfactor/core/factor.hpp"
#include "polyfactor/gaussian/moments.hpp"

namespace polyfactor {

class DispatchRegistry;

/// Weighted particle approximation of a factor.
///
/// The factor is the measure exp(log_scale) · Σᵢ wᵢ δ(x − xᵢ). Particles are stored
/// row-major (one row per particle, columns in canonical scope order); weights are
/// linear and kept with max weight 1, the common magnitude living in log_scale.
class SampleFactor final : public FactorImpl, public MomentSource {
 public:
  static constexpr std::string_view kTag = "sample";

  /// Throws InvalidArgument on shape mismatches or negative weights and Degenerate
  /// when no weight is positive. Weights are rescaled to max 1.
  SampleFactor(Scope scope, std::vector<double> particles, std::vector<double> weights, double log_scale,
               std::vector<std::string> lineage);

  [[nodiscard]] std::string_view tag() const noexcept override { return kTag; }

  [[nodiscard]] std::size_t size() const noexcept { return weights_.size(); }
  [[nodiscard]] std::size_t dimension() const noexcept { return scope().size(); }
  [[nodiscard]] std::span<const double> particle(std::size_t i) const;
  [[nodiscard]] const std::vector<double>& particles() const noexcept { return particles_; }
  [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }
  [[nodiscard]] double log_scale() const noexcept { return log_scale_; }
  /// ln Σᵢ wᵢ + log_scale.
  [[nodiscard]] double log_total() const noexcept;
  /// Operations that produced this factor, oldest first, each with its seed.
  [[nodiscard]] const std::vector<std::string>& lineage() const noexcept { return lineage_; }
  /// Seed for the next random operation, derived from the lineage.
  [[nodiscard]] std::uint64_t lineage_seed(std::string_view label) const;

  [[nodiscard]] double evaluate(const Assignment& a) const override;
  [[nodiscard]] double log_scalar() const override;
  [[nodiscard]] Factor sum_out(const Scope& vars) const override;
  [[nodiscard]] Factor reduce(const Assignment& evidence) const override;
  [[nodiscard]] Factor scaled(double log_factor) const override;
  [[nodiscard]] Factor renamed(const RenameMap& mapping) const override;
  [[nodiscard]] bool is_zero() const override { return false; }
  [[nodiscard]] std::unique_ptr<ConditionalSampler> make_sampler(const Scope& given) const override;
  [[nodiscard]] std::string describe() const override;

  /// Weighted mean and population covariance; the scope must be continuous.
  [[nodiscard]] GaussianMoments moments() const override;

  /// Reweights by a density over a subset of the scope, or extends the particles with
  /// draws of the density's remaining variables when its scope reaches beyond.
  [[nodiscard]] static Factor multiply(const SampleFactor& s, const Factor& f);
  /// Concatenation of the particle lists.
  [[nodiscard]] static Factor add(const SampleFactor& s, const SampleFactor& t);

 private:
  std::vector<double> particles_;
  std::vector<double> weights_;
  double log_scale_;
  std::vector<std::string> lineage_;
};

/// n draws from f with equal weights whose sum is f's total mass.
[[nodiscard]] Factor sample_from(const Factor& f, std::size_t n, Rng& rng);

/// n equally weighted particles by systematic resampling; total mass is preserved.
[[nodiscard]] Factor resample_systematic(const SampleFactor& s, std::size_t n, Rng& rng);

/// (Σw)² / Σw².
[[nodiscard]] double effective_sample_size(const SampleFactor& s);

struct ParticleEstimate {
  /// Present when the scope has continuous variables.
  std::optional<GaussianMoments> continuous;
  /// Normalized weighted histogram over the discrete variables, when there are any.
  std::optional<Factor> histogram;
  double log_mass = 0.0;
};

/// Weighted moments of the continuous part and histogram of the discrete part.
/// Degenerate when a continuous part is present and fewer than two particles are distinct.
[[nodiscard]] ParticleEstimate estimate_moments(const SampleFactor& s);

void register_sample_kernels(DispatchRegistry& registry);

}  // namespace polyfactor

#endif
