#ifndef POLYFACTOR_INFERENCE_FILTERING_HPP
#define POLYFACTOR_INFERENCE_FILTERING_HPP

#include <string>
#include <vector>

#include "polyfactor/inference/model.hpp"

namespace polyfactor {

/// Representation-specific projection applied after every filter step.
///
/// The same policy object serves every representation: it resamples particle factors
/// whose effective sample size falls below ess_fraction · n and, when moment matching
/// is on, replaces mixtures and truncated Gaussians (including conditional branches) by
/// their moment-matched Gaussians. Exact representations pass through unchanged.
struct ProjectionPolicy {
  bool moment_match = true;
  bool resample = true;
  double ess_fraction = 0.5;

  /// No projection at all.
  static ProjectionPolicy exact() { return {false, false, 0.0}; }

  [[nodiscard]] Factor project(const Factor& f) const;
  [[nodiscard]] std::string describe() const;
};

struct FilterStep {
  Factor posterior;
  double log_likelihood;
};

struct FilterResult {
  std::vector<Factor> posteriors;  ///< p(x_t | y_{1:t}) for t = 1..T
  std::vector<double> log_likelihoods;  ///< ln p(y_t | y_{1:t−1})
  double total_log_likelihood = 0.0;
};

/// One prediction and correction:
///   predict   = Σ_{x_{t−1}} transition ⊗ prior
///   φ         = predict ⊗ reduce(observation, y)
///   evidence  = Σ_{x_t} φ
///   posterior = φ ⊘ evidence
/// followed by the policy's projection of the posterior.
[[nodiscard]] FilterStep filter_step(const Factor& prior, const StateSpaceModel& model, const Assignment& y,
                                     const ProjectionPolicy& policy = {});

/// Folds filter_step over the observations, starting from the projected prior.
/// Errors are re-raised with the step index prepended.
[[nodiscard]] FilterResult filter(const StateSpaceModel& model, const std::vector<Assignment>& observations,
                                  const ProjectionPolicy& policy = {});

/// Filter with a caller-supplied initial factor in place of the model prior (e.g. a
/// particle approximation of it).
[[nodiscard]] FilterResult filter_from(const Factor& initial, const StateSpaceModel& model,
                                       const std::vector<Assignment>& observations,
                                       const ProjectionPolicy& policy = {});

/// Forward filtering, backward division:
///   s_T = f_T
///   s_t = f_t ⊗ Σ_{x_{t+1}} transition ⊗ (s_{t+1} ⊘ Σ_{x_t} transition ⊗ f_t)
[[nodiscard]] std::vector<Factor> smooth(const StateSpaceModel& model, const std::vector<Assignment>& observations,
                                         const ProjectionPolicy& policy = {});

}  // namespace polyfactor

#endif
