#include "polyfactor/inference/filtering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "polyfactor/core/operations.hpp"
#include "polyfactor/gaussian/canonical_gaussian.hpp"
#include "polyfactor/gaussian/mixture_factor.hpp"
#include "polyfactor/hybrid/conditional_factor.hpp"
#include "polyfactor/hybrid/truncated_gaussian.hpp"
#include "polyfactor/sample/sample_factor.hpp"

namespace polyfactor {

namespace {

bool is_projectable(const Factor& f) {
  return f.tag() == MixtureFactor::kTag || f.tag() == TruncatedGaussian::kTag;
}

Factor gaussian_projection(const Factor& f) {
  try {
    return CanonicalGaussian::from_moments(moments_of(f));
  } catch (const FactorError& e) {
    if (e.code() != ErrorCode::zero_mass) {
      throw;
    }
    return CanonicalGaussian::zero(f.scope());
  }
}

template <class Fn>
auto at_step(const char* stage, std::size_t t, Fn&& fn) {
  try {
    return fn();
  } catch (const FactorError& e) {
    fail(e.code(), fmt::format("{} step {}: {}", stage, t, e.detail()));
  }
}

}  // namespace

Factor ProjectionPolicy::project(const Factor& f) const {
  if (const auto* s = f.as<SampleFactor>()) {
    if (resample && effective_sample_size(*s) < ess_fraction * static_cast<double>(s->size())) {
      Rng rng(s->lineage_seed("resample"));
      return resample_systematic(*s, s->size(), rng);
    }
    return f;
  }
  if (!moment_match) {
    return f;
  }
  if (is_projectable(f)) {
    return gaussian_projection(f);
  }
  if (const auto* c = f.as<ConditionalFactor>()) {
    const auto& branches = c->branches();
    if (std::none_of(branches.begin(), branches.end(), is_projectable)) {
      return f;
    }
    std::vector<Factor> projected;
    projected.reserve(branches.size());
    for (const auto& b : branches) {
      projected.push_back(is_projectable(b) ? gaussian_projection(b) : b);
    }
    return ConditionalFactor::make(c->discrete_scope(), c->continuous_scope(), std::move(projected));
  }
  return f;
}

std::string ProjectionPolicy::describe() const {
  return fmt::format("moment_match={} resample={} ess_fraction={}", moment_match, resample, ess_fraction);
}

FilterStep filter_step(const Factor& prior, const StateSpaceModel& model, const Assignment& y,
                       const ProjectionPolicy& policy) {
  (void)y.values_for(model.observed);
  const Factor previous = rename(prior, to_previous(model.state));
  const Factor predict = sum_out(multiply(model.transition, previous), previous.scope());
  const Factor phi = multiply(predict, reduce(model.observation, y));
  const Factor evidence = sum_out(phi, model.state);
  const double loglik = log_scalar(evidence);
  if (!(loglik > -std::numeric_limits<double>::infinity())) {
    fail(ErrorCode::zero_mass, "observation " + y.to_string() + " has zero predictive probability");
  }
  return {policy.project(divide(phi, evidence)), loglik};
}

FilterResult filter_from(const Factor& initial, const StateSpaceModel& model,
                         const std::vector<Assignment>& observations, const ProjectionPolicy& policy) {
  if (observations.empty()) {
    fail(ErrorCode::invalid_argument, "filtering needs at least one observation");
  }
  FilterResult result;
  Factor current = policy.project(initial);
  for (std::size_t t = 0; t < observations.size(); ++t) {
    auto step = at_step("filter", t + 1, [&] { return filter_step(current, model, observations[t], policy); });
    current = step.posterior;
    result.posteriors.push_back(std::move(step.posterior));
    result.log_likelihoods.push_back(step.log_likelihood);
    result.total_log_likelihood += step.log_likelihood;
  }
  return result;
}

FilterResult filter(const StateSpaceModel& model, const std::vector<Assignment>& observations,
                    const ProjectionPolicy& policy) {
  return filter_from(model.prior, model, observations, policy);
}

std::vector<Factor> smooth(const StateSpaceModel& model, const std::vector<Assignment>& observations,
                           const ProjectionPolicy& policy) {
  const FilterResult filtered = filter(model, observations, policy);
  const auto& f = filtered.posteriors;
  if (f.front().tag() == SampleFactor::kTag) {
    fail(ErrorCode::unsupported, "smoothing divides by the predictive, which particle factors do not support");
  }
  const RenameMap back_names = from_previous(model.state);
  const RenameMap prev_names = to_previous(model.state);
  const Scope prev_scope = previous_scope(model.state);
  std::vector<Factor> smoothed(f);
  for (std::size_t t = f.size() - 1; t-- > 0;) {
    smoothed[t] = at_step("smoothing", t + 1, [&] {
      const Factor previous = rename(f[t], prev_names);
      const Factor predictive =
          policy.project(sum_out(multiply(model.transition, previous), prev_scope.intersect(previous.scope())));
      const Factor ratio = divide(smoothed[t + 1], predictive);
      const Factor message = sum_out(multiply(model.transition, ratio), model.state);
      return policy.project(rename(multiply(previous, message), back_names));
    });
  }
  return smoothed;
}

}  // namespace polyfactor
