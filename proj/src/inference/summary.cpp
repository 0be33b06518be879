#include "polyfactor/inference/summary.hpp"

#include "polyfactor/core/operations.hpp"
#include "polyfactor/gaussian/moments.hpp"
#include "polyfactor/sample/sample_factor.hpp"
#include "polyfactor/table/table_factor.hpp"

namespace polyfactor {

namespace {

void add_marginals(PosteriorSummary& out, const Factor& discrete) {
  const Scope& scope = discrete.scope();
  for (const auto& v : scope) {
    const Factor m = normalize(sum_out(discrete, scope.minus(Scope{v})));
    std::vector<double> p(v.cardinality());
    for (std::size_t k = 0; k < p.size(); ++k) {
      p[k] = evaluate(m, Assignment{{v.name(), static_cast<double>(k)}});
    }
    out.marginal[v.name()] = std::move(p);
  }
}

void add_moments(PosteriorSummary& out, const GaussianMoments& m) {
  for (std::size_t i = 0; i < m.scope.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out.mean[m.scope[i].name()] = m.mean(k);
    out.variance[m.scope[i].name()] = m.covariance(k, k);
  }
}

}  // namespace

PosteriorSummary summarize(const Factor& posterior) {
  PosteriorSummary out;
  const Scope discrete = posterior.scope().discrete_part();
  const Scope continuous = posterior.scope().continuous_part();
  if (const auto* s = posterior.as<SampleFactor>()) {
    const auto estimate = estimate_moments(*s);
    if (estimate.continuous) {
      add_moments(out, *estimate.continuous);
    }
    if (estimate.histogram) {
      add_marginals(out, *estimate.histogram);
    }
    return out;
  }
  const Factor normalized = normalize(posterior);
  if (!continuous.empty()) {
    add_moments(out, moments_of(discrete.empty() ? normalized : sum_out(normalized, discrete)));
  }
  if (!discrete.empty()) {
    add_marginals(out, continuous.empty() ? normalized : sum_out(normalized, continuous));
  }
  return out;
}

}  // namespace polyfactor
