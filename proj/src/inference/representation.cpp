#include "polyfactor/inference/representation.hpp"

#include <array>
#include <utility>

#include "polyfactor/core/rng.hpp"
#include "polyfactor/sample/sample_factor.hpp"

namespace polyfactor {

namespace {

constexpr std::array<std::pair<std::string_view, Representation>, 5> kNames{{
    {"table", Representation::table},
    {"gaussian", Representation::gaussian},
    {"sample", Representation::sample},
    {"hybrid-parametric", Representation::hybrid_parametric},
    {"hybrid-sample", Representation::hybrid_sample},
}};

}  // namespace

Representation parse_representation(std::string_view name) {
  for (const auto& [n, rep] : kNames) {
    if (n == name) {
      return rep;
    }
  }
  fail(ErrorCode::invalid_argument, "unknown representation '" + std::string(name) +
                                        "' (expected table, gaussian, sample, hybrid-parametric or hybrid-sample)");
}

std::string_view to_string(Representation rep) noexcept {
  for (const auto& [n, r] : kNames) {
    if (r == rep) {
      return n;
    }
  }
  return "?";
}

bool is_particle(Representation rep) noexcept {
  return rep == Representation::sample || rep == Representation::hybrid_sample;
}

void check_representation(const StateSpaceModel& model, Representation rep) {
  if (rep == Representation::table && !model.state.all_discrete()) {
    fail(ErrorCode::invalid_argument, "representation 'table' needs an all-discrete state, got " +
                                          model.state.to_string());
  }
  if (rep == Representation::gaussian && !model.state.all_continuous()) {
    fail(ErrorCode::invalid_argument, "representation 'gaussian' needs an all-continuous state, got " +
                                          model.state.to_string());
  }
}

Factor initial_factor(const StateSpaceModel& model, const RunSettings& settings) {
  check_representation(model, settings.representation);
  if (!is_particle(settings.representation)) {
    return model.prior;
  }
  if (settings.particles == 0) {
    fail(ErrorCode::invalid_argument, "particle count must be positive");
  }
  Rng rng = Rng(settings.seed).split("filter/particles");
  return sample_from(model.prior, settings.particles, rng);
}

FilterResult run_filter(const StateSpaceModel& model, const std::vector<Assignment>& observations,
                        const RunSettings& settings) {
  return filter_from(initial_factor(model, settings), model, observations, settings.policy);
}

}  // namespace polyfactor
