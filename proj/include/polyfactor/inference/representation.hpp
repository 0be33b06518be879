#ifndef POLYFACTOR_INFERENCE_REPRESENTATION_HPP
#define POLYFACTOR_INFERENCE_REPRESENTATION_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "polyfactor/inference/filtering.hpp"

namespace polyfactor {

enum class Representation { table, gaussian, sample, hybrid_parametric, hybrid_sample };

/// "table", "gaussian", "sample", "hybrid-parametric", "hybrid-sample"; InvalidArgument otherwise.
[[nodiscard]] Representation parse_representation(std::string_view name);
[[nodiscard]] std::string_view to_string(Representation rep) noexcept;
[[nodiscard]] bool is_particle(Representation rep) noexcept;

struct RunSettings {
  Representation representation = Representation::hybrid_parametric;
  std::size_t particles = 10000;
  std::uint64_t seed = 1;
  ProjectionPolicy policy{};
};

/// Throws InvalidArgument when the representation cannot hold the model's state
/// (table needs a discrete state, gaussian a continuous one).
void check_representation(const StateSpaceModel& model, Representation rep);

/// The model prior for parametric representations, or `particles` draws from it
/// (stream "filter/particles" of the seed) for particle ones.
[[nodiscard]] Factor initial_factor(const StateSpaceModel& model, const RunSettings& settings);

/// filter_from(initial_factor(model, settings), model, observations, settings.policy).
[[nodiscard]] FilterResult run_filter(const StateSpaceModel& model, const std::vector<Assignment>& observations,
                                      const RunSettings& settings);

}  // namespace polyfactor

#endif
