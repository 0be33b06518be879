#ifndef POLYFACTOR_INFERENCE_ELIMINATION_HPP
#define POLYFACTOR_INFERENCE_ELIMINATION_HPP

#include <optional>
#include <vector>

#include "polyfactor/inference/model.hpp"

namespace polyfactor {

/// Greedy min-fill order over the interaction graph of the model's factors, excluding
/// query and evidence variables. Ties go to the lexicographically smaller name.
[[nodiscard]] std::vector<Variable> elimination_order(const FactorGraphModel& model, const Scope& query,
                                                      const Assignment& evidence = {});

/// Normalized posterior over `query` given `evidence` by variable elimination.
///
/// `order` overrides the min-fill order; it must list exactly the variables that are
/// neither queried nor observed. Throws EmptyQuery for an empty query.
[[nodiscard]] Factor variable_elimination(const FactorGraphModel& model, const Scope& query,
                                          const Assignment& evidence = {},
                                          const std::optional<std::vector<Variable>>& order = std::nullopt);

}  // namespace polyfactor

#endif
