#ifndef POLYFACTOR_INFERENCE_MODEL_HPP
#define POLYFACTOR_INFERENCE_MODEL_HPP

#include <string>
#include <vector>

#include "polyfactor/core/factor.hpp"

namespace polyfactor {

/// A set of declared variables and the factors whose product is the (unnormalized) joint.
struct FactorGraphModel {
  std::string name;
  std::string description;
  std::vector<Variable> variables;
  std::vector<Factor> factors;

  /// Scope of the declared variables; throws InvalidArgument on duplicates.
  [[nodiscard]] Scope scope() const;
  /// Throws SchemaError when a factor mentions an undeclared variable (or a declared
  /// one with a different domain).
  void validate() const;
};

/// Suffix naming the previous-step copy of a state variable in transition factors.
inline constexpr std::string_view kPreviousSuffix = "_prev";

[[nodiscard]] std::string previous_name(std::string_view name);
[[nodiscard]] Scope previous_scope(const Scope& state);
/// X → X_prev for every state variable.
[[nodiscard]] RenameMap to_previous(const Scope& state);
/// X_prev → X for every state variable.
[[nodiscard]] RenameMap from_previous(const Scope& state);

/// Time-homogeneous state-space model.
///
/// The prior is over the state at t = 0, the transition over the previous-step copies
/// (named with kPreviousSuffix) and the current state, and the observation over the
/// current state and the observation variables.
struct StateSpaceModel {
  std::string name;
  std::string description;
  Scope state;
  Scope observed;
  Factor prior;
  Factor transition;
  Factor observation;

  /// Throws SchemaError when a factor's scope does not match the convention above.
  void validate() const;
};

}  // namespace polyfactor

#endif
