#include "polyfactor/inference/model.hpp"

namespace polyfactor {

namespace {

void check_declared(const Scope& declared, const Factor& f, const std::string& where) {
  for (const auto& v : f.scope()) {
    const Variable* d = declared.find(v.name());
    if (d == nullptr) {
      fail(ErrorCode::schema_error, where + " uses undeclared variable '" + v.name() + "'");
    }
    if (!(*d == v)) {
      fail(ErrorCode::schema_error,
           where + " declares '" + v.name() + "' as " + to_string(v) + " but the model has " + to_string(*d));
    }
  }
}

void check_within(const Scope& allowed, const Scope& required, const Factor& f, const std::string& where) {
  check_declared(allowed, f, where);
  if (!f.scope().includes(required)) {
    fail(ErrorCode::schema_error, where + " must cover " + required.to_string() + ", got " + f.scope().to_string());
  }
}

}  // namespace

Scope FactorGraphModel::scope() const { return Scope(variables); }

void FactorGraphModel::validate() const {
  const Scope declared = scope();
  for (std::size_t i = 0; i < factors.size(); ++i) {
    check_declared(declared, factors[i], "factor " + std::to_string(i));
  }
}

std::string previous_name(std::string_view name) { return std::string(name) + std::string(kPreviousSuffix); }

Scope previous_scope(const Scope& state) {
  std::vector<Variable> vars;
  for (const auto& v : state) {
    vars.push_back(v.renamed(previous_name(v.name())));
  }
  return Scope(std::move(vars));
}

RenameMap to_previous(const Scope& state) {
  RenameMap m;
  for (const auto& v : state) {
    m.emplace(v.name(), previous_name(v.name()));
  }
  return m;
}

RenameMap from_previous(const Scope& state) {
  RenameMap m;
  for (const auto& v : state) {
    m.emplace(previous_name(v.name()), v.name());
  }
  return m;
}

void StateSpaceModel::validate() const {
  if (state.empty()) {
    fail(ErrorCode::schema_error, "state-space model has no state variables");
  }
  if (observed.empty()) {
    fail(ErrorCode::schema_error, "state-space model has no observation variables");
  }
  if (!state.intersect(observed).empty()) {
    fail(ErrorCode::schema_error, "variables " + state.intersect(observed).to_string() + " are both state and observed");
  }
  check_within(state, state, prior, "prior");
  check_within(previous_scope(state).union_with(state), state, transition, "transition");
  check_within(state.union_with(observed), observed, observation, "observation");
}

}  // namespace polyfactor
