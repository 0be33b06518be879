#ifndef POLYFACTOR_CORE_SCOPE_HPP
#define POLYFACTOR_CORE_SCOPE_HPP

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "polyfactor/core/variable.hpp"

namespace polyfactor {

/// Duplicate-free set of variables, always held in canonical (name-lexicographic) order.
///
/// Every factor stores its scope canonically, so two factors over the same variable
/// set compare equal regardless of the order their constructors were given.
class Scope {
 public:
  Scope() = default;
  Scope(std::initializer_list<Variable> vars);
  /// Sorts `vars`; throws InvalidArgument on duplicates.
  explicit Scope(std::vector<Variable> vars);

  [[nodiscard]] std::size_t size() const noexcept { return vars_.size(); }
  [[nodiscard]] bool empty() const noexcept { return vars_.empty(); }
  [[nodiscard]] const Variable& operator[](std::size_t i) const { return vars_[i]; }
  [[nodiscard]] auto begin() const noexcept { return vars_.begin(); }
  [[nodiscard]] auto end() const noexcept { return vars_.end(); }
  [[nodiscard]] const std::vector<Variable>& vars() const noexcept { return vars_; }

  [[nodiscard]] bool contains(std::string_view name) const;
  [[nodiscard]] std::optional<std::size_t> index_of(std::string_view name) const;
  /// Throws NotInScope when absent.
  [[nodiscard]] std::size_t position(std::string_view name) const;
  [[nodiscard]] const Variable* find(std::string_view name) const;

  /// True when every variable of `other` is in this scope.
  [[nodiscard]] bool includes(const Scope& other) const;

  /// Throws DomainMismatch when a shared name has different domains.
  [[nodiscard]] Scope union_with(const Scope& other) const;
  [[nodiscard]] Scope minus(const Scope& other) const;
  [[nodiscard]] Scope intersect(const Scope& other) const;

  [[nodiscard]] Scope discrete_part() const;
  [[nodiscard]] Scope continuous_part() const;
  [[nodiscard]] bool all_discrete() const;
  [[nodiscard]] bool all_continuous() const;

  /// Product of cardinalities over the discrete variables (1 for an empty scope).
  [[nodiscard]] std::size_t joint_cardinality() const;

  [[nodiscard]] std::vector<std::string> names() const;
  [[nodiscard]] std::string to_string() const;

  friend bool operator==(const Scope&, const Scope&) = default;

 private:
  std::vector<Variable> vars_;
};

/// For each variable of `sub` (in its canonical order), its index in `super`.
std::vector<std::size_t> positions_in(const Scope& sub, const Scope& super);

}  // namespace polyfactor

#endif
