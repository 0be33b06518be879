#ifndef POLYFACTOR_CORE_ASSIGNMENT_HPP
#define POLYFACTOR_CORE_ASSIGNMENT_HPP

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "polyfactor/core/scope.hpp"

namespace polyfactor {

/// Values for a set of variables, keyed by name.
///
/// Discrete values are state indices stored as whole-valued doubles so that
/// assignments and particle rows share one layout; `at`/`index` validate them
/// against the variable's domain.
class Assignment {
 public:
  using Map = std::map<std::string, double, std::less<>>;

  Assignment() = default;
  Assignment(std::initializer_list<std::pair<const std::string, double>> entries);

  void set(std::string name, double value);

  [[nodiscard]] bool contains(std::string_view name) const;
  [[nodiscard]] std::optional<double> find(std::string_view name) const;

  /// Validated value; throws MissingVariable or IndexOutOfRange.
  [[nodiscard]] double at(const Variable& v) const;
  /// Validated discrete index.
  [[nodiscard]] std::size_t index(const Variable& v) const;

  /// Values of `scope`'s variables in canonical order (all must be present).
  [[nodiscard]] std::vector<double> values_for(const Scope& scope) const;

  [[nodiscard]] Assignment restricted_to(const Scope& scope) const;
  /// Entries of `other` override entries of this.
  [[nodiscard]] Assignment merged(const Assignment& other) const;

  [[nodiscard]] const Map& entries() const noexcept { return entries_; }
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }

  [[nodiscard]] std::string to_string() const;

  friend bool operator==(const Assignment&, const Assignment&) = default;

 private:
  Map entries_;
};

/// Validates a value against a variable's domain; throws IndexOutOfRange for bad discrete indices.
void check_value(const Variable& v, double value);

}  // namespace polyfactor

#endif
