#ifndef POLYFACTOR_CORE_OPERATIONS_HPP
#define POLYFACTOR_CORE_OPERATIONS_HPP

#include "polyfactor/core/factor.hpp"

namespace polyfactor {

// The five factor operations plus normalization. Each validates its arguments
// and dispatches to the representation-specific implementation.

[[nodiscard]] double evaluate(const Factor& f, const Assignment& a);

/// Pointwise product over the union scope.
[[nodiscard]] Factor multiply(const Factor& f, const Factor& g);
/// Sums (discrete) or integrates (continuous) `vars` out of `f`.
[[nodiscard]] Factor sum_out(const Factor& f, const Scope& vars);
/// Fixes evidence variables; evidence on variables outside the scope is ignored.
[[nodiscard]] Factor reduce(const Factor& f, const Assignment& evidence);
/// Pointwise quotient; g's scope must lie within f's (or g is a scalar).
[[nodiscard]] Factor divide(const Factor& f, const Factor& g);
/// Pointwise sum of two factors over the same scope.
[[nodiscard]] Factor add(const Factor& f, const Factor& g);
/// f divided by its total mass.
[[nodiscard]] Factor normalize(const Factor& f);

/// Relabels variables (domains unchanged).
[[nodiscard]] Factor rename(const Factor& f, const RenameMap& mapping);

/// ln of the value of an empty-scope factor.
[[nodiscard]] double log_scalar(const Factor& scalar);
/// ln of the total mass (sum/integral over the full scope).
[[nodiscard]] double log_total_mass(const Factor& f);

inline Factor operator*(const Factor& f, const Factor& g) { return multiply(f, g); }
inline Factor operator/(const Factor& f, const Factor& g) { return divide(f, g); }
inline Factor operator+(const Factor& f, const Factor& g) { return add(f, g); }

}  // namespace polyfactor

#endif
