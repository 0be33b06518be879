#ifndef POLYFACTOR_CORE_ERROR_HPP
#define POLYFACTOR_CORE_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace polyfactor {

/// Machine-readable failure categories carried by every FactorError.
enum class ErrorCode {
  missing_variable,
  unsupported,
  unsupported_pair,
  domain_mismatch,
  not_in_scope,
  not_integrable,
  division_by_zero,
  scope_mismatch,
  zero_mass,
  not_normalizable,
  index_out_of_range,
  degenerate,
  zero_scalar,
  quadrature_non_convergence,
  empty_query,
  invalid_argument,
  parse_error,
  schema_error,
  config_invalid,
};

/// Returns the CamelCase name of an error code, e.g. "UnsupportedPair".
std::string_view to_string(ErrorCode code) noexcept;

class FactorError : public std::runtime_error {
 public:
  FactorError(ErrorCode code, const std::string& message);

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace polyfactor

#endif
