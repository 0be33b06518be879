#ifndef POLYFACTOR_CORE_VARIABLE_HPP
#define POLYFACTOR_CORE_VARIABLE_HPP

#include <cstddef>
#include <string>

namespace polyfactor {

enum class Domain { discrete, continuous };

/// A named random variable. Discrete variables take indices in [0, cardinality);
/// continuous variables are real scalars (multivariate quantities are tuples of these).
class Variable {
 public:
  static Variable discrete(std::string name, std::size_t cardinality);
  static Variable continuous(std::string name);

  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] Domain domain() const noexcept { return domain_; }
  [[nodiscard]] bool is_discrete() const noexcept { return domain_ == Domain::discrete; }
  [[nodiscard]] bool is_continuous() const noexcept { return domain_ == Domain::continuous; }
  /// Number of states; 0 for continuous variables.
  [[nodiscard]] std::size_t cardinality() const noexcept { return cardinality_; }

  /// Same domain, different name.
  [[nodiscard]] Variable renamed(std::string name) const;

  friend bool operator==(const Variable&, const Variable&) = default;

 private:
  Variable(std::string name, Domain domain, std::size_t cardinality);

  std::string name_;
  Domain domain_;
  std::size_t cardinality_;
};

std::string to_string(const Variable& v);

}  // namespace polyfactor

#endif
