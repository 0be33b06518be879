#ifndef POLYFACTOR_CORE_FACTOR_HPP
#define POLYFACTOR_CORE_FACTOR_HPP

#include <cmath>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>

#include "polyfactor/core/assignment.hpp"
#include "polyfactor/core/error.hpp"
#include "polyfactor/core/rng.hpp"
#include "polyfactor/core/scope.hpp"

namespace polyfactor {

class Factor;
class FactorImpl;

using RenameMap = std::map<std::string, std::string, std::less<>>;

/// Pointwise evaluation against a fixed column layout, prepared once and applied to many rows.
class PointEvaluator {
 public:
  virtual ~PointEvaluator() = default;
  /// `row` holds one value per variable of the layout scope, in canonical order.
  virtual double operator()(std::span<const double> row) const = 0;
  /// ln of the value; representations with exponential densities override this to avoid underflow.
  virtual double log_value(std::span<const double> row) const { return std::log((*this)(row)); }
};

/// Draws the variables of a factor that are not fixed by a conditioning row.
///
/// For a factor f over (given ∪ drawn), `log_mass(x)` is ln ∫ f(x, y) dy and `draw`
/// samples y from f(x, ·) normalized. Discrete drawn values are written as indices.
class ConditionalSampler {
 public:
  explicit ConditionalSampler(Scope drawn) : drawn_(std::move(drawn)) {}
  virtual ~ConditionalSampler() = default;

  [[nodiscard]] const Scope& drawn_scope() const noexcept { return drawn_; }

  /// `given` follows the canonical order of the conditioning scope.
  [[nodiscard]] virtual double log_mass(std::span<const double> given) const = 0;
  /// Writes drawn values (canonical order of drawn_scope()) to `out`; returns log_mass(given).
  virtual double draw(std::span<const double> given, std::span<double> out, Rng& rng) const = 0;

 private:
  Scope drawn_;
};

/// Value handle for an immutable factor of any representation.
///
/// Factors are shared, never mutated, and safe to pass between threads.
class Factor {
 public:
  explicit Factor(std::shared_ptr<const FactorImpl> impl);

  template <class Rep, class... Args>
  static Factor make(Args&&... args) {
    static_assert(std::is_base_of_v<FactorImpl, Rep>);
    return Factor(std::make_shared<const Rep>(std::forward<Args>(args)...));
  }

  [[nodiscard]] const Scope& scope() const noexcept;
  [[nodiscard]] std::string_view tag() const noexcept;
  [[nodiscard]] const FactorImpl& impl() const noexcept { return *impl_; }
  [[nodiscard]] const std::shared_ptr<const FactorImpl>& shared() const noexcept { return impl_; }

  template <class Rep>
  [[nodiscard]] const Rep* as() const noexcept {
    return dynamic_cast<const Rep*>(impl_.get());
  }

  /// Throws InvalidArgument when the representation is not `Rep`.
  template <class Rep>
  [[nodiscard]] const Rep& get() const {
    if (const auto* rep = as<Rep>()) {
      return *rep;
    }
    fail(ErrorCode::invalid_argument,
         "expected representation '" + std::string(Rep::kTag) + "', got '" + std::string(tag()) + "'");
  }

  [[nodiscard]] std::string describe() const;

 private:
  std::shared_ptr<const FactorImpl> impl_;
};

/// Base class of every factor representation.
///
/// Unary operations are virtual; binary operations are resolved by the dispatch
/// registry on the pair of representation tags. Implementations receive arguments
/// that the generic layer has already validated (non-empty variable sets that lie
/// inside the scope, evidence restricted to scope variables).
class FactorImpl {
 public:
  virtual ~FactorImpl() = default;
  FactorImpl(const FactorImpl&) = delete;
  FactorImpl& operator=(const FactorImpl&) = delete;

  [[nodiscard]] const Scope& scope() const noexcept { return scope_; }
  [[nodiscard]] virtual std::string_view tag() const noexcept = 0;

  /// Value at `a` (which covers the scope).
  [[nodiscard]] virtual double evaluate(const Assignment& a) const = 0;
  /// ln of the value of an empty-scope factor.
  [[nodiscard]] virtual double log_scalar() const;

  [[nodiscard]] virtual Factor sum_out(const Scope& vars) const = 0;
  [[nodiscard]] virtual Factor reduce(const Assignment& evidence) const = 0;
  /// Pointwise multiplication by exp(log_factor).
  [[nodiscard]] virtual Factor scaled(double log_factor) const = 0;
  /// Division by the scalar exp(log_divisor); a zero divisor is an error unless this factor is zero.
  [[nodiscard]] virtual Factor divided_by_scalar(double log_divisor) const;
  [[nodiscard]] virtual Factor renamed(const RenameMap& mapping) const = 0;

  /// True when the factor is identically zero.
  [[nodiscard]] virtual bool is_zero() const { return false; }

  /// Default: assembles an Assignment per row and calls evaluate.
  [[nodiscard]] virtual std::unique_ptr<PointEvaluator> make_evaluator(const Scope& layout) const;
  /// Default: Unsupported.
  [[nodiscard]] virtual std::unique_ptr<ConditionalSampler> make_sampler(const Scope& given) const;

  [[nodiscard]] virtual std::string describe() const;

 protected:
  explicit FactorImpl(Scope scope) : scope_(std::move(scope)) {}

 private:
  Scope scope_;
};

/// Applies a rename map to a scope (unmapped variables keep their names).
Scope rename_scope(const Scope& scope, const RenameMap& mapping);

}  // namespace polyfactor

#endif
