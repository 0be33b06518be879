#ifndef POLYFACTOR_HYBRID_CONDITIONAL_FACTOR_HPP
#define POLYFACTOR_HYBRID_CONDITIONAL_FACTOR_HPP

#include <functional>
#include <vector>

#include "polyfactor/core/dispatch.hpp"
#include "polyfactor/core/factor.hpp"

namespace polyfactor {

/// Mixed factor: one continuous factor (a branch) per joint assignment of the discrete scope.
///
/// Branches are stored densely, row-major over the canonical order of the discrete
/// scope, and every branch has exactly the continuous scope.
class ConditionalFactor final : public FactorImpl {
 public:
  static constexpr std::string_view kTag = "conditional";

  ConditionalFactor(Scope discrete, Scope continuous, std::vector<Factor> branches);

  /// Returns the only branch when the discrete scope is empty and a table of branch
  /// values when the continuous scope is empty.
  static Factor make(Scope discrete, Scope continuous, std::vector<Factor> branches);
  /// Branch for each discrete assignment produced by `branch`.
  static Factor build(const Scope& discrete, const Scope& continuous,
                      const std::function<Factor(const Assignment&)>& branch);

  [[nodiscard]] std::string_view tag() const noexcept override { return kTag; }
  [[nodiscard]] const Scope& discrete_scope() const noexcept { return discrete_; }
  [[nodiscard]] const Scope& continuous_scope() const noexcept { return continuous_; }
  [[nodiscard]] const std::vector<Factor>& branches() const noexcept { return branches_; }
  /// Branch selected by the discrete values in `a`.
  [[nodiscard]] const Factor& branch_for(const Assignment& a) const;
  [[nodiscard]] std::size_t index_of(const Assignment& a) const;
  /// Discrete assignment of a branch index.
  [[nodiscard]] Assignment assignment_of(std::size_t index) const;

  [[nodiscard]] double evaluate(const Assignment& a) const override;
  [[nodiscard]] Factor sum_out(const Scope& vars) const override;
  [[nodiscard]] Factor reduce(const Assignment& evidence) const override;
  [[nodiscard]] Factor scaled(double log_factor) const override;
  [[nodiscard]] Factor renamed(const RenameMap& mapping) const override;
  [[nodiscard]] bool is_zero() const override;
  [[nodiscard]] std::unique_ptr<PointEvaluator> make_evaluator(const Scope& layout) const override;
  [[nodiscard]] std::unique_ptr<ConditionalSampler> make_sampler(const Scope& given) const override;
  [[nodiscard]] std::string describe() const override;

 private:
  Scope discrete_;
  Scope continuous_;
  std::vector<Factor> branches_;
  std::vector<std::size_t> strides_;
};

/// Applies `op` branch by branch over the union of the discrete index scopes of f and g.
///
/// Conditional factors contribute their branches, tables their cell values as scalars,
/// indicators their per-selector regions; any other factor is shared by every branch.
[[nodiscard]] Factor lift(BinaryOp op, const Factor& f, const Factor& g);

/// Registers the truncated, indicator and conditional kernels.
void register_hybrid_kernels(DispatchRegistry& registry);

}  // namespace polyfactor

#endif
