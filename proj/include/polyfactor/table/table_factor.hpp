#ifndef POLYFACTOR_TABLE_TABLE_FACTOR_HPP
#define POLYFACTOR_TABLE_TABLE_FACTOR_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "polyfactor/core/factor.hpp"

namespace polyfactor {

class DispatchRegistry;

/// Dense discrete factor: a flat array of nonnegative values, row-major over the
/// canonical scope order (the last variable varies fastest).
class TableFactor final : public FactorImpl {
 public:
  static constexpr std::string_view kTag = "table";

  struct CanonicalLayout {};

  /// `values` are row-major over `vars` in the order given; they are permuted into canonical layout.
  TableFactor(std::vector<Variable> vars, std::vector<double> values);
  TableFactor(Scope scope, std::vector<double> values, CanonicalLayout);

  static Factor make(std::vector<Variable> vars, std::vector<double> values);
  static Factor scalar(double value);
  static Factor filled(const Scope& scope, double value);
  /// Indicator of X = index.
  static Factor one_hot(const Variable& v, std::size_t index);

  [[nodiscard]] std::string_view tag() const noexcept override { return kTag; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] const std::vector<std::size_t>& strides() const noexcept { return strides_; }
  [[nodiscard]] double total() const;
  [[nodiscard]] std::size_t linear_index(const Assignment& a) const;

  [[nodiscard]] double evaluate(const Assignment& a) const override;
  [[nodiscard]] double log_scalar() const override;
  [[nodiscard]] Factor sum_out(const Scope& vars) const override;
  [[nodiscard]] Factor reduce(const Assignment& evidence) const override;
  [[nodiscard]] Factor scaled(double log_factor) const override;
  [[nodiscard]] Factor renamed(const RenameMap& mapping) const override;
  [[nodiscard]] bool is_zero() const override;
  [[nodiscard]] std::unique_ptr<PointEvaluator> make_evaluator(const Scope& layout) const override;
  [[nodiscard]] std::unique_ptr<ConditionalSampler> make_sampler(const Scope& given) const override;
  [[nodiscard]] std::string describe() const override;

  [[nodiscard]] static Factor multiply(const TableFactor& f, const TableFactor& g);
  [[nodiscard]] static Factor divide(const TableFactor& f, const TableFactor& g);
  [[nodiscard]] static Factor add(const TableFactor& f, const TableFactor& g);

 private:
  std::vector<std::size_t> strides_;
  std::vector<double> values_;
};

/// Row-major strides over a discrete scope in canonical order.
std::vector<std::size_t> row_major_strides(const Scope& scope);

/// Registers table kernels (dense, sparse, mixed) with the registry.
void register_table_kernels(DispatchRegistry& registry);

}  // namespace polyfactor

#endif
