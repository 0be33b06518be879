#ifndef POLYFACTOR_TABLE_SPARSE_TABLE_FACTOR_HPP
#define POLYFACTOR_TABLE_SPARSE_TABLE_FACTOR_HPP

#include <cstddef>
#include <map>
#include <vector>

#include "polyfactor/core/factor.hpp"
#include "polyfactor/table/table_factor.hpp"

namespace polyfactor {

/// Discrete factor as a finite map from joint assignments to strictly positive values;
/// absent assignments are zero. Keys are linear indices in the canonical row-major layout.
class SparseTableFactor final : public FactorImpl {
 public:
  static constexpr std::string_view kTag = "sparse";

  using Entries = std::map<std::size_t, double>;

  /// Zero values are dropped; negative or non-finite values are rejected.
  SparseTableFactor(Scope scope, Entries entries);

  static Factor make(Scope scope, Entries entries);

  [[nodiscard]] std::string_view tag() const noexcept override { return kTag; }
  [[nodiscard]] const Entries& entries() const noexcept { return entries_; }
  [[nodiscard]] const std::vector<std::size_t>& strides() const noexcept { return strides_; }
  [[nodiscard]] std::size_t cell_count() const noexcept { return cells_; }
  [[nodiscard]] double total() const;

  [[nodiscard]] double evaluate(const Assignment& a) const override;
  [[nodiscard]] double log_scalar() const override;
  [[nodiscard]] Factor sum_out(const Scope& vars) const override;
  [[nodiscard]] Factor reduce(const Assignment& evidence) const override;
  [[nodiscard]] Factor scaled(double log_factor) const override;
  [[nodiscard]] Factor renamed(const RenameMap& mapping) const override;
  [[nodiscard]] bool is_zero() const override { return entries_.empty(); }
  [[nodiscard]] std::unique_ptr<PointEvaluator> make_evaluator(const Scope& layout) const override;
  [[nodiscard]] std::unique_ptr<ConditionalSampler> make_sampler(const Scope& given) const override;
  [[nodiscard]] std::string describe() const override;

  [[nodiscard]] static Factor multiply(const SparseTableFactor& f, const SparseTableFactor& g);
  [[nodiscard]] static Factor divide(const SparseTableFactor& f, const SparseTableFactor& g);
  [[nodiscard]] static Factor add(const SparseTableFactor& f, const SparseTableFactor& g);

 private:
  std::vector<std::size_t> strides_;
  std::size_t cells_;
  Entries entries_;
};

[[nodiscard]] Factor to_sparse(const TableFactor& f);
[[nodiscard]] Factor to_dense(const SparseTableFactor& f);

/// Result cell count up to which mixed dense/sparse operations produce dense results.
inline constexpr std::size_t kDenseCellLimit = std::size_t{1} << 20;

}  // namespace polyfactor

#endif
