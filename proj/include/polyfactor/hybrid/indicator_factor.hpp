#ifndef POLYFACTOR_HYBRID_INDICATOR_FACTOR_HPP
#define POLYFACTOR_HYBRID_INDICATOR_FACTOR_HPP

#include <span>
#include <vector>

#include "polyfactor/core/factor.hpp"
#include "polyfactor/gaussian/linalg.hpp"
#include "polyfactor/hybrid/truncated_gaussian.hpp"

namespace polyfactor {

/// Half-open axis-aligned box [lower, upper) over an indicator's continuous variables.
struct Region {
  Vector lower;
  Vector upper;
  /// An empty region (used once every continuous variable has been reduced away from it).
  bool empty = false;

  [[nodiscard]] bool contains(std::span<const double> x) const;
};

/// Value exp(log_scale) inside the region selected by the discrete selectors, 0 elsewhere.
///
/// Regions are listed row-major over the canonical order of the selector scope; with no
/// selectors there is exactly one region.
class IndicatorFactor final : public FactorImpl {
 public:
  static constexpr std::string_view kTag = "indicator";

  IndicatorFactor(Scope selectors, Scope continuous, std::vector<Region> regions, double log_scale = 0.0);

  /// Collapses to a table when no continuous variable remains.
  static Factor make(Scope selectors, Scope continuous, std::vector<Region> regions, double log_scale = 0.0);

  [[nodiscard]] std::string_view tag() const noexcept override { return kTag; }
  [[nodiscard]] const Scope& selectors() const noexcept { return selectors_; }
  [[nodiscard]] const Scope& continuous() const noexcept { return continuous_; }
  [[nodiscard]] const std::vector<Region>& regions() const noexcept { return regions_; }
  [[nodiscard]] double log_scale() const noexcept { return log_scale_; }

  /// Selector-free indicator of one region.
  [[nodiscard]] Factor branch(std::size_t index) const;
  /// The region's bounds keyed by variable name (unbounded dimensions omitted).
  [[nodiscard]] Box box(std::size_t index) const;

  [[nodiscard]] double evaluate(const Assignment& a) const override;
  [[nodiscard]] Factor sum_out(const Scope& vars) const override;
  [[nodiscard]] Factor reduce(const Assignment& evidence) const override;
  [[nodiscard]] Factor scaled(double log_factor) const override;
  [[nodiscard]] Factor renamed(const RenameMap& mapping) const override;
  [[nodiscard]] bool is_zero() const override;
  [[nodiscard]] std::unique_ptr<PointEvaluator> make_evaluator(const Scope& layout) const override;
  /// Draws selectors given every continuous variable.
  [[nodiscard]] std::unique_ptr<ConditionalSampler> make_sampler(const Scope& given) const override;
  [[nodiscard]] std::string describe() const override;

  /// Restriction of a Gaussian-family factor to a selector-free indicator's region.
  [[nodiscard]] static Factor restrict(const IndicatorFactor& indicator, const Factor& g);
  /// Intersection of two selector-free indicators.
  [[nodiscard]] static Factor intersect(const IndicatorFactor& f, const IndicatorFactor& g);

 private:
  Scope selectors_;
  Scope continuous_;
  std::vector<Region> regions_;
  double log_scale_;
};

/// Indicator of the four quadrants of (x, y) selected by a 4-state variable:
/// 0 = (+,+), 1 = (−,+), 2 = (−,−), 3 = (+,−), with [0, ∞) counted as positive.
[[nodiscard]] Factor quadrant_indicator(const Variable& selector, const Variable& x, const Variable& y);

void register_indicator_kernels(DispatchRegistry& registry);

}  // namespace polyfactor

#endif
