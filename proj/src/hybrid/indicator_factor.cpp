#include "polyfactor/hybrid/indicator_factor.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "../table/indexing.hpp"
#include "polyfactor/core/dispatch.hpp"
#include "polyfactor/core/operations.hpp"
#include "polyfactor/gaussian/canonical_gaussian.hpp"
#include "polyfactor/gaussian/mixture_factor.hpp"
#include "polyfactor/hybrid/conditional_factor.hpp"
#include "polyfactor/table/table_factor.hpp"

namespace polyfactor {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Region unbounded(std::size_t n) {
  return {Vector::Constant(static_cast<Eigen::Index>(n), -kInf), Vector::Constant(static_cast<Eigen::Index>(n), kInf)};
}

}  // namespace

bool Region::contains(std::span<const double> x) const {
  if (empty) {
    return false;
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (!(x[i] >= lower[k] && x[i] < upper[k])) {
      return false;
    }
  }
  return true;
}

IndicatorFactor::IndicatorFactor(Scope selectors, Scope continuous, std::vector<Region> regions, double log_scale)
    : FactorImpl(selectors.union_with(continuous)), selectors_(std::move(selectors)),
      continuous_(std::move(continuous)), regions_(std::move(regions)), log_scale_(log_scale) {
  if (!selectors_.all_discrete() || !continuous_.all_continuous()) {
    fail(ErrorCode::domain_mismatch, "indicator selectors must be discrete and region variables continuous");
  }
  if (regions_.size() != selectors_.joint_cardinality()) {
    fail(ErrorCode::invalid_argument, "indicator needs one region per selector assignment (" +
                                          std::to_string(selectors_.joint_cardinality()) + "), got " +
                                          std::to_string(regions_.size()));
  }
  const auto n = static_cast<Eigen::Index>(continuous_.size());
  for (const auto& r : regions_) {
    if (r.lower.size() != n || r.upper.size() != n) {
      fail(ErrorCode::invalid_argument, "indicator region dimension does not match " + continuous_.to_string());
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::isnan(r.lower[i]) || std::isnan(r.upper[i]) || r.lower[i] > r.upper[i]) {
        fail(ErrorCode::invalid_argument, "indicator bounds must satisfy lower ≤ upper");
      }
    }
  }
}

Factor IndicatorFactor::make(Scope selectors, Scope continuous, std::vector<Region> regions, double log_scale) {
  if (continuous.empty()) {
    std::vector<double> values;
    values.reserve(regions.size());
    for (const auto& r : regions) {
      values.push_back(r.empty ? 0.0 : std::exp(log_scale));
    }
    return Factor::make<TableFactor>(std::move(selectors), std::move(values), TableFactor::CanonicalLayout{});
  }
  return Factor::make<IndicatorFactor>(std::move(selectors), std::move(continuous), std::move(regions), log_scale);
}

Factor IndicatorFactor::branch(std::size_t index) const { return make({}, continuous_, {regions_.at(index)}, log_scale_); }

Box IndicatorFactor::box(std::size_t index) const {
  const Region& r = regions_.at(index);
  Box out;
  for (std::size_t i = 0; i < continuous_.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (r.empty) {
      out[continuous_[i].name()] = {0.0, 0.0};
    } else if (std::isfinite(r.lower[k]) || std::isfinite(r.upper[k])) {
      out[continuous_[i].name()] = {r.lower[k], r.upper[k]};
    }
  }
  return out;
}

double IndicatorFactor::evaluate(const Assignment& a) const {
  std::size_t index = 0;
  const auto strides = row_major_strides(selectors_);
  for (std::size_t i = 0; i < selectors_.size(); ++i) {
    index += strides[i] * a.index(selectors_[i]);
  }
  const auto x = a.values_for(continuous_);
  return regions_[index].contains(x) ? std::exp(log_scale_) : 0.0;
}

Factor IndicatorFactor::sum_out(const Scope& vars) const {
  (void)vars;
  fail(ErrorCode::not_integrable, "indicator factors cannot be marginalized on their own; multiply them first");
}

Factor IndicatorFactor::reduce(const Assignment& evidence) const {
  std::vector<Variable> fixed_sel;
  std::vector<Variable> fixed_cont;
  for (const auto& v : selectors_) {
    if (evidence.contains(v.name())) {
      fixed_sel.push_back(v);
    }
  }
  for (const auto& v : continuous_) {
    if (evidence.contains(v.name())) {
      fixed_cont.push_back(v);
    }
  }
  Scope rest_sel = selectors_.minus(Scope(fixed_sel));
  Scope rest_cont = continuous_.minus(Scope(fixed_cont));
  const auto strides = row_major_strides(selectors_);
  std::size_t base = 0;
  for (const auto& v : fixed_sel) {
    base += strides[selectors_.position(v.name())] * evidence.index(v);
  }
  const auto keep = positions_in(rest_cont, continuous_);
  std::vector<std::pair<std::size_t, double>> checks;
  for (const auto& v : fixed_cont) {
    checks.emplace_back(continuous_.position(v.name()), *evidence.find(v.name()));
  }
  std::vector<Region> out;
  out.reserve(rest_sel.joint_cardinality());
  for (detail::Odometer odo(rest_sel, {detail::strides_along(rest_sel, selectors_, strides)}); !odo.done();
       odo.advance()) {
    const Region& r = regions_[base + odo.offset(0)];
    Region next{select(r.lower, keep), select(r.upper, keep), r.empty};
    for (const auto& [pos, x] : checks) {
      const auto k = static_cast<Eigen::Index>(pos);
      next.empty = next.empty || !(x >= r.lower[k] && x < r.upper[k]);
    }
    out.push_back(std::move(next));
  }
  return make(std::move(rest_sel), std::move(rest_cont), std::move(out), log_scale_);
}

Factor IndicatorFactor::scaled(double log_factor) const {
  return make(selectors_, continuous_, regions_, log_scale_ + log_factor);
}

Factor IndicatorFactor::renamed(const RenameMap& mapping) const {
  Scope sel = rename_scope(selectors_, mapping);
  Scope cont = rename_scope(continuous_, mapping);
  // Continuous dimensions follow the new canonical order.
  std::vector<std::size_t> from(cont.size());
  for (std::size_t i = 0; i < continuous_.size(); ++i) {
    auto it = mapping.find(continuous_[i].name());
    from[cont.position(it == mapping.end() ? continuous_[i].name() : it->second)] = i;
  }
  std::vector<std::size_t> along(sel.size());
  const auto strides = row_major_strides(selectors_);
  for (std::size_t i = 0; i < selectors_.size(); ++i) {
    auto it = mapping.find(selectors_[i].name());
    along[sel.position(it == mapping.end() ? selectors_[i].name() : it->second)] = strides[i];
  }
  std::vector<Region> out(regions_.size());
  for (detail::Odometer odo(sel, {along}); !odo.done(); odo.advance()) {
    const Region& r = regions_[odo.offset(0)];
    out[odo.position()] = {select(r.lower, from), select(r.upper, from), r.empty};
  }
  return make(std::move(sel), std::move(cont), std::move(out), log_scale_);
}

bool IndicatorFactor::is_zero() const {
  return log_scale_ == -kInf || std::all_of(regions_.begin(), regions_.end(), [](const Region& r) {
           if (r.empty) {
             return true;
           }
           for (Eigen::Index i = 0; i < r.lower.size(); ++i) {
             if (!(r.lower[i] < r.upper[i])) {
               return true;
             }
           }
           return false;
         });
}

namespace {

class IndicatorEvaluator final : public PointEvaluator {
 public:
  IndicatorEvaluator(const IndicatorFactor& f, const Scope& layout)
      : regions_(f.regions()), value_(std::exp(f.log_scale())), sel_positions_(positions_in(f.selectors(), layout)),
        sel_strides_(row_major_strides(f.selectors())), cont_positions_(positions_in(f.continuous(), layout)),
        x_(cont_positions_.size()) {}

  double operator()(std::span<const double> row) const override {
    std::size_t index = 0;
    for (std::size_t i = 0; i < sel_positions_.size(); ++i) {
      index += sel_strides_[i] * static_cast<std::size_t>(row[sel_positions_[i]]);
    }
    for (std::size_t i = 0; i < cont_positions_.size(); ++i) {
      x_[i] = row[cont_positions_[i]];
    }
    return regions_[index].contains(x_) ? value_ : 0.0;
  }

 private:
  std::vector<Region> regions_;
  double value_;
  std::vector<std::size_t> sel_positions_;
  std::vector<std::size_t> sel_strides_;
  std::vector<std::size_t> cont_positions_;
  mutable std::vector<double> x_;
};

class IndicatorSampler final : public ConditionalSampler {
 public:
  IndicatorSampler(const IndicatorFactor& f, const Scope& given)
      : ConditionalSampler(f.scope().minus(given)), regions_(f.regions()), log_scale_(f.log_scale()) {
    const Scope given_sel = f.selectors().intersect(given);
    const auto strides = row_major_strides(f.selectors());
    given_sel_positions_ = positions_in(given_sel, given);
    given_sel_strides_ = detail::strides_along(given_sel, f.selectors(), strides);
    drawn_strides_ = detail::strides_along(drawn_scope(), f.selectors(), strides);
    cont_positions_ = positions_in(f.continuous(), given);
  }

  double log_mass(std::span<const double> given) const override {
    return count(given) == 0 ? -kInf : std::log(static_cast<double>(count(given))) + log_scale_;
  }

  double draw(std::span<const double> given, std::span<double> out, Rng& rng) const override {
    const std::size_t n = count(given);
    if (n == 0) {
      fail(ErrorCode::degenerate, "no selector state contains the conditioning point");
    }
    auto pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
    std::size_t seen = 0;
    detail::Odometer odo(drawn_scope(), {drawn_strides_});
    const std::size_t base = offset(given);
    std::vector<double> x = continuous(given);
    for (; !odo.done(); odo.advance()) {
      if (regions_[base + odo.offset(0)].contains(x) && seen++ == pick) {
        for (std::size_t i = 0; i < drawn_scope().size(); ++i) {
          out[i] = static_cast<double>(odo.counter(i));
        }
        break;
      }
    }
    return std::log(static_cast<double>(n)) + log_scale_;
  }

 private:
  [[nodiscard]] std::size_t offset(std::span<const double> given) const {
    std::size_t base = 0;
    for (std::size_t i = 0; i < given_sel_positions_.size(); ++i) {
      base += given_sel_strides_[i] * static_cast<std::size_t>(given[given_sel_positions_[i]]);
    }
    return base;
  }

  [[nodiscard]] std::vector<double> continuous(std::span<const double> given) const {
    std::vector<double> x(cont_positions_.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = given[cont_positions_[i]];
    }
    return x;
  }

  [[nodiscard]] std::size_t count(std::span<const double> given) const {
    const std::size_t base = offset(given);
    const std::vector<double> x = continuous(given);
    std::size_t n = 0;
    for (detail::Odometer odo(drawn_scope(), {drawn_strides_}); !odo.done(); odo.advance()) {
      n += regions_[base + odo.offset(0)].contains(x) ? 1 : 0;
    }
    return n;
  }

  std::vector<Region> regions_;
  double log_scale_;
  std::vector<std::size_t> given_sel_positions_;
  std::vector<std::size_t> given_sel_strides_;
  std::vector<std::size_t> drawn_strides_;
  std::vector<std::size_t> cont_positions_;
};

}  // namespace

std::unique_ptr<PointEvaluator> IndicatorFactor::make_evaluator(const Scope& layout) const {
  return std::make_unique<IndicatorEvaluator>(*this, layout);
}

std::unique_ptr<ConditionalSampler> IndicatorFactor::make_sampler(const Scope& given) const {
  if (!given.includes(continuous_)) {
    fail(ErrorCode::unsupported, "indicator factors can only draw selectors given every continuous variable");
  }
  return std::make_unique<IndicatorSampler>(*this, scope().intersect(given));
}

std::string IndicatorFactor::describe() const {
  std::ostringstream s;
  s << "indicator" << scope().to_string() << " regions=" << regions_.size();
  if (log_scale_ != 0.0) {
    s << " scale=exp(" << log_scale_ << ")";
  }
  for (std::size_t i = 0; i < regions_.size() && i < 8; ++i) {
    s << (i ? "; " : " ") << "#" << i << ":";
    if (regions_[i].empty) {
      s << " empty";
      continue;
    }
    for (std::size_t d = 0; d < continuous_.size(); ++d) {
      const auto k = static_cast<Eigen::Index>(d);
      s << " " << continuous_[d].name() << " in [" << regions_[i].lower[k] << ", " << regions_[i].upper[k] << ")";
    }
  }
  return s.str();
}

Factor IndicatorFactor::restrict(const IndicatorFactor& indicator, const Factor& g) {
  if (!indicator.selectors_.empty()) {
    fail(ErrorCode::invalid_argument, "restrict needs a selector-free indicator");
  }
  const Scope u = g.scope().union_with(indicator.continuous_);
  if (indicator.regions_[0].empty || indicator.log_scale_ == -kInf) {
    return CanonicalGaussian::zero(u);
  }
  const Box b = indicator.box(0);
  const Scope missing = indicator.continuous_.minus(g.scope());
  Factor wide = missing.empty() ? g : multiply(g, CanonicalGaussian::unit(missing));
  Factor out = [&]() -> Factor {
    if (const auto* t = wide.as<TruncatedGaussian>()) {
      return t->intersected(b);
    }
    if (wide.as<CanonicalGaussian>() != nullptr) {
      Vector lo = Vector::Constant(static_cast<Eigen::Index>(u.size()), -kInf);
      Vector hi = Vector::Constant(static_cast<Eigen::Index>(u.size()), kInf);
      for (const auto& [name, bounds] : b) {
        lo[static_cast<Eigen::Index>(u.position(name))] = bounds.first;
        hi[static_cast<Eigen::Index>(u.position(name))] = bounds.second;
      }
      return TruncatedGaussian::make(wide, lo, hi);
    }
    if (const auto* m = wide.as<MixtureFactor>()) {
      std::vector<Factor> parts;
      for (const auto& c : m->components()) {
        parts.push_back(restrict(indicator, c));
      }
      return MixtureFactor::make(u, parts);
    }
    fail(ErrorCode::unsupported_pair,
         "indicator restriction of representation '" + std::string(wide.tag()) + "' is not supported");
  }();
  return indicator.log_scale_ == 0.0 ? out : out.impl().scaled(indicator.log_scale_);
}

Factor IndicatorFactor::intersect(const IndicatorFactor& f, const IndicatorFactor& g) {
  if (!f.selectors_.empty() || !g.selectors_.empty()) {
    fail(ErrorCode::invalid_argument, "intersect needs selector-free indicators");
  }
  const Scope u = f.continuous_.union_with(g.continuous_);
  Region r = unbounded(u.size());
  r.empty = f.regions_[0].empty || g.regions_[0].empty;
  for (const auto* x : {&f, &g}) {
    for (std::size_t i = 0; i < x->continuous_.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(u.position(x->continuous_[i].name()));
      const auto j = static_cast<Eigen::Index>(i);
      r.lower[k] = std::max(r.lower[k], x->regions_[0].lower[j]);
      r.upper[k] = std::min(r.upper[k], x->regions_[0].upper[j]);
      if (r.lower[k] > r.upper[k]) {
        r.upper[k] = r.lower[k];
      }
    }
  }
  return make({}, u, {std::move(r)}, f.log_scale_ + g.log_scale_);
}

Factor quadrant_indicator(const Variable& selector, const Variable& x, const Variable& y) {
  if (selector.cardinality() != 4) {
    fail(ErrorCode::invalid_argument, "the quadrant selector needs 4 states");
  }
  // Region bounds are listed in (x, y) order and permuted into canonical order below.
  const double signs[4][2] = {{1, 1}, {-1, 1}, {-1, -1}, {1, -1}};
  Scope cont{x, y};
  const bool x_first = cont[0].name() == x.name();
  std::vector<Region> regions;
  for (const auto& s : signs) {
    Region r = unbounded(2);
    for (int d = 0; d < 2; ++d) {
      const Eigen::Index k = (d == 0) == x_first ? 0 : 1;
      if (s[d] > 0) {
        r.lower[k] = 0.0;
      } else {
        r.upper[k] = 0.0;
      }
    }
    regions.push_back(std::move(r));
  }
  return IndicatorFactor::make(Scope{selector}, std::move(cont), std::move(regions));
}

void register_indicator_kernels(DispatchRegistry& registry) {
  const std::string ind(IndicatorFactor::kTag);
  for (const std::string& other : {std::string(CanonicalGaussian::kTag), std::string(TruncatedGaussian::kTag),
                                  std::string(MixtureFactor::kTag)}) {
    registry.register_kernel(BinaryOp::multiply, ind, other, [](const Factor& f, const Factor& g) {
      const auto& i = f.get<IndicatorFactor>();
      if (!i.selectors().empty()) {
        return lift(BinaryOp::multiply, f, g);
      }
      return IndicatorFactor::restrict(i, g);
    });
  }
  registry.register_kernel(BinaryOp::multiply, ind, ind, [](const Factor& f, const Factor& g) {
    const auto& a = f.get<IndicatorFactor>();
    const auto& b = g.get<IndicatorFactor>();
    if (!a.selectors().empty() || !b.selectors().empty()) {
      return lift(BinaryOp::multiply, f, g);
    }
    return IndicatorFactor::intersect(a, b);
  });
  for (const std::string table : {"table", "sparse"}) {
    registry.register_kernel(BinaryOp::multiply, ind, table,
                             [](const Factor& f, const Factor& g) { return lift(BinaryOp::multiply, f, g); });
  }
}

}  // namespace polyfactor
