#include "polyfactor/table/table_factor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "indexing.hpp"
#include "polyfactor/core/operations.hpp"

namespace polyfactor {

std::vector<std::size_t> row_major_strides(const Scope& scope) {
  std::vector<std::size_t> strides(scope.size(), 1);
  for (std::size_t i = scope.size(); i-- > 1;) {
    strides[i - 1] = strides[i] * scope[i].cardinality();
  }
  return strides;
}

namespace {

void check_table_scope(const Scope& scope) {
  if (!scope.all_discrete()) {
    fail(ErrorCode::domain_mismatch, "table factors need discrete variables, got " + scope.to_string());
  }
}

void check_table_values(const std::vector<double>& values, std::size_t expected) {
  if (values.size() != expected) {
    fail(ErrorCode::invalid_argument,
         "table needs " + std::to_string(expected) + " values, got " + std::to_string(values.size()));
  }
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      fail(ErrorCode::invalid_argument, "table values must be finite and nonnegative");
    }
  }
}

// Permutes values given row-major over `vars` into the canonical layout of Scope(vars).
std::vector<double> to_canonical(const std::vector<Variable>& vars, const std::vector<double>& values) {
  Scope canonical(vars);
  std::vector<std::size_t> given_strides(vars.size(), 1);
  for (std::size_t i = vars.size(); i-- > 1;) {
    given_strides[i - 1] = given_strides[i] * vars[i].cardinality();
  }
  std::vector<std::size_t> along(canonical.size());
  for (std::size_t i = 0; i < canonical.size(); ++i) {
    auto it = std::find_if(vars.begin(), vars.end(), [&](const Variable& v) { return v.name() == canonical[i].name(); });
    along[i] = given_strides[static_cast<std::size_t>(it - vars.begin())];
  }
  std::vector<double> out(values.size());
  for (detail::Odometer odo(canonical, {along}); !odo.done(); odo.advance()) {
    out[odo.position()] = values[odo.offset(0)];
  }
  return out;
}

}  // namespace

TableFactor::TableFactor(std::vector<Variable> vars, std::vector<double> values) : FactorImpl(Scope(vars)) {
  check_table_scope(scope());
  check_table_values(values, scope().joint_cardinality());
  strides_ = row_major_strides(scope());
  values_ = to_canonical(vars, values);
}

TableFactor::TableFactor(Scope scope, std::vector<double> values, CanonicalLayout) : FactorImpl(std::move(scope)) {
  check_table_scope(this->scope());
  check_table_values(values, this->scope().joint_cardinality());
  strides_ = row_major_strides(this->scope());
  values_ = std::move(values);
}

Factor TableFactor::make(std::vector<Variable> vars, std::vector<double> values) {
  return Factor::make<TableFactor>(std::move(vars), std::move(values));
}

Factor TableFactor::scalar(double value) {
  return Factor::make<TableFactor>(Scope{}, std::vector<double>{value}, CanonicalLayout{});
}

Factor TableFactor::filled(const Scope& scope, double value) {
  return Factor::make<TableFactor>(scope, std::vector<double>(scope.joint_cardinality(), value), CanonicalLayout{});
}

Factor TableFactor::one_hot(const Variable& v, std::size_t index) {
  check_value(v, static_cast<double>(index));
  std::vector<double> values(v.cardinality(), 0.0);
  values[index] = 1.0;
  return make({v}, std::move(values));
}

double TableFactor::total() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

std::size_t TableFactor::linear_index(const Assignment& a) const {
  std::size_t index = 0;
  for (std::size_t i = 0; i < scope().size(); ++i) {
    index += strides_[i] * a.index(scope()[i]);
  }
  return index;
}

double TableFactor::evaluate(const Assignment& a) const { return values_[linear_index(a)]; }

double TableFactor::log_scalar() const {
  if (!scope().empty()) {
    return FactorImpl::log_scalar();
  }
  return std::log(values_[0]);
}

bool TableFactor::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

Factor TableFactor::sum_out(const Scope& vars) const {
  Scope rest = scope().minus(vars);
  std::vector<double> out(rest.joint_cardinality(), 0.0);
  auto rest_strides = row_major_strides(rest);
  detail::Odometer odo(scope(), {detail::strides_along(scope(), rest, rest_strides)});
  for (; !odo.done(); odo.advance()) {
    out[odo.offset(0)] += values_[odo.position()];
  }
  return Factor::make<TableFactor>(std::move(rest), std::move(out), CanonicalLayout{});
}

Factor TableFactor::reduce(const Assignment& evidence) const {
  std::size_t base = 0;
  std::vector<Variable> fixed;
  for (std::size_t i = 0; i < scope().size(); ++i) {
    if (auto value = evidence.find(scope()[i].name())) {
      base += strides_[i] * static_cast<std::size_t>(*value);
      fixed.push_back(scope()[i]);
    }
  }
  Scope rest = scope().minus(Scope(fixed));
  std::vector<double> out(rest.joint_cardinality());
  detail::Odometer odo(rest, {detail::strides_along(rest, scope(), strides_)});
  for (; !odo.done(); odo.advance()) {
    out[odo.position()] = values_[base + odo.offset(0)];
  }
  return Factor::make<TableFactor>(std::move(rest), std::move(out), CanonicalLayout{});
}

Factor TableFactor::scaled(double log_factor) const {
  const double c = std::exp(log_factor);
  std::vector<double> out(values_);
  for (double& v : out) {
    v = (v == 0.0) ? 0.0 : v * c;
  }
  return Factor::make<TableFactor>(scope(), std::move(out), CanonicalLayout{});
}

Factor TableFactor::renamed(const RenameMap& mapping) const {
  Scope target = rename_scope(scope(), mapping);
  // Strides of the old layout, keyed by the new names.
  std::vector<std::size_t> along(target.size());
  for (std::size_t i = 0; i < scope().size(); ++i) {
    auto it = mapping.find(scope()[i].name());
    const std::string& name = it == mapping.end() ? scope()[i].name() : it->second;
    along[target.position(name)] = strides_[i];
  }
  std::vector<double> out(values_.size());
  for (detail::Odometer odo(target, {along}); !odo.done(); odo.advance()) {
    out[odo.position()] = values_[odo.offset(0)];
  }
  return Factor::make<TableFactor>(std::move(target), std::move(out), CanonicalLayout{});
}

Factor TableFactor::multiply(const TableFactor& f, const TableFactor& g) {
  Scope u = f.scope().union_with(g.scope());
  std::vector<double> out(u.joint_cardinality());
  detail::Odometer odo(u, {detail::strides_along(u, f.scope(), f.strides_),
                           detail::strides_along(u, g.scope(), g.strides_)});
  for (; !odo.done(); odo.advance()) {
    out[odo.position()] = f.values_[odo.offset(0)] * g.values_[odo.offset(1)];
  }
  return Factor::make<TableFactor>(std::move(u), std::move(out), CanonicalLayout{});
}

Factor TableFactor::divide(const TableFactor& f, const TableFactor& g) {
  std::vector<double> out(f.values_.size());
  detail::Odometer odo(f.scope(), {detail::strides_along(f.scope(), g.scope(), g.strides_)});
  for (; !odo.done(); odo.advance()) {
    const double num = f.values_[odo.position()];
    const double den = g.values_[odo.offset(0)];
    if (num == 0.0) {
      out[odo.position()] = 0.0;
    } else if (den == 0.0) {
      fail(ErrorCode::division_by_zero, "table division: nonzero numerator over a zero denominator cell");
    } else {
      out[odo.position()] = num / den;
    }
  }
  return Factor::make<TableFactor>(f.scope(), std::move(out), CanonicalLayout{});
}

Factor TableFactor::add(const TableFactor& f, const TableFactor& g) {
  std::vector<double> out(f.values_.size());
  std::transform(f.values_.begin(), f.values_.end(), g.values_.begin(), out.begin(), std::plus<>{});
  return Factor::make<TableFactor>(f.scope(), std::move(out), CanonicalLayout{});
}

namespace {

class TableEvaluator final : public PointEvaluator {
 public:
  TableEvaluator(const TableFactor& f, const Scope& layout)
      : values_(f.values().begin(), f.values().end()), positions_(positions_in(f.scope(), layout)),
        strides_(f.strides()) {}

  double operator()(std::span<const double> row) const override {
    std::size_t index = 0;
    for (std::size_t i = 0; i < positions_.size(); ++i) {
      index += strides_[i] * static_cast<std::size_t>(row[positions_[i]]);
    }
    return values_[index];
  }

 private:
  std::vector<double> values_;
  std::vector<std::size_t> positions_;
  std::vector<std::size_t> strides_;
};

class TableSampler final : public ConditionalSampler {
 public:
  TableSampler(const TableFactor& f, const Scope& given)
      : ConditionalSampler(f.scope().minus(given)), values_(f.values().begin(), f.values().end()),
        given_strides_(detail::strides_along(given, f.scope(), f.strides())),
        drawn_strides_(detail::strides_along(drawn_scope(), f.scope(), f.strides())) {}

  double log_mass(std::span<const double> given) const override {
    const std::size_t base = offset(given);
    double total = 0.0;
    for (detail::Odometer odo(drawn_scope(), {drawn_strides_}); !odo.done(); odo.advance()) {
      total += values_[base + odo.offset(0)];
    }
    return std::log(total);
  }

  double draw(std::span<const double> given, std::span<double> out, Rng& rng) const override {
    const std::size_t base = offset(given);
    const double log_z = log_mass(given);
    if (log_z == -std::numeric_limits<double>::infinity()) {
      fail(ErrorCode::degenerate, "cannot draw from a table slice with zero mass");
    }
    const double target = rng.uniform() * std::exp(log_z);
    double cumulative = 0.0;
    detail::Odometer odo(drawn_scope(), {drawn_strides_});
    std::vector<std::size_t> last_positive;
    for (; !odo.done(); odo.advance()) {
      const double v = values_[base + odo.offset(0)];
      if (v > 0.0) {
        last_positive.assign(drawn_scope().size(), 0);
        for (std::size_t i = 0; i < drawn_scope().size(); ++i) {
          last_positive[i] = odo.counter(i);
        }
        cumulative += v;
        if (target < cumulative) {
          break;
        }
      }
    }
    for (std::size_t i = 0; i < drawn_scope().size(); ++i) {
      out[i] = static_cast<double>(last_positive[i]);
    }
    return log_z;
  }

 private:
  [[nodiscard]] std::size_t offset(std::span<const double> given) const {
    std::size_t base = 0;
    for (std::size_t i = 0; i < given_strides_.size(); ++i) {
      base += given_strides_[i] * static_cast<std::size_t>(given[i]);
    }
    return base;
  }

  std::vector<double> values_;
  std::vector<std::size_t> given_strides_;
  std::vector<std::size_t> drawn_strides_;
};

}  // namespace

std::unique_ptr<PointEvaluator> TableFactor::make_evaluator(const Scope& layout) const {
  return std::make_unique<TableEvaluator>(*this, layout);
}

std::unique_ptr<ConditionalSampler> TableFactor::make_sampler(const Scope& given) const {
  return std::make_unique<TableSampler>(*this, scope().intersect(given));
}

std::string TableFactor::describe() const {
  std::ostringstream s;
  s << "table" << scope().to_string() << " [";
  for (std::size_t i = 0; i < values_.size() && i < 16; ++i) {
    s << (i ? ", " : "") << values_[i];
  }
  s << (values_.size() > 16 ? ", ...]" : "]");
  return s.str();
}

}  // namespace polyfactor
