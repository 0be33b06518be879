#include "polyfactor/hybrid/conditional_factor.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "../table/indexing.hpp"
#include "polyfactor/core/operations.hpp"
#include "polyfactor/gaussian/canonical_gaussian.hpp"
#include "polyfactor/gaussian/linalg.hpp"
#include "polyfactor/gaussian/mixture_factor.hpp"
#include "polyfactor/hybrid/indicator_factor.hpp"
#include "polyfactor/hybrid/truncated_gaussian.hpp"
#include "polyfactor/table/sparse_table_factor.hpp"
#include "polyfactor/table/table_factor.hpp"

namespace polyfactor {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Assignment decode_assignment(std::size_t index, const Scope& scope, const std::vector<std::size_t>& strides) {
  Assignment a;
  const auto states = detail::decode(index, scope, strides);
  for (std::size_t i = 0; i < scope.size(); ++i) {
    a.set(scope[i].name(), static_cast<double>(states[i]));
  }
  return a;
}

std::size_t encode(const Assignment& a, const Scope& scope, const std::vector<std::size_t>& strides) {
  std::size_t index = 0;
  for (std::size_t i = 0; i < scope.size(); ++i) {
    index += strides[i] * a.index(scope[i]);
  }
  return index;
}

template <class F>
Factor with_branch_context(const Assignment& branch, F&& body) {
  try {
    return body();
  } catch (const FactorError& e) {
    fail(e.code(), "branch " + branch.to_string() + ": " + e.detail());
  }
}

}  // namespace

ConditionalFactor::ConditionalFactor(Scope discrete, Scope continuous, std::vector<Factor> branches)
    : FactorImpl(discrete.union_with(continuous)), discrete_(std::move(discrete)), continuous_(std::move(continuous)),
      branches_(std::move(branches)), strides_(row_major_strides(discrete_)) {
  if (!discrete_.all_discrete() || !continuous_.all_continuous()) {
    fail(ErrorCode::domain_mismatch, "conditional factor scopes must split into discrete and continuous variables");
  }
  if (branches_.size() != discrete_.joint_cardinality()) {
    fail(ErrorCode::invalid_argument, "conditional factor needs " + std::to_string(discrete_.joint_cardinality()) +
                                          " branches, got " + std::to_string(branches_.size()));
  }
  for (const auto& b : branches_) {
    if (b.scope() != continuous_) {
      fail(ErrorCode::scope_mismatch,
           "branch scope " + b.scope().to_string() + " differs from " + continuous_.to_string());
    }
  }
}

Factor ConditionalFactor::make(Scope discrete, Scope continuous, std::vector<Factor> branches) {
  if (discrete.empty()) {
    if (branches.size() != 1) {
      fail(ErrorCode::invalid_argument, "a conditional factor without discrete variables has one branch");
    }
    return branches.front();
  }
  if (continuous.empty()) {
    std::vector<double> values;
    values.reserve(branches.size());
    for (const auto& b : branches) {
      if (!b.scope().empty()) {
        fail(ErrorCode::scope_mismatch, "branch scope " + b.scope().to_string() + " should be empty");
      }
      values.push_back(std::exp(polyfactor::log_scalar(b)));
    }
    if (values.size() != discrete.joint_cardinality()) {
      fail(ErrorCode::invalid_argument, "conditional factor branch count does not match its discrete scope");
    }
    return Factor::make<TableFactor>(std::move(discrete), std::move(values), TableFactor::CanonicalLayout{});
  }
  return Factor::make<ConditionalFactor>(std::move(discrete), std::move(continuous), std::move(branches));
}

Factor ConditionalFactor::build(const Scope& discrete, const Scope& continuous,
                                const std::function<Factor(const Assignment&)>& branch) {
  const auto strides = row_major_strides(discrete);
  std::vector<Factor> branches;
  branches.reserve(discrete.joint_cardinality());
  for (std::size_t i = 0; i < discrete.joint_cardinality(); ++i) {
    branches.push_back(branch(decode_assignment(i, discrete, strides)));
  }
  return make(discrete, continuous, std::move(branches));
}

std::size_t ConditionalFactor::index_of(const Assignment& a) const { return encode(a, discrete_, strides_); }

Assignment ConditionalFactor::assignment_of(std::size_t index) const {
  return decode_assignment(index, discrete_, strides_);
}

const Factor& ConditionalFactor::branch_for(const Assignment& a) const { return branches_[index_of(a)]; }

double ConditionalFactor::evaluate(const Assignment& a) const { return branch_for(a).impl().evaluate(a); }

Factor ConditionalFactor::sum_out(const Scope& vars) const {
  const Scope cont = vars.intersect(continuous_);
  const Scope disc = vars.intersect(discrete_);
  std::vector<Factor> branches = branches_;
  Scope rest_cont = continuous_;
  if (!cont.empty()) {
    for (std::size_t i = 0; i < branches.size(); ++i) {
      branches[i] = with_branch_context(assignment_of(i), [&] { return polyfactor::sum_out(branches[i], cont); });
    }
    rest_cont = continuous_.minus(cont);
  }
  if (disc.empty()) {
    return make(discrete_, rest_cont, std::move(branches));
  }
  const Scope rest = discrete_.minus(disc);
  const auto rest_strides = row_major_strides(rest);
  std::vector<std::optional<Factor>> grouped(rest.joint_cardinality());
  detail::Odometer odo(discrete_, {detail::strides_along(discrete_, rest, rest_strides)});
  for (; !odo.done(); odo.advance()) {
    auto& slot = grouped[odo.offset(0)];
    const Factor& b = branches[odo.position()];
    if (!slot) {
      slot = b;
    } else {
      slot = with_branch_context(assignment_of(odo.position()), [&] { return add(*slot, b); });
    }
  }
  std::vector<Factor> out;
  out.reserve(grouped.size());
  for (auto& g : grouped) {
    out.push_back(std::move(*g));
  }
  return make(rest, rest_cont, std::move(out));
}

Factor ConditionalFactor::reduce(const Assignment& evidence) const {
  std::vector<Variable> fixed;
  for (const auto& v : discrete_) {
    if (evidence.contains(v.name())) {
      fixed.push_back(v);
    }
  }
  const Scope rest = discrete_.minus(Scope(fixed));
  std::size_t base = 0;
  for (const auto& v : fixed) {
    base += strides_[discrete_.position(v.name())] * evidence.index(v);
  }
  const Assignment cont_evidence = evidence.restricted_to(continuous_);
  std::vector<Factor> out;
  out.reserve(rest.joint_cardinality());
  for (detail::Odometer odo(rest, {detail::strides_along(rest, discrete_, strides_)}); !odo.done(); odo.advance()) {
    const std::size_t i = base + odo.offset(0);
    out.push_back(cont_evidence.empty() ? branches_[i]
                                        : with_branch_context(assignment_of(i), [&] {
                                            return polyfactor::reduce(branches_[i], cont_evidence);
                                          }));
  }
  Scope rest_cont = continuous_;
  for (const auto& [name, value] : cont_evidence.entries()) {
    (void)value;
    rest_cont = rest_cont.minus(Scope{*continuous_.find(name)});
  }
  return make(rest, rest_cont, std::move(out));
}

Factor ConditionalFactor::scaled(double log_factor) const {
  std::vector<Factor> out;
  out.reserve(branches_.size());
  for (const auto& b : branches_) {
    out.push_back(b.impl().scaled(log_factor));
  }
  return make(discrete_, continuous_, std::move(out));
}

Factor ConditionalFactor::renamed(const RenameMap& mapping) const {
  RenameMap cont_map;
  for (const auto& [from, to] : mapping) {
    if (continuous_.contains(from)) {
      cont_map[from] = to;
    }
  }
  const Scope disc = rename_scope(discrete_, mapping);
  const auto disc_strides = row_major_strides(disc);
  std::vector<std::size_t> along(disc.size());
  for (std::size_t i = 0; i < discrete_.size(); ++i) {
    auto it = mapping.find(discrete_[i].name());
    along[disc.position(it == mapping.end() ? discrete_[i].name() : it->second)] = strides_[i];
  }
  std::vector<Factor> out;
  out.reserve(branches_.size());
  for (detail::Odometer odo(disc, {along}); !odo.done(); odo.advance()) {
    const Factor& b = branches_[odo.offset(0)];
    out.push_back(cont_map.empty() ? b : rename(b, cont_map));
  }
  return make(disc, rename_scope(continuous_, mapping), std::move(out));
}

bool ConditionalFactor::is_zero() const {
  return std::all_of(branches_.begin(), branches_.end(), [](const Factor& b) { return b.impl().is_zero(); });
}

namespace {

class ConditionalEvaluator final : public PointEvaluator {
 public:
  ConditionalEvaluator(const ConditionalFactor& f, const Scope& layout)
      : positions_(positions_in(f.discrete_scope(), layout)), strides_(row_major_strides(f.discrete_scope())) {
    for (const auto& b : f.branches()) {
      branches_.push_back(b.impl().make_evaluator(layout));
    }
  }

  double operator()(std::span<const double> row) const override {
    std::size_t index = 0;
    for (std::size_t i = 0; i < positions_.size(); ++i) {
      index += strides_[i] * static_cast<std::size_t>(row[positions_[i]]);
    }
    return (*branches_[index])(row);
  }

  double log_value(std::span<const double> row) const override {
    std::size_t index = 0;
    for (std::size_t i = 0; i < positions_.size(); ++i) {
      index += strides_[i] * static_cast<std::size_t>(row[positions_[i]]);
    }
    return branches_[index]->log_value(row);
  }

 private:
  std::vector<std::size_t> positions_;
  std::vector<std::size_t> strides_;
  std::vector<std::unique_ptr<PointEvaluator>> branches_;
};

class ConditionalSamplerImpl final : public ConditionalSampler {
 public:
  ConditionalSamplerImpl(const ConditionalFactor& f, const Scope& given) : ConditionalSampler(f.scope().minus(given)) {
    const Scope& d = f.discrete_scope();
    const auto strides = row_major_strides(d);
    const Scope d_given = d.intersect(given);
    const Scope d_drawn = d.minus(given);
    const Scope c_given = f.continuous_scope().intersect(given);
    const Scope c_drawn = f.continuous_scope().minus(given);
    d_given_positions_ = positions_in(d_given, given);
    d_given_strides_ = detail::strides_along(d_given, d, strides);
    d_drawn_ = d_drawn;
    d_drawn_strides_ = detail::strides_along(d_drawn, d, strides);
    d_drawn_own_strides_ = row_major_strides(d_drawn);
    c_given_positions_ = positions_in(c_given, given);
    d_out_ = positions_in(d_drawn, drawn_scope());
    c_out_ = positions_in(c_drawn, drawn_scope());
    for (const auto& b : f.branches()) {
      samplers_.push_back(b.impl().is_zero() ? nullptr : b.impl().make_sampler(c_given));
    }
    c_values_.resize(c_given.size());
    c_draw_.resize(c_drawn.size());
    for (detail::Odometer odo(d_drawn_, {d_drawn_strides_}); !odo.done(); odo.advance()) {
      offsets_.push_back(odo.offset(0));
    }
    masses_.resize(d_drawn.joint_cardinality());
    candidates_.resize(d_drawn.joint_cardinality());
  }

  double log_mass(std::span<const double> given) const override {
    fill(given);
    double best = kNegInf;
    for (double m : masses_) {
      best = std::max(best, m);
    }
    if (best == kNegInf) {
      return kNegInf;
    }
    double total = 0.0;
    for (double m : masses_) {
      total += std::exp(m - best);
    }
    return best + std::log(total);
  }

  double draw(std::span<const double> given, std::span<double> out, Rng& rng) const override {
    const double lm = log_mass(given);
    if (lm == kNegInf) {
      fail(ErrorCode::degenerate, "cannot draw from a conditional slice with zero mass");
    }
    const double target = rng.uniform();
    double cumulative = 0.0;
    std::size_t pick = masses_.size();
    for (std::size_t k = 0; k < masses_.size(); ++k) {
      if (masses_[k] == kNegInf) {
        continue;
      }
      pick = k;
      cumulative += std::exp(masses_[k] - lm);
      if (target < cumulative) {
        break;
      }
    }
    const auto states = detail::decode(pick, d_drawn_, d_drawn_own_strides_);
    for (std::size_t i = 0; i < d_out_.size(); ++i) {
      out[d_out_[i]] = static_cast<double>(states[i]);
    }
    if (!c_draw_.empty()) {
      samplers_[candidates_[pick]]->draw(c_values_, c_draw_, rng);
      for (std::size_t i = 0; i < c_out_.size(); ++i) {
        out[c_out_[i]] = c_draw_[i];
      }
    }
    return lm;
  }

 private:
  void fill(std::span<const double> given) const {
    std::size_t base = 0;
    for (std::size_t i = 0; i < d_given_positions_.size(); ++i) {
      base += d_given_strides_[i] * static_cast<std::size_t>(given[d_given_positions_[i]]);
    }
    for (std::size_t i = 0; i < c_given_positions_.size(); ++i) {
      c_values_[i] = given[c_given_positions_[i]];
    }
    for (std::size_t k = 0; k < offsets_.size(); ++k) {
      const std::size_t index = base + offsets_[k];
      candidates_[k] = index;
      masses_[k] = samplers_[index] ? samplers_[index]->log_mass(c_values_) : kNegInf;
    }
  }

  std::vector<std::size_t> d_given_positions_;
  std::vector<std::size_t> d_given_strides_;
  std::vector<std::size_t> d_drawn_own_strides_;
  std::vector<std::size_t> offsets_;
  Scope d_drawn_;
  std::vector<std::size_t> d_drawn_strides_;
  std::vector<std::size_t> c_given_positions_;
  std::vector<std::size_t> d_out_;
  std::vector<std::size_t> c_out_;
  std::vector<std::unique_ptr<ConditionalSampler>> samplers_;
  mutable std::vector<double> c_values_;
  mutable std::vector<double> c_draw_;
  mutable std::vector<double> masses_;
  mutable std::vector<std::size_t> candidates_;
};

}  // namespace

std::unique_ptr<PointEvaluator> ConditionalFactor::make_evaluator(const Scope& layout) const {
  return std::make_unique<ConditionalEvaluator>(*this, layout);
}

std::unique_ptr<ConditionalSampler> ConditionalFactor::make_sampler(const Scope& given) const {
  return std::make_unique<ConditionalSamplerImpl>(*this, scope().intersect(given));
}

std::string ConditionalFactor::describe() const {
  std::ostringstream s;
  s << "conditional" << discrete_.to_string() << " -> " << continuous_.to_string();
  for (std::size_t i = 0; i < branches_.size() && i < 16; ++i) {
    s << "\n  " << assignment_of(i).to_string() << ": " << branches_[i].describe();
  }
  return s.str();
}

namespace {

Scope index_scope(const Factor& f) {
  if (const auto* c = f.as<ConditionalFactor>()) {
    return c->discrete_scope();
  }
  if (const auto* i = f.as<IndicatorFactor>()) {
    return i->selectors();
  }
  if (f.as<TableFactor>() != nullptr || f.as<SparseTableFactor>() != nullptr) {
    return f.scope();
  }
  return {};
}

Factor branch_view(const Factor& f, const Assignment& d) {
  if (const auto* c = f.as<ConditionalFactor>()) {
    return c->branch_for(d);
  }
  if (const auto* i = f.as<IndicatorFactor>()) {
    return i->branch(encode(d, i->selectors(), row_major_strides(i->selectors())));
  }
  if (f.as<TableFactor>() != nullptr || f.as<SparseTableFactor>() != nullptr) {
    return TableFactor::scalar(f.impl().evaluate(d));
  }
  return f;
}

}  // namespace

Factor lift(BinaryOp op, const Factor& f, const Factor& g) {
  const Scope d = index_scope(f).union_with(index_scope(g));
  const Scope c = f.scope().union_with(g.scope()).minus(d);
  const auto strides = row_major_strides(d);
  std::vector<Factor> branches;
  branches.reserve(d.joint_cardinality());
  for (std::size_t i = 0; i < d.joint_cardinality(); ++i) {
    const Assignment a = decode_assignment(i, d, strides);
    branches.push_back(with_branch_context(a, [&] {
      const Factor fb = branch_view(f, a);
      const Factor gb = branch_view(g, a);
      switch (op) {
        case BinaryOp::multiply:
          return multiply(fb, gb);
        case BinaryOp::divide:
          return divide(fb, gb);
        case BinaryOp::add:
          return add(fb, gb);
      }
      fail(ErrorCode::invalid_argument, "unknown operation");
    }));
  }
  if (!c.empty()) {
    // A branch that lost variables (a zero or scalar result) is widened back to the full scope.
    for (auto& b : branches) {
      if (b.scope() != c) {
        b = multiply(b, CanonicalGaussian::unit(c.minus(b.scope())));
      }
    }
  }
  return ConditionalFactor::make(d, c, std::move(branches));
}

void register_hybrid_kernels(DispatchRegistry& registry) {
  register_truncated_kernels(registry);
  register_indicator_kernels(registry);
  const std::string cond(ConditionalFactor::kTag);
  const auto lift_multiply = [](const Factor& f, const Factor& g) { return lift(BinaryOp::multiply, f, g); };
  const auto lift_divide = [](const Factor& f, const Factor& g) { return lift(BinaryOp::divide, f, g); };
  const auto lift_add = [](const Factor& f, const Factor& g) { return lift(BinaryOp::add, f, g); };
  for (const std::string other :
       {"table", "sparse", "canonical", "truncated", "mixture", "indicator", "conditional"}) {
    registry.register_kernel(BinaryOp::multiply, cond, other, lift_multiply);
    if (other != "indicator") {
      registry.register_kernel(BinaryOp::divide, cond, other, lift_divide);
    }
  }
  registry.register_kernel(BinaryOp::add, cond, cond, lift_add);
}

}  // namespace polyfactor
