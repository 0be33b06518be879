#include <cmath>
#include <limits>
#include <mutex>

#include "polyfactor/core/dispatch.hpp"
#include "polyfactor/core/factor.hpp"
#include "polyfactor/core/operations.hpp"

namespace polyfactor {

// ---------------------------------------------------------------------------
// Factor handle and base class defaults

Factor::Factor(std::shared_ptr<const FactorImpl> impl) : impl_(std::move(impl)) {
  if (!impl_) {
    fail(ErrorCode::invalid_argument, "null factor implementation");
  }
}

const Scope& Factor::scope() const noexcept { return impl_->scope(); }

std::string_view Factor::tag() const noexcept { return impl_->tag(); }

std::string Factor::describe() const { return impl_->describe(); }

double FactorImpl::log_scalar() const {
  if (!scope().empty()) {
    fail(ErrorCode::invalid_argument, "log_scalar needs an empty-scope factor, got scope " + scope().to_string());
  }
  return std::log(evaluate(Assignment{}));
}

Factor FactorImpl::divided_by_scalar(double log_divisor) const {
  if (std::isnan(log_divisor) || log_divisor == std::numeric_limits<double>::infinity()) {
    fail(ErrorCode::invalid_argument, "division by a non-finite scalar");
  }
  if (log_divisor == -std::numeric_limits<double>::infinity()) {
    if (is_zero()) {
      return scaled(0.0);
    }
    fail(ErrorCode::division_by_zero, "division of a nonzero " + std::string(tag()) + " factor by the scalar 0");
  }
  return scaled(-log_divisor);
}

namespace {

class GenericEvaluator final : public PointEvaluator {
 public:
  GenericEvaluator(const FactorImpl& f, const Scope& layout) : f_(f), names_(layout.names()) {}

  double operator()(std::span<const double> row) const override {
    Assignment a;
    for (std::size_t i = 0; i < names_.size(); ++i) {
      a.set(names_[i], row[i]);
    }
    return f_.evaluate(a);
  }

 private:
  const FactorImpl& f_;
  std::vector<std::string> names_;
};

}  // namespace

std::unique_ptr<PointEvaluator> FactorImpl::make_evaluator(const Scope& layout) const {
  if (!layout.includes(scope())) {
    fail(ErrorCode::not_in_scope, "evaluator layout " + layout.to_string() + " does not cover " + scope().to_string());
  }
  return std::make_unique<GenericEvaluator>(*this, layout);
}

std::unique_ptr<ConditionalSampler> FactorImpl::make_sampler(const Scope&) const {
  fail(ErrorCode::unsupported, "representation '" + std::string(tag()) + "' cannot be sampled");
}

std::string FactorImpl::describe() const { return std::string(tag()) + scope().to_string(); }

Scope rename_scope(const Scope& scope, const RenameMap& mapping) {
  std::vector<Variable> vars;
  vars.reserve(scope.size());
  for (const auto& v : scope) {
    auto it = mapping.find(v.name());
    vars.push_back(it == mapping.end() ? v : v.renamed(it->second));
  }
  return Scope(std::move(vars));
}

// ---------------------------------------------------------------------------
// Dispatch

std::string_view to_string(BinaryOp op) noexcept {
  switch (op) {
    case BinaryOp::multiply: return "multiply";
    case BinaryOp::divide: return "divide";
    case BinaryOp::add: return "add";
  }
  return "?";
}

DispatchRegistry& DispatchRegistry::global() {
  static DispatchRegistry* registry = [] {
    auto* r = new DispatchRegistry();
    register_builtin_kernels(*r);
    return r;
  }();
  return *registry;
}

void DispatchRegistry::register_kernel(BinaryOp op, std::string lhs, std::string rhs, BinaryKernel kernel) {
  std::unique_lock lock(mutex_);
  kernels_[Key{op, std::move(lhs), std::move(rhs)}] = std::move(kernel);
}

void DispatchRegistry::register_promotion(std::string from, std::string to, Promotion promotion) {
  std::unique_lock lock(mutex_);
  promotions_.emplace(std::move(from), std::make_pair(std::move(to), std::move(promotion)));
}

const BinaryKernel* DispatchRegistry::find(BinaryOp op, std::string_view lhs, std::string_view rhs) const {
  std::shared_lock lock(mutex_);
  auto it = kernels_.find(std::make_tuple(op, lhs, rhs));
  return it == kernels_.end() ? nullptr : &it->second;
}

bool DispatchRegistry::has_kernel(BinaryOp op, std::string_view lhs, std::string_view rhs) const {
  return find(op, lhs, rhs) != nullptr;
}

std::optional<Factor> DispatchRegistry::try_direct(BinaryOp op, const Factor& lhs, const Factor& rhs) const {
  if (const auto* k = find(op, lhs.tag(), rhs.tag())) {
    return (*k)(lhs, rhs);
  }
  if (op != BinaryOp::divide) {
    if (const auto* k = find(op, rhs.tag(), lhs.tag())) {
      return (*k)(rhs, lhs);
    }
  }
  return std::nullopt;
}

Factor DispatchRegistry::apply(BinaryOp op, const Factor& lhs, const Factor& rhs) const {
  if (auto r = try_direct(op, lhs, rhs)) {
    return *r;
  }
  if (op == BinaryOp::multiply) {
    if (rhs.scope().empty()) {
      return lhs.impl().scaled(log_scalar(rhs));
    }
    if (lhs.scope().empty()) {
      return rhs.impl().scaled(log_scalar(lhs));
    }
  }
  if (op == BinaryOp::divide && rhs.scope().empty()) {
    return lhs.impl().divided_by_scalar(log_scalar(rhs));
  }

  auto promotions_of = [this](std::string_view tag) {
    std::vector<std::pair<std::string, Promotion>> out;
    std::shared_lock lock(mutex_);
    auto [lo, hi] = promotions_.equal_range(tag);
    for (auto it = lo; it != hi; ++it) {
      out.push_back(it->second);
    }
    return out;
  };
  auto reachable = [&](std::string_view l, std::string_view r) {
    return find(op, l, r) != nullptr || (op != BinaryOp::divide && find(op, r, l) != nullptr);
  };
  for (const auto& [to, promote] : promotions_of(lhs.tag())) {
    if (reachable(to, rhs.tag())) {
      return *try_direct(op, promote(lhs), rhs);
    }
  }
  for (const auto& [to, promote] : promotions_of(rhs.tag())) {
    if (reachable(lhs.tag(), to)) {
      return *try_direct(op, lhs, promote(rhs));
    }
  }
  fail(ErrorCode::unsupported_pair, std::string(to_string(op)) + " has no implementation for (" +
                                        std::string(lhs.tag()) + ", " + std::string(rhs.tag()) + ")");
}

std::vector<std::tuple<BinaryOp, std::string, std::string>> DispatchRegistry::kernels() const {
  std::shared_lock lock(mutex_);
  std::vector<Key> out;
  for (const auto& [key, kernel] : kernels_) {
    out.push_back(key);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generic operations

double evaluate(const Factor& f, const Assignment& a) {
  for (const auto& v : f.scope()) {
    (void)a.at(v);
  }
  return f.impl().evaluate(a);
}

Factor multiply(const Factor& f, const Factor& g) {
  (void)f.scope().union_with(g.scope());
  return DispatchRegistry::global().apply(BinaryOp::multiply, f, g);
}

Factor sum_out(const Factor& f, const Scope& vars) {
  if (vars.empty()) {
    return f;
  }
  for (const auto& v : vars) {
    const Variable* mine = f.scope().find(v.name());
    if (mine == nullptr) {
      fail(ErrorCode::not_in_scope, "cannot sum out '" + v.name() + "': not in scope " + f.scope().to_string());
    }
    if (*mine != v) {
      fail(ErrorCode::domain_mismatch, "sum-out variable '" + v.name() + "' has a different domain than in the factor");
    }
  }
  return f.impl().sum_out(vars);
}

Factor reduce(const Factor& f, const Assignment& evidence) {
  Assignment relevant = evidence.restricted_to(f.scope());
  if (relevant.empty()) {
    return f;
  }
  for (const auto& [name, value] : relevant.entries()) {
    check_value(*f.scope().find(name), value);
  }
  return f.impl().reduce(relevant);
}

Factor divide(const Factor& f, const Factor& g) {
  (void)f.scope().union_with(g.scope());
  if (!g.scope().empty() && !f.scope().includes(g.scope())) {
    fail(ErrorCode::scope_mismatch,
         "divisor scope " + g.scope().to_string() + " is not contained in " + f.scope().to_string());
  }
  return DispatchRegistry::global().apply(BinaryOp::divide, f, g);
}

Factor add(const Factor& f, const Factor& g) {
  if (f.scope() != g.scope()) {
    fail(ErrorCode::scope_mismatch, "addition needs equal scopes, got " + f.scope().to_string() + " and " +
                                        g.scope().to_string());
  }
  return DispatchRegistry::global().apply(BinaryOp::add, f, g);
}

Factor normalize(const Factor& f) {
  const double log_z = log_total_mass(f);
  if (log_z == -std::numeric_limits<double>::infinity()) {
    fail(ErrorCode::zero_mass, "cannot normalize a factor with zero total mass");
  }
  if (!std::isfinite(log_z)) {
    fail(ErrorCode::not_integrable, "total mass is not finite");
  }
  return f.impl().divided_by_scalar(log_z);
}

Factor rename(const Factor& f, const RenameMap& mapping) {
  RenameMap relevant;
  for (const auto& [from, to] : mapping) {
    if (f.scope().contains(from) && from != to) {
      relevant.emplace(from, to);
    }
  }
  if (relevant.empty()) {
    return f;
  }
  (void)rename_scope(f.scope(), relevant);  // rejects collisions
  return f.impl().renamed(relevant);
}

double log_scalar(const Factor& scalar) { return scalar.impl().log_scalar(); }

double log_total_mass(const Factor& f) {
  if (f.scope().empty()) {
    return log_scalar(f);
  }
  return log_scalar(sum_out(f, f.scope()));
}

}  // namespace polyfactor
