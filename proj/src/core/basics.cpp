#include <algorithm>
#include <cmath>
#include <sstream>

#include "polyfactor/core/assignment.hpp"
#include "polyfactor/core/error.hpp"
#include "polyfactor/core/rng.hpp"
#include "polyfactor/core/scope.hpp"
#include "polyfactor/core/variable.hpp"

namespace polyfactor {

// ---------------------------------------------------------------------------
// Errors

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::missing_variable: return "MissingVariable";
    case ErrorCode::unsupported: return "Unsupported";
    case ErrorCode::unsupported_pair: return "UnsupportedPair";
    case ErrorCode::domain_mismatch: return "DomainMismatch";
    case ErrorCode::not_in_scope: return "NotInScope";
    case ErrorCode::not_integrable: return "NotIntegrable";
    case ErrorCode::division_by_zero: return "DivisionByZero";
    case ErrorCode::scope_mismatch: return "ScopeMismatch";
    case ErrorCode::zero_mass: return "ZeroMass";
    case ErrorCode::not_normalizable: return "NotNormalizable";
    case ErrorCode::index_out_of_range: return "IndexOutOfRange";
    case ErrorCode::degenerate: return "Degenerate";
    case ErrorCode::zero_scalar: return "ZeroScalar";
    case ErrorCode::quadrature_non_convergence: return "QuadratureNonConvergence";
    case ErrorCode::empty_query: return "EmptyQuery";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::schema_error: return "SchemaError";
    case ErrorCode::config_invalid: return "ConfigInvalid";
  }
  return "Unknown";
}

FactorError::FactorError(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

void fail(ErrorCode code, const std::string& message) { throw FactorError(code, message); }

// ---------------------------------------------------------------------------
// Variables

Variable::Variable(std::string name, Domain domain, std::size_t cardinality)
    : name_(std::move(name)), domain_(domain), cardinality_(cardinality) {
  if (name_.empty()) {
    fail(ErrorCode::invalid_argument, "variable name must be non-empty");
  }
}

Variable Variable::discrete(std::string name, std::size_t cardinality) {
  if (cardinality < 1) {
    fail(ErrorCode::invalid_argument, "discrete variable '" + name + "' needs cardinality >= 1");
  }
  return Variable(std::move(name), Domain::discrete, cardinality);
}

Variable Variable::continuous(std::string name) { return Variable(std::move(name), Domain::continuous, 0); }

Variable Variable::renamed(std::string name) const { return Variable(std::move(name), domain_, cardinality_); }

std::string to_string(const Variable& v) {
  if (v.is_discrete()) {
    return v.name() + "{" + std::to_string(v.cardinality()) + "}";
  }
  return v.name() + "{R}";
}

// ---------------------------------------------------------------------------
// Scopes

namespace {

bool by_name(const Variable& a, const Variable& b) { return a.name() < b.name(); }

}  // namespace

Scope::Scope(std::initializer_list<Variable> vars) : Scope(std::vector<Variable>(vars)) {}

Scope::Scope(std::vector<Variable> vars) : vars_(std::move(vars)) {
  std::sort(vars_.begin(), vars_.end(), by_name);
  for (std::size_t i = 1; i < vars_.size(); ++i) {
    if (vars_[i - 1].name() == vars_[i].name()) {
      if (vars_[i - 1] != vars_[i]) {
        fail(ErrorCode::domain_mismatch, "variable '" + vars_[i].name() + "' declared with two domains");
      }
      fail(ErrorCode::invalid_argument, "duplicate variable '" + vars_[i].name() + "' in scope");
    }
  }
}

std::optional<std::size_t> Scope::index_of(std::string_view name) const {
  auto it = std::lower_bound(vars_.begin(), vars_.end(), name,
                             [](const Variable& v, std::string_view n) { return v.name() < n; });
  if (it != vars_.end() && it->name() == name) {
    return static_cast<std::size_t>(it - vars_.begin());
  }
  return std::nullopt;
}

bool Scope::contains(std::string_view name) const { return index_of(name).has_value(); }

std::size_t Scope::position(std::string_view name) const {
  if (auto i = index_of(name)) {
    return *i;
  }
  fail(ErrorCode::not_in_scope, "variable '" + std::string(name) + "' not in scope " + to_string());
}

const Variable* Scope::find(std::string_view name) const {
  auto i = index_of(name);
  return i ? &vars_[*i] : nullptr;
}

bool Scope::includes(const Scope& other) const {
  return std::all_of(other.begin(), other.end(), [this](const Variable& v) {
    const Variable* mine = find(v.name());
    return mine != nullptr && *mine == v;
  });
}

Scope Scope::union_with(const Scope& other) const {
  std::vector<Variable> out;
  out.reserve(size() + other.size());
  auto a = vars_.begin();
  auto b = other.vars_.begin();
  while (a != vars_.end() || b != other.vars_.end()) {
    if (b == other.vars_.end() || (a != vars_.end() && a->name() < b->name())) {
      out.push_back(*a++);
    } else if (a == vars_.end() || b->name() < a->name()) {
      out.push_back(*b++);
    } else {
      if (*a != *b) {
        fail(ErrorCode::domain_mismatch,
             "variable '" + a->name() + "' has conflicting domains " + polyfactor::to_string(*a) + " and " +
                 polyfactor::to_string(*b));
      }
      out.push_back(*a++);
      ++b;
    }
  }
  Scope s;
  s.vars_ = std::move(out);
  return s;
}

Scope Scope::minus(const Scope& other) const {
  Scope s;
  for (const auto& v : vars_) {
    if (!other.contains(v.name())) {
      s.vars_.push_back(v);
    }
  }
  return s;
}

Scope Scope::intersect(const Scope& other) const {
  Scope s;
  for (const auto& v : vars_) {
    if (other.contains(v.name())) {
      s.vars_.push_back(v);
    }
  }
  return s;
}

Scope Scope::discrete_part() const {
  Scope s;
  std::copy_if(vars_.begin(), vars_.end(), std::back_inserter(s.vars_),
               [](const Variable& v) { return v.is_discrete(); });
  return s;
}

Scope Scope::continuous_part() const {
  Scope s;
  std::copy_if(vars_.begin(), vars_.end(), std::back_inserter(s.vars_),
               [](const Variable& v) { return v.is_continuous(); });
  return s;
}

bool Scope::all_discrete() const {
  return std::all_of(vars_.begin(), vars_.end(), [](const Variable& v) { return v.is_discrete(); });
}

bool Scope::all_continuous() const {
  return std::all_of(vars_.begin(), vars_.end(), [](const Variable& v) { return v.is_continuous(); });
}

std::size_t Scope::joint_cardinality() const {
  std::size_t n = 1;
  for (const auto& v : vars_) {
    if (v.is_discrete()) {
      n *= v.cardinality();
    }
  }
  return n;
}

std::vector<std::string> Scope::names() const {
  std::vector<std::string> out;
  out.reserve(vars_.size());
  for (const auto& v : vars_) {
    out.push_back(v.name());
  }
  return out;
}

std::string Scope::to_string() const {
  std::string s = "(";
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    s += (i ? "," : "") + vars_[i].name();
  }
  return s + ")";
}

std::vector<std::size_t> positions_in(const Scope& sub, const Scope& super) {
  std::vector<std::size_t> out;
  out.reserve(sub.size());
  for (const auto& v : sub) {
    out.push_back(super.position(v.name()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Assignments

void check_value(const Variable& v, double value) {
  if (v.is_discrete()) {
    if (!(value >= 0.0) || value != std::floor(value) || value >= static_cast<double>(v.cardinality())) {
      std::ostringstream msg;
      msg << "value " << value << " is not a state index of " << to_string(v);
      fail(ErrorCode::index_out_of_range, msg.str());
    }
  } else if (!std::isfinite(value)) {
    fail(ErrorCode::invalid_argument, "non-finite value for continuous variable '" + v.name() + "'");
  }
}

Assignment::Assignment(std::initializer_list<std::pair<const std::string, double>> entries)
    : entries_(entries.begin(), entries.end()) {}

void Assignment::set(std::string name, double value) { entries_[std::move(name)] = value; }

bool Assignment::contains(std::string_view name) const { return entries_.find(name) != entries_.end(); }

std::optional<double> Assignment::find(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    return std::nullopt;
  }
  return it->second;
}

double Assignment::at(const Variable& v) const {
  auto it = entries_.find(v.name());
  if (it == entries_.end()) {
    fail(ErrorCode::missing_variable, "assignment has no value for '" + v.name() + "'");
  }
  check_value(v, it->second);
  return it->second;
}

std::size_t Assignment::index(const Variable& v) const { return static_cast<std::size_t>(at(v)); }

std::vector<double> Assignment::values_for(const Scope& scope) const {
  std::vector<double> out;
  out.reserve(scope.size());
  for (const auto& v : scope) {
    out.push_back(at(v));
  }
  return out;
}

Assignment Assignment::restricted_to(const Scope& scope) const {
  Assignment out;
  for (const auto& [name, value] : entries_) {
    if (scope.contains(name)) {
      out.entries_.emplace(name, value);
    }
  }
  return out;
}

Assignment Assignment::merged(const Assignment& other) const {
  Assignment out = *this;
  for (const auto& [name, value] : other.entries_) {
    out.entries_[name] = value;
  }
  return out;
}

std::string Assignment::to_string() const {
  std::ostringstream s;
  s << "{";
  bool first = true;
  for (const auto& [name, value] : entries_) {
    s << (first ? "" : ", ") << name << "=" << value;
    first = false;
  }
  s << "}";
  return s.str();
}

// ---------------------------------------------------------------------------
// Random numbers

std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) noexcept {
  // FNV-1a over the label, folded into the parent through splitmix.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h = (h ^ c) * 0x100000001b3ULL;
  }
  return mix_seed(mix_seed(parent) ^ h);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(mix_seed(seed)) {}

Rng Rng::split(std::string_view name) const { return Rng(derive_seed(seed_, name)); }

double Rng::uniform() { return uniform_(engine_); }

double Rng::normal() { return normal_(engine_); }

std::uint64_t Rng::next_u64() { return engine_(); }

}  // namespace polyfactor
