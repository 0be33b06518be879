#include "polyfactor/table/sparse_table_factor.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "indexing.hpp"
#include "polyfactor/core/dispatch.hpp"

namespace polyfactor {

namespace {

std::size_t index_from(const std::vector<std::size_t>& states, const std::vector<std::size_t>& strides_of_states) {
  std::size_t index = 0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    index += states[i] * strides_of_states[i];
  }
  return index;
}

/// Entries keyed by their projection onto a sub-scope.
std::unordered_multimap<std::size_t, std::pair<std::size_t, double>> index_by(const SparseTableFactor& f,
                                                                                const Scope& sub) {
  auto sub_strides = row_major_strides(sub);
  auto along = detail::strides_along(f.scope(), sub, sub_strides);
  std::unordered_multimap<std::size_t, std::pair<std::size_t, double>> out;
  out.reserve(f.entries().size());
  for (const auto& [key, value] : f.entries()) {
    auto states = detail::decode(key, f.scope(), f.strides());
    out.emplace(index_from(states, along), std::make_pair(key, value));
  }
  return out;
}

}  // namespace

SparseTableFactor::SparseTableFactor(Scope scope, Entries entries) : FactorImpl(std::move(scope)) {
  if (!this->scope().all_discrete()) {
    fail(ErrorCode::domain_mismatch, "sparse tables need discrete variables, got " + this->scope().to_string());
  }
  strides_ = row_major_strides(this->scope());
  cells_ = this->scope().joint_cardinality();
  for (auto it = entries.begin(); it != entries.end();) {
    if (it->first >= cells_) {
      fail(ErrorCode::index_out_of_range, "sparse entry index " + std::to_string(it->first) + " out of range");
    }
    if (!(it->second >= 0.0) || !std::isfinite(it->second)) {
      fail(ErrorCode::invalid_argument, "sparse table values must be finite and nonnegative");
    }
    it = it->second == 0.0 ? entries.erase(it) : std::next(it);
  }
  entries_ = std::move(entries);
}

Factor SparseTableFactor::make(Scope scope, Entries entries) {
  return Factor::make<SparseTableFactor>(std::move(scope), std::move(entries));
}

double SparseTableFactor::total() const {
  double t = 0.0;
  for (const auto& [key, value] : entries_) {
    t += value;
  }
  return t;
}

double SparseTableFactor::evaluate(const Assignment& a) const {
  std::size_t index = 0;
  for (std::size_t i = 0; i < scope().size(); ++i) {
    index += strides_[i] * a.index(scope()[i]);
  }
  auto it = entries_.find(index);
  return it == entries_.end() ? 0.0 : it->second;
}

double SparseTableFactor::log_scalar() const {
  if (!scope().empty()) {
    return FactorImpl::log_scalar();
  }
  return entries_.empty() ? -std::numeric_limits<double>::infinity() : std::log(entries_.begin()->second);
}

Factor SparseTableFactor::sum_out(const Scope& vars) const {
  Scope rest = scope().minus(vars);
  auto along = detail::strides_along(scope(), rest, row_major_strides(rest));
  Entries out;
  for (const auto& [key, value] : entries_) {
    out[index_from(detail::decode(key, scope(), strides_), along)] += value;
  }
  return make(std::move(rest), std::move(out));
}

Factor SparseTableFactor::reduce(const Assignment& evidence) const {
  std::vector<Variable> fixed;
  std::vector<std::optional<std::size_t>> wanted(scope().size());
  for (std::size_t i = 0; i < scope().size(); ++i) {
    if (auto value = evidence.find(scope()[i].name())) {
      wanted[i] = static_cast<std::size_t>(*value);
      fixed.push_back(scope()[i]);
    }
  }
  Scope rest = scope().minus(Scope(fixed));
  auto along = detail::strides_along(scope(), rest, row_major_strides(rest));
  Entries out;
  for (const auto& [key, value] : entries_) {
    auto states = detail::decode(key, scope(), strides_);
    bool match = true;
    for (std::size_t i = 0; i < states.size() && match; ++i) {
      match = !wanted[i] || *wanted[i] == states[i];
    }
    if (match) {
      out.emplace(index_from(states, along), value);
    }
  }
  return make(std::move(rest), std::move(out));
}

Factor SparseTableFactor::scaled(double log_factor) const {
  const double c = std::exp(log_factor);
  Entries out;
  for (const auto& [key, value] : entries_) {
    out.emplace_hint(out.end(), key, value * c);
  }
  return make(scope(), std::move(out));
}

Factor SparseTableFactor::renamed(const RenameMap& mapping) const {
  Scope target = rename_scope(scope(), mapping);
  std::vector<std::size_t> along(scope().size());
  auto target_strides = row_major_strides(target);
  for (std::size_t i = 0; i < scope().size(); ++i) {
    auto it = mapping.find(scope()[i].name());
    const std::string& name = it == mapping.end() ? scope()[i].name() : it->second;
    along[i] = target_strides[target.position(name)];
  }
  Entries out;
  for (const auto& [key, value] : entries_) {
    out.emplace(index_from(detail::decode(key, scope(), strides_), along), value);
  }
  return make(std::move(target), std::move(out));
}

Factor SparseTableFactor::multiply(const SparseTableFactor& f, const SparseTableFactor& g) {
  Scope u = f.scope().union_with(g.scope());
  Scope shared = f.scope().intersect(g.scope());
  auto u_strides = row_major_strides(u);
  auto f_to_u = detail::strides_along(f.scope(), u, u_strides);
  auto g_to_u = detail::strides_along(g.scope(), u, u_strides);
  // Shared variables contribute to both partial indices; subtract one copy.
  auto shared_in_f = detail::strides_along(f.scope(), shared, detail::strides_along(shared, u, u_strides));
  auto shared_key = detail::strides_along(f.scope(), shared, row_major_strides(shared));
  auto g_index = index_by(g, shared);
  Entries out;
  for (const auto& [fk, fv] : f.entries_) {
    auto states = detail::decode(fk, f.scope(), f.strides_);
    const std::size_t f_part = index_from(states, f_to_u) - index_from(states, shared_in_f);
    auto [lo, hi] = g_index.equal_range(index_from(states, shared_key));
    for (auto it = lo; it != hi; ++it) {
      const auto [gk, gv] = it->second;
      const std::size_t g_part = index_from(detail::decode(gk, g.scope(), g.strides_), g_to_u);
      out.emplace(f_part + g_part, fv * gv);
    }
  }
  return make(std::move(u), std::move(out));
}

Factor SparseTableFactor::divide(const SparseTableFactor& f, const SparseTableFactor& g) {
  auto along = detail::strides_along(f.scope(), g.scope(), g.strides_);
  Entries out;
  for (const auto& [key, value] : f.entries_) {
    auto den = g.entries_.find(index_from(detail::decode(key, f.scope(), f.strides_), along));
    if (den == g.entries_.end()) {
      fail(ErrorCode::division_by_zero, "sparse division: nonzero numerator over a zero denominator cell");
    }
    out.emplace_hint(out.end(), key, value / den->second);
  }
  return make(f.scope(), std::move(out));
}

Factor SparseTableFactor::add(const SparseTableFactor& f, const SparseTableFactor& g) {
  Entries out = f.entries_;
  for (const auto& [key, value] : g.entries_) {
    out[key] += value;
  }
  return make(f.scope(), std::move(out));
}

namespace {

class SparseEvaluator final : public PointEvaluator {
 public:
  SparseEvaluator(const SparseTableFactor& f, const Scope& layout)
      : f_(f), positions_(positions_in(f.scope(), layout)) {}

  double operator()(std::span<const double> row) const override {
    std::size_t index = 0;
    for (std::size_t i = 0; i < positions_.size(); ++i) {
      index += f_.strides()[i] * static_cast<std::size_t>(row[positions_[i]]);
    }
    auto it = f_.entries().find(index);
    return it == f_.entries().end() ? 0.0 : it->second;
  }

 private:
  const SparseTableFactor& f_;
  std::vector<std::size_t> positions_;
};

class SparseSampler final : public ConditionalSampler {
 public:
  SparseSampler(const SparseTableFactor& f, const Scope& given)
      : ConditionalSampler(f.scope().minus(given)), f_(f), given_pos_(positions_in(given, f.scope())),
        drawn_pos_(positions_in(drawn_scope(), f.scope())) {}

  double log_mass(std::span<const double> given) const override {
    double total = 0.0;
    for_each_match(given, [&](const std::vector<std::size_t>&, double v) {
      total += v;
      return false;
    });
    return std::log(total);
  }

  double draw(std::span<const double> given, std::span<double> out, Rng& rng) const override {
    const double log_z = log_mass(given);
    if (log_z == -std::numeric_limits<double>::infinity()) {
      fail(ErrorCode::degenerate, "cannot draw from a sparse table slice with zero mass");
    }
    const double target = rng.uniform() * std::exp(log_z);
    double cumulative = 0.0;
    for_each_match(given, [&](const std::vector<std::size_t>& states, double v) {
      cumulative += v;
      for (std::size_t i = 0; i < drawn_pos_.size(); ++i) {
        out[i] = static_cast<double>(states[drawn_pos_[i]]);
      }
      return target < cumulative;
    });
    return log_z;
  }

 private:
  template <class Visit>
  void for_each_match(std::span<const double> given, Visit&& visit) const {
    for (const auto& [key, value] : f_.entries()) {
      auto states = detail::decode(key, f_.scope(), f_.strides());
      bool match = true;
      for (std::size_t i = 0; i < given_pos_.size() && match; ++i) {
        match = states[given_pos_[i]] == static_cast<std::size_t>(given[i]);
      }
      if (match && visit(states, value)) {
        return;
      }
    }
  }

  const SparseTableFactor& f_;
  std::vector<std::size_t> given_pos_;
  std::vector<std::size_t> drawn_pos_;
};

}  // namespace

std::unique_ptr<PointEvaluator> SparseTableFactor::make_evaluator(const Scope& layout) const {
  return std::make_unique<SparseEvaluator>(*this, layout);
}

std::unique_ptr<ConditionalSampler> SparseTableFactor::make_sampler(const Scope& given) const {
  return std::make_unique<SparseSampler>(*this, scope().intersect(given));
}

std::string SparseTableFactor::describe() const {
  std::ostringstream s;
  s << "sparse" << scope().to_string() << " {" << entries_.size() << " of " << cells_ << " cells}";
  return s.str();
}

Factor to_sparse(const TableFactor& f) {
  SparseTableFactor::Entries entries;
  for (std::size_t i = 0; i < f.values().size(); ++i) {
    if (f.values()[i] != 0.0) {
      entries.emplace_hint(entries.end(), i, f.values()[i]);
    }
  }
  return SparseTableFactor::make(f.scope(), std::move(entries));
}

Factor to_dense(const SparseTableFactor& f) {
  std::vector<double> values(f.cell_count(), 0.0);
  for (const auto& [key, value] : f.entries()) {
    values[key] = value;
  }
  return Factor::make<TableFactor>(f.scope(), std::move(values), TableFactor::CanonicalLayout{});
}

namespace {

double cell_count(const Scope& scope) {
  double n = 1.0;
  for (const auto& v : scope) {
    n *= static_cast<double>(v.cardinality());
  }
  return n;
}

Factor as_dense(const Factor& x) { return x.as<TableFactor>() ? x : to_dense(x.get<SparseTableFactor>()); }
Factor as_sparse(const Factor& x) { return x.as<SparseTableFactor>() ? x : to_sparse(x.get<TableFactor>()); }

BinaryKernel mixed(Factor (*dense_op)(const TableFactor&, const TableFactor&),
                   Factor (*sparse_op)(const SparseTableFactor&, const SparseTableFactor&)) {
  return [dense_op, sparse_op](const Factor& f, const Factor& g) {
    if (cell_count(f.scope().union_with(g.scope())) <= static_cast<double>(kDenseCellLimit)) {
      return dense_op(as_dense(f).get<TableFactor>(), as_dense(g).get<TableFactor>());
    }
    return sparse_op(as_sparse(f).get<SparseTableFactor>(), as_sparse(g).get<SparseTableFactor>());
  };
}

}  // namespace

void register_table_kernels(DispatchRegistry& registry) {
  const std::string t(TableFactor::kTag);
  const std::string s(SparseTableFactor::kTag);
  auto dense_kernel = [](auto op) {
    return [op](const Factor& f, const Factor& g) { return op(f.get<TableFactor>(), g.get<TableFactor>()); };
  };
  auto sparse_kernel = [](auto op) {
    return [op](const Factor& f, const Factor& g) {
      return op(f.get<SparseTableFactor>(), g.get<SparseTableFactor>());
    };
  };
  registry.register_kernel(BinaryOp::multiply, t, t, dense_kernel(&TableFactor::multiply));
  registry.register_kernel(BinaryOp::divide, t, t, dense_kernel(&TableFactor::divide));
  registry.register_kernel(BinaryOp::add, t, t, dense_kernel(&TableFactor::add));
  registry.register_kernel(BinaryOp::multiply, s, s, sparse_kernel(&SparseTableFactor::multiply));
  registry.register_kernel(BinaryOp::divide, s, s, sparse_kernel(&SparseTableFactor::divide));
  registry.register_kernel(BinaryOp::add, s, s, sparse_kernel(&SparseTableFactor::add));
  for (const auto& [l, r] : {std::pair{t, s}, std::pair{s, t}}) {
    registry.register_kernel(BinaryOp::multiply, l, r, mixed(&TableFactor::multiply, &SparseTableFactor::multiply));
    registry.register_kernel(BinaryOp::divide, l, r, mixed(&TableFactor::divide, &SparseTableFactor::divide));
    registry.register_kernel(BinaryOp::add, l, r, mixed(&TableFactor::add, &SparseTableFactor::add));
  }
}

}  // namespace polyfactor
