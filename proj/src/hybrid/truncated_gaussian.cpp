#include "polyfactor/hybrid/truncated_gaussian.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "polyfactor/core/dispatch.hpp"
#include "polyfactor/core/operations.hpp"
#include "polyfactor/gaussian/mixture_factor.hpp"
#include "polyfactor/gaussian/moment_gaussian.hpp"

namespace polyfactor {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinLogMass = -690.7755278982137;  // ln 1e−300
constexpr std::size_t kMaxRejections = 1'000'000;

bool is_bounded(double lo, double hi) { return std::isfinite(lo) || std::isfinite(hi); }

Factor scalar_canonical(double log_value) { return CanonicalGaussian::make(Scope{}, Matrix(0, 0), Vector(0), log_value); }

std::string fresh_name(const std::string& name, const Scope& taken, const std::vector<std::string>& also) {
  std::string out = "~" + name;
  auto used = [&](const std::string& s) {
    return taken.contains(s) || std::find(also.begin(), also.end(), s) != also.end();
  };
  while (used(out)) {
    out += "'";
  }
  return out;
}

struct Parts {
  Factor base;
  Box box;
  Scope latent;
};

Factor build(const Parts& p) {
  const Scope& s = p.base.scope();
  Vector lo = Vector::Constant(static_cast<Eigen::Index>(s.size()), -kInf);
  Vector hi = Vector::Constant(static_cast<Eigen::Index>(s.size()), kInf);
  for (const auto& [name, bounds] : p.box) {
    if (auto i = s.index_of(name)) {
      lo[static_cast<Eigen::Index>(*i)] = bounds.first;
      hi[static_cast<Eigen::Index>(*i)] = bounds.second;
    }
  }
  return TruncatedGaussian::make(p.base, std::move(lo), std::move(hi), p.latent);
}

// Renames latent variables of `t` that clash with names in `avoid`.
Parts parts_of(const TruncatedGaussian& t, const Scope& avoid) {
  Parts p{t.base_factor(), t.box(), t.latent()};
  RenameMap mapping;
  std::vector<std::string> fresh;
  std::vector<Variable> latent;
  for (const auto& v : t.latent()) {
    if (avoid.contains(v.name())) {
      std::string name = fresh_name(v.name(), t.base().scope().union_with(avoid), fresh);
      fresh.push_back(name);
      mapping[v.name()] = name;
      latent.push_back(v.renamed(name));
    } else {
      latent.push_back(v);
    }
  }
  if (mapping.empty()) {
    return p;
  }
  p.base = rename(p.base, mapping);
  Box box;
  for (const auto& [name, bounds] : p.box) {
    auto it = mapping.find(name);
    box[it == mapping.end() ? name : it->second] = bounds;
  }
  p.box = std::move(box);
  p.latent = Scope(latent);
  return p;
}

}  // namespace

TruncatedGaussian::TruncatedGaussian(Factor base, Vector lower, Vector upper, Scope latent)
    : FactorImpl(base.scope().minus(latent)), base_(std::move(base)), lower_(std::move(lower)),
      upper_(std::move(upper)), latent_(std::move(latent)) {
  (void)this->base();
  const auto n = static_cast<Eigen::Index>(base_.scope().size());
  if (lower_.size() != n || upper_.size() != n) {
    fail(ErrorCode::invalid_argument, "truncation box does not match the base scope " + base_.scope().to_string());
  }
  if (!base_.scope().includes(latent_)) {
    fail(ErrorCode::invalid_argument, "latent variables must lie in the base scope");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isnan(lower_[i]) || std::isnan(upper_[i]) || lower_[i] > upper_[i]) {
      fail(ErrorCode::invalid_argument, "truncation bounds must satisfy lower ≤ upper");
    }
  }
}

Factor TruncatedGaussian::make(Factor base, Vector lower, Vector upper, Scope latent) {
  if (base.as<CanonicalGaussian>() == nullptr) {
    if (const auto* m = base.as<MomentGaussian>()) {
      base = m->to_canonical();
    } else {
      fail(ErrorCode::invalid_argument, "truncation needs a Gaussian base, got '" + std::string(base.tag()) + "'");
    }
  }
  Scope visible = base.scope().minus(latent);
  bool any_bounded = false;
  bool empty = base.impl().is_zero();
  std::vector<Variable> free_latent;
  for (std::size_t i = 0; i < base.scope().size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    empty = empty || !(lower[k] < upper[k]);
    if (is_bounded(lower[k], upper[k])) {
      any_bounded = true;
    } else if (latent.contains(base.scope()[i].name())) {
      free_latent.push_back(base.scope()[i]);
    }
  }
  if (empty) {
    return CanonicalGaussian::zero(visible);
  }
  if (!free_latent.empty()) {
    // Unbounded latent variables integrate out exactly.
    Scope drop(free_latent);
    Factor reduced_base = polyfactor::sum_out(base, drop);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < base.scope().size(); ++i) {
      if (!drop.contains(base.scope()[i].name())) {
        keep.push_back(i);
      }
    }
    return make(reduced_base, select(lower, keep), select(upper, keep), latent.minus(drop));
  }
  if (!any_bounded) {
    return base;
  }
  Factor t = Factor::make<TruncatedGaussian>(std::move(base), std::move(lower), std::move(upper), std::move(latent));
  if (visible.empty()) {
    return scalar_canonical(t.get<TruncatedGaussian>().log_mass());
  }
  return t;
}

const TruncatedGaussian::Cache& TruncatedGaussian::cache() const {
  std::call_once(once_, [this] {
    const GaussianMoments m = base().moments();
    cache_.base_log_mass = m.log_mass;
    cache_.box = truncated_moments(m.mean, m.covariance, lower_, upper_);
    cache_.box.log_mass += m.log_mass;
  });
  return cache_;
}

double TruncatedGaussian::log_mass() const {
  if (base().is_zero()) {
    return -kInf;
  }
  return cache().box.log_mass;
}

Box TruncatedGaussian::box() const {
  Box out;
  for (std::size_t i = 0; i < base_.scope().size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (is_bounded(lower_[k], upper_[k])) {
      out[base_.scope()[i].name()] = {lower_[k], upper_[k]};
    }
  }
  return out;
}

bool TruncatedGaussian::is_zero() const {
  if (base().is_zero()) {
    return true;
  }
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] < upper_[i])) {
      return true;
    }
  }
  return false;
}

double TruncatedGaussian::evaluate(const Assignment& a) const {
  for (const auto& v : scope()) {
    const auto k = static_cast<Eigen::Index>(base_.scope().position(v.name()));
    const double x = a.at(v);
    if (!(x >= lower_[k] && x < upper_[k])) {
      return 0.0;
    }
  }
  if (latent_.empty()) {
    return base().evaluate(a);
  }
  const Factor rest = polyfactor::reduce(base_, a.restricted_to(scope()));
  const GaussianMoments m = moments_of(rest);
  const auto pos = positions_in(latent_, base_.scope());
  return std::exp(m.log_mass + truncated_log_mass(m.mean, m.covariance, select(lower_, pos), select(upper_, pos)));
}

Factor TruncatedGaussian::sum_out(const Scope& vars) const {
  if (vars == scope()) {
    const double lm = log_mass();
    return lm == -kInf ? CanonicalGaussian::zero(Scope{}) : scalar_canonical(lm);
  }
  Parts p{base_, box(), latent_};
  std::vector<Variable> unbounded;
  std::vector<Variable> bounded;
  for (const auto& v : vars) {
    (p.box.count(v.name()) ? bounded : unbounded).push_back(v);
  }
  if (!unbounded.empty()) {
    p.base = polyfactor::sum_out(p.base, Scope(unbounded));
  }
  if (!bounded.empty()) {
    RenameMap mapping;
    std::vector<std::string> fresh;
    std::vector<Variable> latent = latent_.vars();
    for (const auto& v : bounded) {
      std::string name = fresh_name(v.name(), p.base.scope(), fresh);
      fresh.push_back(name);
      mapping[v.name()] = name;
      latent.push_back(v.renamed(name));
      auto node = p.box.extract(v.name());
      node.key() = name;
      p.box.insert(std::move(node));
    }
    p.base = rename(p.base, mapping);
    p.latent = Scope(latent);
  }
  return build(p);
}

Factor TruncatedGaussian::reduce(const Assignment& evidence) const {
  Assignment visible = evidence.restricted_to(scope());
  std::vector<Variable> fixed;
  for (const auto& v : scope()) {
    if (visible.contains(v.name())) {
      fixed.push_back(v);
    }
  }
  if (fixed.empty()) {
    return Factor(std::make_shared<const TruncatedGaussian>(base_, lower_, upper_, latent_));
  }
  Box b = box();
  for (const auto& v : fixed) {
    if (auto it = b.find(v.name()); it != b.end()) {
      const double x = *visible.find(v.name());
      if (!(x >= it->second.first && x < it->second.second)) {
        return CanonicalGaussian::zero(scope().minus(Scope(fixed)));
      }
      b.erase(it);
    }
  }
  return build({polyfactor::reduce(base_, visible), std::move(b), latent_});
}

Factor TruncatedGaussian::scaled(double log_factor) const {
  return make(base_.impl().scaled(log_factor), lower_, upper_, latent_);
}

Factor TruncatedGaussian::renamed(const RenameMap& mapping) const {
  std::vector<Variable> targets;
  for (const auto& [from, to] : mapping) {
    (void)from;
    targets.push_back(Variable::continuous(to));
  }
  std::vector<Variable> unique;
  for (const auto& v : targets) {
    if (std::none_of(unique.begin(), unique.end(), [&](const Variable& u) { return u.name() == v.name(); })) {
      unique.push_back(v);
    }
  }
  Parts p = parts_of(*this, Scope(unique));
  p.base = rename(p.base, mapping);
  Box box;
  for (const auto& [name, bounds] : p.box) {
    auto it = mapping.find(name);
    box[it == mapping.end() ? name : it->second] = bounds;
  }
  p.box = std::move(box);
  return build(p);
}

GaussianMoments TruncatedGaussian::moments() const {
  const Cache& c = cache();
  if (c.box.log_mass == -kInf) {
    fail(ErrorCode::zero_mass, "truncated Gaussian has no mass inside its box");
  }
  const auto pos = positions_in(scope(), base_.scope());
  return {scope(), select(c.box.mean, pos), symmetrized(block(c.box.covariance, pos, pos)), c.box.log_mass};
}

Factor TruncatedGaussian::multiply(const TruncatedGaussian& t, const CanonicalGaussian& g) {
  Parts p = parts_of(t, g.scope());
  p.base = CanonicalGaussian::multiply(p.base.get<CanonicalGaussian>(), g);
  return build(p);
}

Factor TruncatedGaussian::multiply(const TruncatedGaussian& t, const TruncatedGaussian& u) {
  Parts pt = parts_of(t, u.base_factor().scope());
  Parts pu = parts_of(u, pt.base.scope());
  Parts out{CanonicalGaussian::multiply(pt.base.get<CanonicalGaussian>(), pu.base.get<CanonicalGaussian>()), pt.box,
            pt.latent.union_with(pu.latent)};
  for (const auto& [name, bounds] : pu.box) {
    auto [it, inserted] = out.box.emplace(name, bounds);
    if (!inserted) {
      it->second = {std::max(it->second.first, bounds.first), std::min(it->second.second, bounds.second)};
      if (it->second.first > it->second.second) {
        it->second.second = it->second.first;
      }
    }
  }
  return build(out);
}

Factor TruncatedGaussian::divide(const TruncatedGaussian& t, const CanonicalGaussian& g) {
  Parts p{t.base_factor(), t.box(), t.latent()};
  p.base = CanonicalGaussian::divide(p.base.get<CanonicalGaussian>(), g);
  return build(p);
}

Factor TruncatedGaussian::intersected(const Box& extra) const {
  Parts p{base_, box(), latent_};
  for (const auto& [name, bounds] : extra) {
    if (!scope().contains(name)) {
      fail(ErrorCode::not_in_scope, "box variable '" + name + "' is not in " + scope().to_string());
    }
    auto [it, inserted] = p.box.emplace(name, bounds);
    if (!inserted) {
      it->second = {std::max(it->second.first, bounds.first), std::min(it->second.second, bounds.second)};
      if (it->second.first > it->second.second) {
        it->second.second = it->second.first;
      }
    }
  }
  return build(p);
}

namespace {

class TruncatedEvaluator final : public PointEvaluator {
 public:
  TruncatedEvaluator(const TruncatedGaussian& t, const Scope& layout)
      : k_(t.base().precision()), h_(t.base().information()), g_(t.base().log_constant()), lower_(t.lower()),
        upper_(t.upper()), positions_(positions_in(t.scope(), layout)), x_(static_cast<Eigen::Index>(positions_.size())) {}

  double operator()(std::span<const double> row) const override { return std::exp(log_value(row)); }

  double log_value(std::span<const double> row) const override {
    for (std::size_t i = 0; i < positions_.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      x_(k) = row[positions_[i]];
      if (!(x_(k) >= lower_(k) && x_(k) < upper_(k))) {
        return -kInf;
      }
    }
    return -0.5 * x_.dot(k_ * x_) + h_.dot(x_) + g_;
  }

 private:
  Matrix k_;
  Vector h_;
  double g_;
  Vector lower_;
  Vector upper_;
  std::vector<std::size_t> positions_;
  mutable Vector x_;
};

class TruncatedSampler final : public ConditionalSampler {
 public:
  TruncatedSampler(const TruncatedGaussian& t, const Scope& given)
      : ConditionalSampler(t.scope().minus(given)), cond_(t.base(), given) {
    const Scope& free = cond_.free_scope();
    const auto pos = positions_in(free, t.base_factor().scope());
    lower_ = select(t.lower(), pos);
    upper_ = select(t.upper(), pos);
    for (std::size_t i = 0; i < free.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      (is_bounded(lower_[k], upper_[k]) ? bounded_ : unbounded_).push_back(i);
    }
    out_positions_ = positions_in(drawn_scope(), free);
    const Scope given_scope = t.base_factor().scope().minus(free);
    const auto gpos = positions_in(given_scope, t.base_factor().scope());
    given_lower_ = select(t.lower(), gpos);
    given_upper_ = select(t.upper(), gpos);
    const Matrix& c = cond_.covariance();
    const auto groups = correlated_groups(c, bounded_);
    diagonal_ = std::all_of(groups.begin(), groups.end(), [](const auto& g) { return g.size() == 1; });
    lower_b_ = select(lower_, bounded_);
    upper_b_ = select(upper_, bounded_);
    const Matrix c_bb = block(c, bounded_, bounded_);
    sd_b_ = c_bb.diagonal().cwiseSqrt();
    chol_bb_ = Eigen::LLT<Matrix>(c_bb).matrixL();
    if (!unbounded_.empty()) {
      const Matrix c_ub = block(c, unbounded_, bounded_);
      const SpdFactor f(c_bb, ErrorCode::not_normalizable, "truncated sampler");
      gain_ = f.solve(Matrix(c_ub.transpose())).transpose();
      const Matrix rest = symmetrized(block(c, unbounded_, unbounded_) - gain_ * c_ub.transpose());
      chol_u_ = Eigen::LLT<Matrix>(rest).matrixL();
    }
  }

  double log_mass(std::span<const double> given) const override {
    if (!given_inside(given)) {
      return -kInf;
    }
    const double base = cond_.log_mass(given);
    if (base == -kInf) {
      return -kInf;
    }
    cond_.mean(given, m_);
    return base + box_log_mass(m_);
  }

  double draw(std::span<const double> given, std::span<double> out, Rng& rng) const override {
    const double lm = log_mass(given);
    if (lm == -kInf) {
      fail(ErrorCode::degenerate, "cannot draw from a truncated slice with zero mass");
    }
    const Vector& m = m_;
    if (diagonal_ && unbounded_.empty()) {
      for (std::size_t i = 0; i < bounded_.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        const auto j = static_cast<Eigen::Index>(bounded_[i]);
        m_[j] = sample_truncated_1d(m[j], sd_b_[k], lower_b_[k], upper_b_[k], rng);
      }
      for (std::size_t i = 0; i < out_positions_.size(); ++i) {
        out[i] = m_[static_cast<Eigen::Index>(out_positions_[i])];
      }
      return lm;
    }
    const Vector m_b = select(m, bounded_);
    Vector b(m_b.size());
    if (diagonal_) {
      for (Eigen::Index i = 0; i < b.size(); ++i) {
        b[i] = sample_truncated_1d(m_b[i], sd_b_[i], lower_b_[i], upper_b_[i], rng);
      }
    } else {
      std::size_t tries = 0;
      while (true) {
        Vector z(m_b.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) {
          z[i] = rng.normal();
        }
        b = m_b + chol_bb_ * z;
        if (((b.array() >= lower_b_.array()) && (b.array() < upper_b_.array())).all()) {
          break;
        }
        if (++tries == kMaxRejections) {
          fail(ErrorCode::degenerate, "rejection sampling of a correlated truncation did not accept");
        }
      }
    }
    Vector y = m;
    for (std::size_t i = 0; i < bounded_.size(); ++i) {
      y[static_cast<Eigen::Index>(bounded_[i])] = b[static_cast<Eigen::Index>(i)];
    }
    if (!unbounded_.empty()) {
      Vector z(static_cast<Eigen::Index>(unbounded_.size()));
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        z[i] = rng.normal();
      }
      const Vector u = select(m, unbounded_) + gain_ * (b - m_b) + chol_u_ * z;
      for (std::size_t i = 0; i < unbounded_.size(); ++i) {
        y[static_cast<Eigen::Index>(unbounded_[i])] = u[static_cast<Eigen::Index>(i)];
      }
    }
    for (std::size_t i = 0; i < out_positions_.size(); ++i) {
      out[i] = y[static_cast<Eigen::Index>(out_positions_[i])];
    }
    return lm;
  }

 private:
  [[nodiscard]] bool given_inside(std::span<const double> given) const {
    for (std::size_t i = 0; i < given.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      if (!(given[i] >= given_lower_[k] && given[i] < given_upper_[k])) {
        return false;
      }
    }
    return true;
  }

  [[nodiscard]] double box_log_mass(const Vector& m) const {
    if (diagonal_) {
      double total = 0.0;
      for (std::size_t i = 0; i < bounded_.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        const double mu = m[static_cast<Eigen::Index>(bounded_[i])];
        total += log_normal_interval((lower_b_[k] - mu) / sd_b_[k], (upper_b_[k] - mu) / sd_b_[k]);
      }
      return total;
    }
    return truncated_log_mass(m, cond_.covariance(), lower_, upper_);
  }

  GaussianConditioner cond_;
  Vector lower_;
  Vector upper_;
  std::vector<std::size_t> bounded_;
  std::vector<std::size_t> unbounded_;
  std::vector<std::size_t> out_positions_;
  Vector given_lower_;
  Vector given_upper_;
  bool diagonal_ = true;
  Vector lower_b_;
  Vector upper_b_;
  Vector sd_b_;
  Matrix chol_bb_;
  Matrix gain_;
  Matrix chol_u_;
  mutable Vector m_;
};

}  // namespace

std::unique_ptr<PointEvaluator> TruncatedGaussian::make_evaluator(const Scope& layout) const {
  if (!latent_.empty()) {
    return FactorImpl::make_evaluator(layout);
  }
  return std::make_unique<TruncatedEvaluator>(*this, layout);
}

std::unique_ptr<ConditionalSampler> TruncatedGaussian::make_sampler(const Scope& given) const {
  if (is_zero()) {
    fail(ErrorCode::degenerate, "cannot sample from a zero truncated Gaussian");
  }
  return std::make_unique<TruncatedSampler>(*this, scope().intersect(given));
}

std::string TruncatedGaussian::describe() const {
  std::ostringstream s;
  s << "truncated" << scope().to_string() << " box{";
  bool first = true;
  for (const auto& [name, b] : box()) {
    s << (first ? "" : ", ") << name << " in [" << b.first << ", " << b.second << ")";
    first = false;
  }
  s << "}";
  if (!latent_.empty()) {
    s << " latent" << latent_.to_string();
  }
  s << " base " << base_.describe();
  return s.str();
}

Factor truncate(const Factor& f, const Vector& lower, const Vector& upper) {
  Factor base = f;
  if (const auto* m = f.as<MomentGaussian>()) {
    base = m->to_canonical();
  }
  const auto& c = base.get<CanonicalGaussian>();
  const GaussianMoments m = c.moments();
  if (lower.size() != m.mean.size() || upper.size() != m.mean.size()) {
    fail(ErrorCode::invalid_argument, "truncation box does not match " + f.scope().to_string());
  }
  const double box_mass = truncated_log_mass(m.mean, m.covariance, lower, upper);
  if (!(box_mass >= kMinLogMass)) {
    fail(ErrorCode::zero_mass, "truncation box holds less than 1e-300 of the mass of " + f.scope().to_string());
  }
  return TruncatedGaussian::make(base, lower, upper);
}

Factor truncate(const Factor& f, const Box& box) {
  const auto n = static_cast<Eigen::Index>(f.scope().size());
  Vector lo = Vector::Constant(n, -kInf);
  Vector hi = Vector::Constant(n, kInf);
  for (const auto& [name, bounds] : box) {
    const auto i = static_cast<Eigen::Index>(f.scope().position(name));
    lo[i] = bounds.first;
    hi[i] = bounds.second;
  }
  return truncate(f, lo, hi);
}

void register_truncated_kernels(DispatchRegistry& registry) {
  const std::string t(TruncatedGaussian::kTag);
  const std::string c(CanonicalGaussian::kTag);
  registry.register_kernel(BinaryOp::multiply, t, c, [](const Factor& f, const Factor& g) {
    return TruncatedGaussian::multiply(f.get<TruncatedGaussian>(), g.get<CanonicalGaussian>());
  });
  registry.register_kernel(BinaryOp::multiply, t, t, [](const Factor& f, const Factor& g) {
    return TruncatedGaussian::multiply(f.get<TruncatedGaussian>(), g.get<TruncatedGaussian>());
  });
  registry.register_kernel(BinaryOp::divide, t, c, [](const Factor& f, const Factor& g) {
    return TruncatedGaussian::divide(f.get<TruncatedGaussian>(), g.get<CanonicalGaussian>());
  });
  const auto mix = [](const Factor& f, const Factor& g) { return MixtureFactor::make(f.scope(), {f, g}); };
  registry.register_kernel(BinaryOp::add, t, t, mix);
  registry.register_kernel(BinaryOp::add, t, c, mix);
  register_mixture_kernels(registry, t);
}

}  // namespace polyfactor
