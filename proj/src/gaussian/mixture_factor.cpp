#include "polyfactor/gaussian/mixture_factor.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "polyfactor/core/dispatch.hpp"
#include "polyfactor/core/operations.hpp"
#include "polyfactor/gaussian/canonical_gaussian.hpp"
#include "polyfactor/gaussian/moment_gaussian.hpp"

namespace polyfactor {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

GaussianMoments moments_of(const Factor& f) {
  if (const auto* source = dynamic_cast<const MomentSource*>(&f.impl())) {
    return source->moments();
  }
  fail(ErrorCode::unsupported, "representation '" + std::string(f.tag()) + "' has no moments");
}

GaussianMoments combine_moments(const std::vector<GaussianMoments>& parts) {
  double top = kNegInf;
  for (const auto& p : parts) {
    top = std::max(top, p.log_mass);
  }
  if (parts.empty() || top == kNegInf) {
    fail(ErrorCode::zero_mass, "cannot moment-match a factor with zero mass");
  }
  const auto n = parts.front().mean.size();
  GaussianMoments out{parts.front().scope, Vector::Zero(n), Matrix::Zero(n, n), 0.0};
  double total = 0.0;
  for (const auto& p : parts) {
    const double w = std::exp(p.log_mass - top);
    total += w;
    out.mean += w * p.mean;
  }
  out.mean /= total;
  for (const auto& p : parts) {
    const double w = std::exp(p.log_mass - top);
    const Vector d = p.mean - out.mean;
    out.covariance += w * (p.covariance + d * d.transpose());
  }
  out.covariance = symmetrized(out.covariance / total);
  out.log_mass = top + std::log(total);
  return out;
}

MixtureFactor::MixtureFactor(Scope scope, std::vector<Factor> components)
    : FactorImpl(std::move(scope)), components_(std::move(components)) {
  if (components_.empty()) {
    fail(ErrorCode::invalid_argument, "a mixture needs at least one component");
  }
  for (const auto& c : components_) {
    if (c.scope() != this->scope()) {
      fail(ErrorCode::scope_mismatch, "mixture component scope " + c.scope().to_string() + " differs from " +
                                          this->scope().to_string());
    }
  }
}

Factor MixtureFactor::make(const Scope& scope, const std::vector<Factor>& components) {
  std::vector<Factor> flat;
  auto push = [&](const Factor& c) {
    if (c.impl().is_zero()) {
      return;
    }
    if (const auto* cg = c.as<CanonicalGaussian>()) {
      for (auto& existing : flat) {
        const auto* e = existing.as<CanonicalGaussian>();
        if (e != nullptr && e->precision() == cg->precision() && e->information() == cg->information()) {
          existing = CanonicalGaussian::make(scope, e->precision(), e->information(),
                                             log_add_exp(e->log_constant(), cg->log_constant()));
          return;
        }
      }
    }
    flat.push_back(c);
  };
  for (const auto& c : components) {
    if (c.scope() != scope) {
      fail(ErrorCode::scope_mismatch, "mixture component scope " + c.scope().to_string() + " differs from " +
                                          scope.to_string());
    }
    if (const auto* m = c.as<MixtureFactor>()) {
      for (const auto& inner : m->components()) {
        push(inner);
      }
    } else if (const auto* mg = c.as<MomentGaussian>()) {
      push(mg->to_canonical());
    } else {
      push(c);
    }
  }
  if (flat.empty()) {
    return CanonicalGaussian::zero(scope);
  }
  if (flat.size() == 1) {
    return flat.front();
  }
  return Factor::make<MixtureFactor>(scope, std::move(flat));
}

double MixtureFactor::evaluate(const Assignment& a) const {
  double total = 0.0;
  for (const auto& c : components_) {
    total += c.impl().evaluate(a);
  }
  return total;
}

namespace {

template <class Op>
Factor per_component(const MixtureFactor& m, Op op) {
  std::vector<Factor> out;
  out.reserve(m.components().size());
  for (const auto& c : m.components()) {
    out.push_back(op(c));
  }
  const Scope scope = out.front().scope();
  return MixtureFactor::make(scope, out);
}

}  // namespace

Factor MixtureFactor::sum_out(const Scope& vars) const {
  return per_component(*this, [&](const Factor& c) { return polyfactor::sum_out(c, vars); });
}

Factor MixtureFactor::reduce(const Assignment& evidence) const {
  return per_component(*this, [&](const Factor& c) { return polyfactor::reduce(c, evidence); });
}

Factor MixtureFactor::scaled(double log_factor) const {
  return per_component(*this, [&](const Factor& c) { return c.impl().scaled(log_factor); });
}

Factor MixtureFactor::renamed(const RenameMap& mapping) const {
  return per_component(*this, [&](const Factor& c) { return polyfactor::rename(c, mapping); });
}

GaussianMoments MixtureFactor::moments() const {
  std::vector<GaussianMoments> parts;
  for (const auto& c : components_) {
    parts.push_back(moments_of(c));
  }
  return combine_moments(parts);
}

namespace {

class MixtureEvaluator final : public PointEvaluator {
 public:
  MixtureEvaluator(const MixtureFactor& m, const Scope& layout) {
    for (const auto& c : m.components()) {
      parts_.push_back(c.impl().make_evaluator(layout));
    }
  }

  double operator()(std::span<const double> row) const override {
    double total = 0.0;
    for (const auto& p : parts_) {
      total += (*p)(row);
    }
    return total;
  }

  double log_value(std::span<const double> row) const override {
    double total = kNegInf;
    for (const auto& p : parts_) {
      total = log_add_exp(total, p->log_value(row));
    }
    return total;
  }

 private:
  std::vector<std::unique_ptr<PointEvaluator>> parts_;
};

class MixtureSampler final : public ConditionalSampler {
 public:
  MixtureSampler(const MixtureFactor& m, const Scope& given) : ConditionalSampler(m.scope().minus(given)) {
    for (const auto& c : m.components()) {
      parts_.push_back(c.impl().make_sampler(given));
    }
  }

  double log_mass(std::span<const double> given) const override {
    double total = kNegInf;
    for (const auto& p : parts_) {
      total = log_add_exp(total, p->log_mass(given));
    }
    return total;
  }

  double draw(std::span<const double> given, std::span<double> out, Rng& rng) const override {
    std::vector<double> masses;
    double top = kNegInf;
    for (const auto& p : parts_) {
      masses.push_back(p->log_mass(given));
      top = std::max(top, masses.back());
    }
    if (top == kNegInf) {
      fail(ErrorCode::degenerate, "cannot draw from a mixture with zero mass");
    }
    double total = 0.0;
    for (double& w : masses) {
      w = std::exp(w - top);
      total += w;
    }
    const double target = rng.uniform() * total;
    std::size_t pick = 0;
    for (double cumulative = 0.0; pick + 1 < masses.size(); ++pick) {
      cumulative += masses[pick];
      if (target < cumulative) {
        break;
      }
    }
    while (masses[pick] == 0.0) {
      --pick;
    }
    parts_[pick]->draw(given, out, rng);
    return top + std::log(total);
  }

 private:
  std::vector<std::unique_ptr<ConditionalSampler>> parts_;
};

}  // namespace

std::unique_ptr<PointEvaluator> MixtureFactor::make_evaluator(const Scope& layout) const {
  return std::make_unique<MixtureEvaluator>(*this, layout);
}

std::unique_ptr<ConditionalSampler> MixtureFactor::make_sampler(const Scope& given) const {
  return std::make_unique<MixtureSampler>(*this, scope().intersect(given));
}

std::string MixtureFactor::describe() const {
  std::ostringstream s;
  s << "mixture" << scope().to_string() << " of " << components_.size() << " components";
  return s.str();
}

Factor moment_match(const Factor& f) { return MomentGaussian::make(moments_of(f)); }

void register_mixture_kernels(DispatchRegistry& registry, const std::string& tag) {
  const std::string m(MixtureFactor::kTag);
  registry.register_kernel(BinaryOp::multiply, m, tag, [](const Factor& f, const Factor& g) {
    std::vector<Factor> out;
    for (const auto& c : f.get<MixtureFactor>().components()) {
      out.push_back(multiply(c, g));
    }
    return MixtureFactor::make(out.front().scope(), out);
  });
  if (tag != m) {
    registry.register_kernel(BinaryOp::divide, m, tag, [](const Factor& f, const Factor& g) {
      std::vector<Factor> out;
      for (const auto& c : f.get<MixtureFactor>().components()) {
        out.push_back(divide(c, g));
      }
      return MixtureFactor::make(f.scope(), out);
    });
  }
  registry.register_kernel(BinaryOp::add, m, tag, [](const Factor& f, const Factor& g) {
    std::vector<Factor> out = f.get<MixtureFactor>().components();
    out.push_back(g);
    return MixtureFactor::make(f.scope(), out);
  });
}

}  // namespace polyfactor
