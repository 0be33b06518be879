#include "polyfactor/sample/sample_factor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "polyfactor/core/dispatch.hpp"
#include "polyfactor/table/table_factor.hpp"

namespace polyfactor {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double sum_of(const std::vector<double>& w) { return std::accumulate(w.begin(), w.end(), 0.0); }

std::vector<std::string> extended(std::vector<std::string> lineage, std::string entry) {
  lineage.push_back(std::move(entry));
  return lineage;
}

// Copies the columns `cols` of every kept row.
std::vector<double> select_columns(const SampleFactor& s, const std::vector<std::size_t>& cols,
                                   const std::vector<std::size_t>& rows) {
  std::vector<double> out;
  out.reserve(rows.size() * cols.size());
  for (std::size_t r : rows) {
    const auto p = s.particle(r);
    for (std::size_t c : cols) {
      out.push_back(p[c]);
    }
  }
  return out;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

class ParticleSampler final : public ConditionalSampler {
 public:
  ParticleSampler(const SampleFactor& s, const Scope& given)
      : ConditionalSampler(s.scope().minus(given)), s_(s), given_(positions_in(given, s.scope())),
        drawn_(positions_in(drawn_scope(), s.scope())) {}

  double log_mass(std::span<const double> given) const override {
    double total = 0.0;
    for (std::size_t i = 0; i < s_.size(); ++i) {
      if (matches(i, given)) {
        total += s_.weights()[i];
      }
    }
    return std::log(total) + s_.log_scale();
  }

  double draw(std::span<const double> given, std::span<double> out, Rng& rng) const override {
    const double lm = log_mass(given);
    if (lm == kNegInf) {
      return lm;
    }
    double u = rng.uniform() * std::exp(lm - s_.log_scale());
    std::size_t pick = s_.size();
    for (std::size_t i = 0; i < s_.size(); ++i) {
      if (matches(i, given)) {
        pick = i;
        u -= s_.weights()[i];
        if (u < 0.0) {
          break;
        }
      }
    }
    const auto p = s_.particle(pick);
    for (std::size_t k = 0; k < drawn_.size(); ++k) {
      out[k] = p[drawn_[k]];
    }
    return lm;
  }

 private:
  bool matches(std::size_t i, std::span<const double> given) const {
    const auto p = s_.particle(i);
    for (std::size_t k = 0; k < given_.size(); ++k) {
      if (p[given_[k]] != given[k]) {
        return false;
      }
    }
    return true;
  }

  const SampleFactor& s_;
  std::vector<std::size_t> given_;
  std::vector<std::size_t> drawn_;
};

}  // namespace

SampleFactor::SampleFactor(Scope scope, std::vector<double> particles, std::vector<double> weights, double log_scale,
                           std::vector<std::string> lineage)
    : FactorImpl(std::move(scope)), particles_(std::move(particles)), weights_(std::move(weights)),
      log_scale_(log_scale), lineage_(std::move(lineage)) {
  if (weights_.empty()) {
    fail(ErrorCode::invalid_argument, "a sample factor needs at least one particle");
  }
  if (particles_.size() != weights_.size() * dimension()) {
    fail(ErrorCode::invalid_argument,
         fmt::format("{} particle values do not fit {} particles over {}", particles_.size(), weights_.size(),
                     this->scope().to_string()));
  }
  double top = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || std::isinf(w)) {
      fail(ErrorCode::invalid_argument, fmt::format("particle weight {} is not a finite nonnegative number", w));
    }
    top = std::max(top, w);
  }
  if (top == 0.0 || !std::isfinite(log_scale_)) {
    fail(ErrorCode::degenerate, "every particle weight is zero");
  }
  if (top != 1.0) {
    for (double& w : weights_) {
      w /= top;
    }
    log_scale_ += std::log(top);
  }
}

std::span<const double> SampleFactor::particle(std::size_t i) const {
  return {particles_.data() + i * dimension(), dimension()};
}

double SampleFactor::log_total() const noexcept { return std::log(sum_of(weights_)) + log_scale_; }

std::uint64_t SampleFactor::lineage_seed(std::string_view label) const {
  std::uint64_t seed = 0;
  for (const auto& entry : lineage_) {
    seed = derive_seed(seed, entry);
  }
  return derive_seed(seed, label);
}

double SampleFactor::evaluate(const Assignment& a) const {
  const auto row = a.values_for(scope());
  double total = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    const auto p = particle(i);
    if (std::equal(p.begin(), p.end(), row.begin())) {
      total += weights_[i];
    }
  }
  return total * std::exp(log_scale_);
}

double SampleFactor::log_scalar() const {
  if (!scope().empty()) {
    return FactorImpl::log_scalar();
  }
  return log_total();
}

Factor SampleFactor::sum_out(const Scope& vars) const {
  const Scope kept = scope().minus(vars);
  return Factor::make<SampleFactor>(kept, select_columns(*this, positions_in(kept, scope()), all_rows(size())), weights_, log_scale_,
                     extended(lineage_, "sum_out" + vars.to_string()));
}

Factor SampleFactor::reduce(const Assignment& evidence) const {
  std::vector<Variable> fixed_vars;
  for (const auto& v : scope()) {
    if (evidence.contains(v.name())) {
      if (v.is_continuous()) {
        fail(ErrorCode::unsupported,
             "sample factors can only be reduced on discrete variables; '" + v.name() + "' is continuous");
      }
      fixed_vars.push_back(v);
    }
  }
  const Scope fixed(fixed_vars);
  const auto fixed_pos = positions_in(fixed, scope());
  const auto values = evidence.values_for(fixed);
  std::vector<std::size_t> rows;
  std::vector<double> weights;
  for (std::size_t i = 0; i < size(); ++i) {
    const auto p = particle(i);
    bool keep = true;
    for (std::size_t k = 0; k < fixed_pos.size() && keep; ++k) {
      keep = p[fixed_pos[k]] == values[k];
    }
    if (keep) {
      rows.push_back(i);
      weights.push_back(weights_[i]);
    }
  }
  if (rows.empty()) {
    fail(ErrorCode::degenerate, "no particle matches the evidence " + evidence.restricted_to(fixed).to_string());
  }
  const Scope kept = scope().minus(fixed);
  return Factor::make<SampleFactor>(kept, select_columns(*this, positions_in(kept, scope()), rows), std::move(weights), log_scale_,
                     extended(lineage_, "reduce" + evidence.restricted_to(fixed).to_string()));
}

Factor SampleFactor::scaled(double log_factor) const {
  return Factor::make<SampleFactor>(scope(), particles_, weights_, log_scale_ + log_factor, lineage_);
}

Factor SampleFactor::renamed(const RenameMap& mapping) const {
  const Scope target = rename_scope(scope(), mapping);
  // Column j of the result comes from the source variable renamed to target[j].
  std::vector<std::size_t> cols(target.size());
  for (std::size_t i = 0; i < scope().size(); ++i) {
    const auto it = mapping.find(scope()[i].name());
    const std::string& name = it == mapping.end() ? scope()[i].name() : it->second;
    cols[target.position(name)] = i;
  }
  return Factor::make<SampleFactor>(target, select_columns(*this, cols, all_rows(size())), weights_, log_scale_,
                                    lineage_);
}

std::unique_ptr<ConditionalSampler> SampleFactor::make_sampler(const Scope& given) const {
  return std::make_unique<ParticleSampler>(*this, scope().intersect(given));
}

std::string SampleFactor::describe() const {
  return fmt::format("sample{} n={} log_mass={:.6g}", scope().to_string(), size(), log_total());
}

GaussianMoments SampleFactor::moments() const {
  if (!scope().all_continuous()) {
    fail(ErrorCode::unsupported, "moments of a sample factor need a continuous scope, got " + scope().to_string());
  }
  return *estimate_moments(*this).continuous;
}

Factor SampleFactor::multiply(const SampleFactor& s, const Factor& f) {
  if (f.tag() == kTag) {
    fail(ErrorCode::unsupported_pair, "sample ⊗ sample is not supported; reweight by an evaluable density instead");
  }
  const std::size_t n = s.size();
  std::vector<double> log_w(n);
  if (s.scope().includes(f.scope())) {
    const auto eval = f.impl().make_evaluator(s.scope());
    for (std::size_t i = 0; i < n; ++i) {
      log_w[i] = s.weights_[i] > 0.0 ? std::log(s.weights_[i]) + eval->log_value(s.particle(i)) : kNegInf;
    }
    const double top = *std::max_element(log_w.begin(), log_w.end());
    if (!(top > kNegInf)) {
      fail(ErrorCode::degenerate, "every particle weight is zero after reweighting by " + f.describe());
    }
    std::vector<double> w(n);
    std::transform(log_w.begin(), log_w.end(), w.begin(), [top](double lw) { return std::exp(lw - top); });
    return Factor::make<SampleFactor>(s.scope(), s.particles_, std::move(w), s.log_scale_ + top,
                                      extended(s.lineage_, "reweight" + f.scope().to_string()));
  }

  const Scope given = s.scope().intersect(f.scope());
  const auto sampler = f.impl().make_sampler(given);
  const Scope& drawn = sampler->drawn_scope();
  const Scope target = s.scope().union_with(drawn);
  const auto old_cols = positions_in(s.scope(), target);
  const auto new_cols = positions_in(drawn, target);
  const auto given_cols = positions_in(given, s.scope());
  const std::string label = "extend" + drawn.to_string();
  const std::uint64_t seed = s.lineage_seed(label);
  Rng rng(seed);

  const std::size_t d = target.size();
  std::vector<double> particles(n * d);
  std::vector<double> given_row(given_cols.size());
  std::vector<double> out(drawn.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = s.particle(i);
    double* row = particles.data() + i * d;
    for (std::size_t k = 0; k < old_cols.size(); ++k) {
      row[old_cols[k]] = p[k];
    }
    if (s.weights_[i] == 0.0) {
      log_w[i] = kNegInf;
      continue;
    }
    for (std::size_t k = 0; k < given_cols.size(); ++k) {
      given_row[k] = p[given_cols[k]];
    }
    const double lm = sampler->draw(given_row, out, rng);
    for (std::size_t k = 0; k < new_cols.size(); ++k) {
      row[new_cols[k]] = out[k];
    }
    log_w[i] = std::isnan(lm) ? kNegInf : std::log(s.weights_[i]) + lm;
  }
  const double top = *std::max_element(log_w.begin(), log_w.end());
  if (!(top > kNegInf)) {
    fail(ErrorCode::degenerate, "every particle weight is zero after extending by " + f.describe());
  }
  std::vector<double> w(n);
  std::transform(log_w.begin(), log_w.end(), w.begin(), [top](double lw) { return std::exp(lw - top); });
  return Factor::make<SampleFactor>(target, std::move(particles), std::move(w), s.log_scale_ + top,
                                    extended(s.lineage_, fmt::format("{} seed={}", label, seed)));
}

Factor SampleFactor::add(const SampleFactor& s, const SampleFactor& t) {
  const double scale = std::max(s.log_scale_, t.log_scale_);
  std::vector<double> particles = s.particles_;
  particles.insert(particles.end(), t.particles_.begin(), t.particles_.end());
  std::vector<double> weights;
  weights.reserve(s.size() + t.size());
  for (double w : s.weights_) {
    weights.push_back(w * std::exp(s.log_scale_ - scale));
  }
  for (double w : t.weights_) {
    weights.push_back(w * std::exp(t.log_scale_ - scale));
  }
  return Factor::make<SampleFactor>(s.scope(), std::move(particles), std::move(weights), scale,
                                    extended(s.lineage_, fmt::format("add[{}]", fmt::join(t.lineage_, "; "))));
}

Factor sample_from(const Factor& f, std::size_t n, Rng& rng) {
  if (n == 0) {
    fail(ErrorCode::invalid_argument, "sample_from needs at least one particle");
  }
  const auto sampler = f.impl().make_sampler(Scope{});
  const std::size_t d = f.scope().size();
  std::vector<double> particles(n * d);
  double lm = kNegInf;
  for (std::size_t i = 0; i < n; ++i) {
    lm = sampler->draw({}, std::span<double>(particles.data() + i * d, d), rng);
  }
  if (!(lm > kNegInf)) {
    fail(ErrorCode::zero_mass, "cannot sample from a factor with zero mass: " + f.describe());
  }
  return Factor::make<SampleFactor>(f.scope(), std::move(particles), std::vector<double>(n, 1.0),
                                    lm - std::log(static_cast<double>(n)),
                                    std::vector<std::string>{fmt::format("sample_from {} n={} seed={}",
                                                                         f.impl().describe(), n, rng.seed())});
}

Factor resample_systematic(const SampleFactor& s, std::size_t n, Rng& rng) {
  if (n == 0) {
    fail(ErrorCode::invalid_argument, "resampling needs at least one particle");
  }
  const auto& w = s.weights();
  const double total = sum_of(w);
  const std::size_t d = s.dimension();
  std::vector<double> particles;
  particles.reserve(n * d);
  const double step = total / static_cast<double>(n);
  double target = rng.uniform() * step;
  double cumulative = w[0];
  std::size_t i = 0;
  for (std::size_t k = 0; k < n; ++k) {
    while (cumulative <= target && i + 1 < w.size()) {
      cumulative += w[++i];
    }
    const auto p = s.particle(i);
    particles.insert(particles.end(), p.begin(), p.end());
    target += step;
  }
  return Factor::make<SampleFactor>(s.scope(), std::move(particles), std::vector<double>(n, 1.0),
                                    s.log_total() - std::log(static_cast<double>(n)),
                                    extended(s.lineage(), fmt::format("resample n={} seed={}", n, rng.seed())));
}

double effective_sample_size(const SampleFactor& s) {
  double sum = 0.0;
  double sq = 0.0;
  for (double w : s.weights()) {
    sum += w;
    sq += w * w;
  }
  return sum * sum / sq;
}

ParticleEstimate estimate_moments(const SampleFactor& s) {
  ParticleEstimate est;
  est.log_mass = s.log_total();
  const auto& w = s.weights();
  const double total = sum_of(w);

  const Scope cont = s.scope().continuous_part();
  if (!cont.empty()) {
    const auto cols = positions_in(cont, s.scope());
    const auto m = static_cast<Eigen::Index>(cols.size());
    Vector mean = Vector::Zero(m);
    std::optional<std::size_t> first;
    bool distinct = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (w[i] == 0.0) {
        continue;
      }
      const auto p = s.particle(i);
      if (!first) {
        first = i;
      } else if (!distinct) {
        const auto q = s.particle(*first);
        distinct = std::any_of(cols.begin(), cols.end(), [&](std::size_t c) { return p[c] != q[c]; });
      }
      for (Eigen::Index k = 0; k < m; ++k) {
        mean(k) += w[i] * p[cols[static_cast<std::size_t>(k)]];
      }
    }
    if (!distinct) {
      fail(ErrorCode::degenerate, "covariance estimation needs at least two distinct weighted particles");
    }
    mean /= total;
    Matrix cov = Matrix::Zero(m, m);
    Vector dx(m);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto p = s.particle(i);
      for (Eigen::Index k = 0; k < m; ++k) {
        dx(k) = p[cols[static_cast<std::size_t>(k)]] - mean(k);
      }
      cov.selfadjointView<Eigen::Lower>().rankUpdate(dx, w[i]);
    }
    cov = cov.selfadjointView<Eigen::Lower>();
    cov /= total;
    est.continuous = GaussianMoments{cont, std::move(mean), std::move(cov), est.log_mass};
  }

  const Scope disc = s.scope().discrete_part();
  if (!disc.empty()) {
    const auto cols = positions_in(disc, s.scope());
    const auto strides = row_major_strides(disc);
    std::vector<double> hist(disc.joint_cardinality(), 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto p = s.particle(i);
      std::size_t index = 0;
      for (std::size_t k = 0; k < cols.size(); ++k) {
        index += strides[k] * static_cast<std::size_t>(p[cols[k]]);
      }
      hist[index] += w[i] / total;
    }
    est.histogram = Factor::make<TableFactor>(disc, std::move(hist), TableFactor::CanonicalLayout{});
  }
  return est;
}

void register_sample_kernels(DispatchRegistry& registry) {
  const std::string tag(SampleFactor::kTag);
  for (const char* other : {"table", "sparse", "canonical", "moment", "mixture", "truncated", "indicator",
                            "conditional", "sample"}) {
    registry.register_kernel(BinaryOp::multiply, tag, other, [](const Factor& s, const Factor& f) {
      return SampleFactor::multiply(s.get<SampleFactor>(), f);
    });
  }
  registry.register_kernel(BinaryOp::add, tag, tag, [](const Factor& s, const Factor& t) {
    return SampleFactor::add(s.get<SampleFactor>(), t.get<SampleFactor>());
  });
}

}  // namespace polyfactor
