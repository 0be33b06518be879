#include "polyfactor/gaussian/canonical_gaussian.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "polyfactor/core/dispatch.hpp"
#include "polyfactor/core/operations.hpp"
#include "polyfactor/gaussian/mixture_factor.hpp"
#include "polyfactor/gaussian/moment_gaussian.hpp"

namespace polyfactor {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<std::size_t> iota_except(std::size_t n, const std::vector<std::size_t>& removed) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::find(removed.begin(), removed.end(), i) == removed.end()) {
      out.push_back(i);
    }
  }
  return out;
}

/// Index of each of `vars` (given order) in the canonical order of Scope(vars).
std::vector<std::size_t> canonical_positions(const std::vector<Variable>& vars, const Scope& scope) {
  std::vector<std::size_t> out;
  for (const auto& v : vars) {
    out.push_back(scope.position(v.name()));
  }
  return out;
}

}  // namespace

CanonicalGaussian::CanonicalGaussian(Scope scope, Matrix precision, Vector information, double log_constant)
    : FactorImpl(std::move(scope)), k_(std::move(precision)), h_(std::move(information)), g_(log_constant) {
  const auto n = static_cast<Eigen::Index>(this->scope().size());
  if (!this->scope().all_continuous()) {
    fail(ErrorCode::domain_mismatch, "canonical Gaussians need continuous variables, got " + this->scope().to_string());
  }
  if (k_.rows() != n || k_.cols() != n || h_.size() != n) {
    fail(ErrorCode::invalid_argument, "canonical parameters do not match scope " + this->scope().to_string());
  }
  if (!k_.allFinite() || !h_.allFinite() || std::isnan(g_) || g_ == std::numeric_limits<double>::infinity()) {
    fail(ErrorCode::invalid_argument, "canonical parameters must be finite");
  }
  if (n > 0 && (k_ - k_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, k_.cwiseAbs().maxCoeff())) {
    fail(ErrorCode::invalid_argument, "canonical precision matrix is not symmetric");
  }
  k_ = symmetrized(k_);
}

Factor CanonicalGaussian::make(Scope scope, Matrix precision, Vector information, double log_constant) {
  return Factor::make<CanonicalGaussian>(std::move(scope), std::move(precision), std::move(information), log_constant);
}

Factor CanonicalGaussian::from_ordered(const std::vector<Variable>& vars, const Matrix& precision,
                                       const Vector& information, double log_constant) {
  Scope scope(vars);
  const auto n = static_cast<Eigen::Index>(vars.size());
  if (precision.rows() != n || precision.cols() != n || information.size() != n) {
    fail(ErrorCode::invalid_argument, "canonical parameters do not match " + std::to_string(n) + " variables");
  }
  auto pos = canonical_positions(vars, scope);
  Matrix k(n, n);
  Vector h(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto pi = static_cast<Eigen::Index>(pos[static_cast<std::size_t>(i)]);
    h(pi) = information(i);
    for (Eigen::Index j = 0; j < n; ++j) {
      k(pi, static_cast<Eigen::Index>(pos[static_cast<std::size_t>(j)])) = precision(i, j);
    }
  }
  return make(std::move(scope), std::move(k), std::move(h), log_constant);
}

Factor CanonicalGaussian::from_moments(const std::vector<Variable>& vars, const Vector& mean, const Matrix& covariance,
                                       double log_weight) {
  SpdFactor cov(covariance, ErrorCode::invalid_argument, "covariance");
  const Matrix k = cov.inverse();
  const Vector h = k * mean;
  const double g = log_weight - 0.5 * (static_cast<double>(mean.size()) * kLog2Pi + cov.log_det()) - 0.5 * mean.dot(h);
  return from_ordered(vars, symmetrized(k), h, g);
}

Factor CanonicalGaussian::from_moments(const GaussianMoments& m) {
  return from_moments(m.scope.vars(), m.mean, m.covariance, m.log_mass);
}

Factor CanonicalGaussian::unit(const Scope& scope) {
  const auto n = static_cast<Eigen::Index>(scope.size());
  return make(scope, Matrix::Zero(n, n), Vector::Zero(n), 0.0);
}

Factor CanonicalGaussian::zero(const Scope& scope) {
  const auto n = static_cast<Eigen::Index>(scope.size());
  return make(scope, Matrix::Zero(n, n), Vector::Zero(n), kNegInf);
}

Factor CanonicalGaussian::linear_gaussian(const std::vector<Variable>& inputs, const std::vector<Variable>& outputs,
                                          const Matrix& transition, const Vector& offset, const Matrix& noise) {
  const auto nx = static_cast<Eigen::Index>(inputs.size());
  const auto ny = static_cast<Eigen::Index>(outputs.size());
  if (transition.rows() != ny || transition.cols() != nx || offset.size() != ny || noise.rows() != ny ||
      noise.cols() != ny) {
    fail(ErrorCode::invalid_argument, "linear-Gaussian parameters do not match the variable counts");
  }
  SpdFactor q(noise, ErrorCode::invalid_argument, "noise covariance");
  const Matrix lambda = q.inverse();
  const Matrix la = lambda * transition;
  Matrix k(nx + ny, nx + ny);
  k.topLeftCorner(nx, nx) = transition.transpose() * la;
  k.topRightCorner(nx, ny) = -la.transpose();
  k.bottomLeftCorner(ny, nx) = -la;
  k.bottomRightCorner(ny, ny) = lambda;
  Vector h(nx + ny);
  const Vector lb = lambda * offset;
  h.head(nx) = -transition.transpose() * lb;
  h.tail(ny) = lb;
  const double g = -0.5 * offset.dot(lb) - 0.5 * (static_cast<double>(ny) * kLog2Pi + q.log_det());
  std::vector<Variable> vars = inputs;
  vars.insert(vars.end(), outputs.begin(), outputs.end());
  return from_ordered(vars, symmetrized(k), h, g);
}

std::pair<Matrix, Vector> CanonicalGaussian::embedded(const Scope& target) const {
  const auto n = static_cast<Eigen::Index>(target.size());
  Matrix k = Matrix::Zero(n, n);
  Vector h = Vector::Zero(n);
  auto pos = positions_in(scope(), target);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const auto pi = static_cast<Eigen::Index>(pos[i]);
    h(pi) = h_(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < pos.size(); ++j) {
      k(pi, static_cast<Eigen::Index>(pos[j])) = k_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return {std::move(k), std::move(h)};
}

double CanonicalGaussian::log_density(std::span<const double> x) const {
  if (g_ == kNegInf) {
    return kNegInf;
  }
  const Eigen::Map<const Vector> v(x.data(), static_cast<Eigen::Index>(x.size()));
  return -0.5 * v.dot(k_ * v) + h_.dot(v) + g_;
}

double CanonicalGaussian::evaluate(const Assignment& a) const {
  const auto x = a.values_for(scope());
  return std::exp(log_density(x));
}

double CanonicalGaussian::log_scalar() const {
  if (!scope().empty()) {
    return FactorImpl::log_scalar();
  }
  return g_;
}

bool CanonicalGaussian::is_zero() const { return g_ == kNegInf; }

Factor CanonicalGaussian::sum_out(const Scope& vars) const {
  const auto x = positions_in(vars, scope());
  const auto y = iota_except(scope().size(), x);
  Scope rest = scope().minus(vars);
  const Matrix k_yy = block(k_, y, y);
  const Vector h_y = select(h_, y);
  if (g_ == kNegInf) {
    return make(std::move(rest), k_yy, h_y, kNegInf);
  }
  const Matrix k_xx = block(k_, x, x);
  const Matrix k_yx = block(k_, y, x);
  const Vector h_x = select(h_, x);
  SpdFactor kxx(k_xx, ErrorCode::not_integrable, "sum-out of " + vars.to_string());
  const Matrix a = kxx.solve(Matrix(k_yx.transpose()));  // K_xx⁻¹ K_xy
  const Vector b = kxx.solve(h_x);                       // K_xx⁻¹ h_x
  Matrix k = symmetrized(k_yy - k_yx * a);
  Vector h = h_y - k_yx * b;
  const double g = g_ + 0.5 * (static_cast<double>(x.size()) * kLog2Pi - kxx.log_det() + h_x.dot(b));
  return make(std::move(rest), std::move(k), std::move(h), g);
}

Factor CanonicalGaussian::reduce(const Assignment& evidence) const {
  std::vector<Variable> fixed;
  for (const auto& v : scope()) {
    if (evidence.contains(v.name())) {
      fixed.push_back(v);
    }
  }
  Scope fixed_scope(fixed);
  const auto x = positions_in(fixed_scope, scope());
  const auto y = iota_except(scope().size(), x);
  const auto values = evidence.values_for(fixed_scope);
  const Eigen::Map<const Vector> xe(values.data(), static_cast<Eigen::Index>(values.size()));
  for (double v : values) {
    if (!std::isfinite(v)) {
      fail(ErrorCode::invalid_argument, "evidence values must be finite");
    }
  }
  const Matrix k_xx = block(k_, x, x);
  Vector h = select(h_, y) - block(k_, y, x) * xe;
  const double g = g_ == kNegInf ? kNegInf : g_ + select(h_, x).dot(xe) - 0.5 * xe.dot(k_xx * xe);
  return make(scope().minus(fixed_scope), block(k_, y, y), std::move(h), g);
}

Factor CanonicalGaussian::scaled(double log_factor) const {
  return make(scope(), k_, h_, g_ == kNegInf ? kNegInf : g_ + log_factor);
}

Factor CanonicalGaussian::renamed(const RenameMap& mapping) const {
  std::vector<Variable> vars;
  for (const auto& v : scope()) {
    auto it = mapping.find(v.name());
    vars.push_back(it == mapping.end() ? v : v.renamed(it->second));
  }
  return from_ordered(vars, k_, h_, g_);
}

GaussianMoments CanonicalGaussian::moments() const {
  if (g_ == kNegInf) {
    fail(ErrorCode::zero_mass, "the zero Gaussian has no moments");
  }
  SpdFactor k(k_, ErrorCode::not_normalizable, "moments of a canonical Gaussian");
  GaussianMoments m;
  m.scope = scope();
  m.covariance = symmetrized(k.inverse());
  m.mean = k.solve(h_);
  m.log_mass = g_ + 0.5 * (static_cast<double>(scope().size()) * kLog2Pi - k.log_det() + h_.dot(m.mean));
  return m;
}

Factor CanonicalGaussian::multiply(const CanonicalGaussian& f, const CanonicalGaussian& g) {
  Scope u = f.scope().union_with(g.scope());
  auto [kf, hf] = f.embedded(u);
  auto [kg, hg] = g.embedded(u);
  const double c = (f.g_ == kNegInf || g.g_ == kNegInf) ? kNegInf : f.g_ + g.g_;
  return make(std::move(u), kf + kg, hf + hg, c);
}

Factor CanonicalGaussian::divide(const CanonicalGaussian& f, const CanonicalGaussian& g) {
  if (f.g_ == kNegInf) {
    return f.scaled(0.0);
  }
  if (g.g_ == kNegInf) {
    fail(ErrorCode::division_by_zero, "division of a nonzero Gaussian by the zero Gaussian");
  }
  auto [kg, hg] = g.embedded(f.scope());
  return make(f.scope(), f.k_ - kg, f.h_ - hg, f.g_ - g.g_);
}

std::string CanonicalGaussian::describe() const {
  std::ostringstream s;
  Eigen::IOFormat fmt(6, Eigen::DontAlignCols, ", ", "; ", "", "", "[", "]");
  s << "canonical" << scope().to_string() << " K=" << k_.format(fmt) << " h=" << h_.transpose().format(fmt)
    << " g=" << g_;
  return s.str();
}

// ---------------------------------------------------------------------------

GaussianConditioner::GaussianConditioner(const CanonicalGaussian& f, const Scope& given)
    : free_(f.scope().minus(given)), g_(f.log_constant()) {
  const auto x = positions_in(given, f.scope());
  const auto y = positions_in(free_, f.scope());
  const Matrix k_xx = block(f.precision(), x, x);
  const Matrix k_yx = block(f.precision(), y, x);
  const Vector h_x = select(f.information(), x);
  const Vector h_y = select(f.information(), y);
  SpdFactor kyy(block(f.precision(), y, y), ErrorCode::unsupported,
                "conditioning " + f.scope().to_string() + " on " + given.to_string());
  cov_ = symmetrized(kyy.inverse());
  cov_l_ = Eigen::LLT<Matrix>(cov_).matrixL();
  mean_offset_ = cov_ * h_y;
  mean_gain_ = -cov_ * k_yx;
  // ∫ exp(−½yᵀK_yy y + (h_y − K_yx x)ᵀy) dy = exp(½ h'ᵀK_yy⁻¹h') (2π)^{n/2} |K_yy|^{-½}, expanded in x.
  const double log_norm = 0.5 * (static_cast<double>(y.size()) * kLog2Pi - kyy.log_det());
  mass_constant_ = g_ + 0.5 * h_y.dot(mean_offset_) + log_norm;
  mass_linear_ = h_x - k_yx.transpose() * mean_offset_;
  mass_quadratic_ = symmetrized(k_xx - k_yx.transpose() * cov_ * k_yx);
}

Vector GaussianConditioner::mean(std::span<const double> x) const {
  Vector out(mean_offset_.size());
  mean(x, out);
  return out;
}

void GaussianConditioner::mean(std::span<const double> x, Vector& out) const {
  const Eigen::Map<const Vector> v(x.data(), static_cast<Eigen::Index>(x.size()));
  out.resize(mean_offset_.size());
  out = mean_offset_;
  out.noalias() += mean_gain_ * v;
}

double GaussianConditioner::log_mass(std::span<const double> x) const {
  if (g_ == kNegInf) {
    return kNegInf;
  }
  double quad = 0.0;
  double lin = 0.0;
  const auto n = static_cast<Eigen::Index>(x.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double xi = x[static_cast<std::size_t>(i)];
    lin += mass_linear_(i) * xi;
    double row = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      row += mass_quadratic_(i, j) * x[static_cast<std::size_t>(j)];
    }
    quad += xi * row;
  }
  return mass_constant_ + lin - 0.5 * quad;
}

namespace {

class CanonicalEvaluator final : public PointEvaluator {
 public:
  CanonicalEvaluator(const CanonicalGaussian& f, const Scope& layout)
      : k_(f.precision()), h_(f.information()), g_(f.log_constant()), positions_(positions_in(f.scope(), layout)),
        x_(static_cast<Eigen::Index>(positions_.size())) {}

  double operator()(std::span<const double> row) const override {
    if (g_ == kNegInf) {
      return 0.0;
    }
    for (std::size_t i = 0; i < positions_.size(); ++i) {
      x_(static_cast<Eigen::Index>(i)) = row[positions_[i]];
    }
    return std::exp(-0.5 * x_.dot(k_ * x_) + h_.dot(x_) + g_);
  }

  double log_value(std::span<const double> row) const override {
    if (g_ == kNegInf) {
      return kNegInf;
    }
    for (std::size_t i = 0; i < positions_.size(); ++i) {
      x_(static_cast<Eigen::Index>(i)) = row[positions_[i]];
    }
    return -0.5 * x_.dot(k_ * x_) + h_.dot(x_) + g_;
  }

 private:
  Matrix k_;
  Vector h_;
  double g_;
  std::vector<std::size_t> positions_;
  mutable Vector x_;
};

class CanonicalSampler final : public ConditionalSampler {
 public:
  CanonicalSampler(const CanonicalGaussian& f, const Scope& given)
      : ConditionalSampler(f.scope().minus(given)), cond_(f, given) {}

  double log_mass(std::span<const double> given) const override { return cond_.log_mass(given); }

  double draw(std::span<const double> given, std::span<double> out, Rng& rng) const override {
    cond_.mean(given, m_);
    z_.resize(m_.size());
    for (Eigen::Index i = 0; i < z_.size(); ++i) {
      z_(i) = rng.normal();
    }
    m_.noalias() += cond_.covariance_factor() * z_;
    for (Eigen::Index i = 0; i < m_.size(); ++i) {
      out[static_cast<std::size_t>(i)] = m_(i);
    }
    return cond_.log_mass(given);
  }

 private:
  GaussianConditioner cond_;
  mutable Vector m_;
  mutable Vector z_;
};

}  // namespace

std::unique_ptr<PointEvaluator> CanonicalGaussian::make_evaluator(const Scope& layout) const {
  return std::make_unique<CanonicalEvaluator>(*this, layout);
}

std::unique_ptr<ConditionalSampler> CanonicalGaussian::make_sampler(const Scope& given) const {
  if (g_ == kNegInf) {
    fail(ErrorCode::degenerate, "cannot sample from the zero Gaussian");
  }
  return std::make_unique<CanonicalSampler>(*this, scope().intersect(given));
}

Factor to_moment(const CanonicalGaussian& f) { return MomentGaussian::make(f.moments()); }

void register_gaussian_kernels(DispatchRegistry& registry) {
  const std::string c(CanonicalGaussian::kTag);
  const std::string m(MomentGaussian::kTag);
  registry.register_kernel(BinaryOp::multiply, c, c, [](const Factor& f, const Factor& g) {
    return CanonicalGaussian::multiply(f.get<CanonicalGaussian>(), g.get<CanonicalGaussian>());
  });
  registry.register_kernel(BinaryOp::divide, c, c, [](const Factor& f, const Factor& g) {
    return CanonicalGaussian::divide(f.get<CanonicalGaussian>(), g.get<CanonicalGaussian>());
  });
  registry.register_kernel(BinaryOp::add, c, c,
                           [](const Factor& f, const Factor& g) { return MixtureFactor::make(f.scope(), {f, g}); });
  registry.register_promotion(m, c, [](const Factor& f) { return f.get<MomentGaussian>().to_canonical(); });
  registry.register_promotion(c, m, [](const Factor& f) { return to_moment(f.get<CanonicalGaussian>()); });
  register_mixture_kernels(registry, c);
  register_mixture_kernels(registry, std::string(MixtureFactor::kTag));
}

}  // namespace polyfactor
