#include "polyfactor/gaussian/moment_gaussian.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "polyfactor/gaussian/canonical_gaussian.hpp"

namespace polyfactor {

namespace {

std::vector<std::size_t> complement(std::size_t n, const std::vector<std::size_t>& removed) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::find(removed.begin(), removed.end(), i) == removed.end()) {
      out.push_back(i);
    }
  }
  return out;
}

GaussianMoments permuted(const std::vector<Variable>& vars, const Vector& mean, const Matrix& cov, double lw) {
  GaussianMoments m;
  m.scope = Scope(vars);
  const auto n = static_cast<Eigen::Index>(vars.size());
  if (mean.size() != n || cov.rows() != n || cov.cols() != n) {
    fail(ErrorCode::invalid_argument, "moment parameters do not match " + std::to_string(n) + " variables");
  }
  m.mean.resize(n);
  m.covariance.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto pi = static_cast<Eigen::Index>(m.scope.position(vars[static_cast<std::size_t>(i)].name()));
    m.mean(pi) = mean(i);
    for (Eigen::Index j = 0; j < n; ++j) {
      m.covariance(pi, static_cast<Eigen::Index>(m.scope.position(vars[static_cast<std::size_t>(j)].name()))) =
          cov(i, j);
    }
  }
  m.log_mass = lw;
  return m;
}

}  // namespace

MomentGaussian::MomentGaussian(GaussianMoments m) : FactorImpl(m.scope), m_(std::move(m)) {
  const auto n = static_cast<Eigen::Index>(scope().size());
  if (!scope().all_continuous()) {
    fail(ErrorCode::domain_mismatch, "moment Gaussians need continuous variables, got " + scope().to_string());
  }
  if (m_.mean.size() != n || m_.covariance.rows() != n || m_.covariance.cols() != n) {
    fail(ErrorCode::invalid_argument, "moment parameters do not match scope " + scope().to_string());
  }
  if (!m_.mean.allFinite() || !m_.covariance.allFinite() || !std::isfinite(m_.log_mass)) {
    fail(ErrorCode::invalid_argument, "moment parameters must be finite");
  }
  if (n > 0) {
    const double scale = std::max(1.0, m_.covariance.cwiseAbs().maxCoeff());
    if ((m_.covariance - m_.covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      fail(ErrorCode::invalid_argument, "covariance is not symmetric");
    }
    m_.covariance = symmetrized(m_.covariance);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m_.covariance, Eigen::EigenvaluesOnly);
    if (!(eig.eigenvalues().minCoeff() > kMinPivot)) {
      fail(ErrorCode::invalid_argument, "covariance is not positive definite");
    }
  }
}

Factor MomentGaussian::make(const std::vector<Variable>& vars, const Vector& mean, const Matrix& covariance,
                            double log_weight) {
  return make(permuted(vars, mean, covariance, log_weight));
}

Factor MomentGaussian::make(GaussianMoments m) {
  if (m.scope.empty()) {
    return CanonicalGaussian::make(Scope{}, Matrix(0, 0), Vector(0), m.log_mass);
  }
  return Factor::make<MomentGaussian>(std::move(m));
}

Factor MomentGaussian::to_canonical() const { return CanonicalGaussian::from_moments(m_); }

double MomentGaussian::evaluate(const Assignment& a) const {
  const auto x = a.values_for(scope());
  const Eigen::Map<const Vector> v(x.data(), static_cast<Eigen::Index>(x.size()));
  SpdFactor cov(m_.covariance, ErrorCode::invalid_argument, "covariance");
  const Vector d = v - m_.mean;
  const double n = static_cast<double>(scope().size());
  return std::exp(m_.log_mass - 0.5 * (n * kLog2Pi + cov.log_det() + d.dot(cov.solve(d))));
}

Factor MomentGaussian::sum_out(const Scope& vars) const {
  const auto keep = positions_in(scope().minus(vars), scope());
  GaussianMoments out{scope().minus(vars), select(m_.mean, keep), block(m_.covariance, keep, keep), m_.log_mass};
  return make(std::move(out));
}

Factor MomentGaussian::reduce(const Assignment& evidence) const {
  std::vector<Variable> fixed;
  for (const auto& v : scope()) {
    if (evidence.contains(v.name())) {
      fixed.push_back(v);
    }
  }
  Scope fixed_scope(fixed);
  const auto x = positions_in(fixed_scope, scope());
  const auto y = complement(scope().size(), x);
  const auto values = evidence.values_for(fixed_scope);
  const Eigen::Map<const Vector> xe(values.data(), static_cast<Eigen::Index>(values.size()));
  SpdFactor sxx(block(m_.covariance, x, x), ErrorCode::invalid_argument, "covariance");
  const Vector d = xe - select(m_.mean, x);
  const Matrix s_yx = block(m_.covariance, y, x);
  GaussianMoments out;
  out.scope = scope().minus(fixed_scope);
  out.mean = select(m_.mean, y) + s_yx * sxx.solve(d);
  out.covariance = symmetrized(block(m_.covariance, y, y) - s_yx * sxx.solve(Matrix(s_yx.transpose())));
  out.log_mass =
      m_.log_mass - 0.5 * (static_cast<double>(x.size()) * kLog2Pi + sxx.log_det() + d.dot(sxx.solve(d)));
  return make(std::move(out));
}

Factor MomentGaussian::scaled(double log_factor) const {
  GaussianMoments out = m_;
  out.log_mass += log_factor;
  if (!std::isfinite(out.log_mass)) {
    return CanonicalGaussian::zero(scope());
  }
  return make(std::move(out));
}

Factor MomentGaussian::renamed(const RenameMap& mapping) const {
  std::vector<Variable> vars;
  for (const auto& v : scope()) {
    auto it = mapping.find(v.name());
    vars.push_back(it == mapping.end() ? v : v.renamed(it->second));
  }
  return make(vars, m_.mean, m_.covariance, m_.log_mass);
}

std::unique_ptr<PointEvaluator> MomentGaussian::make_evaluator(const Scope& layout) const {
  return to_canonical().impl().make_evaluator(layout);
}

std::unique_ptr<ConditionalSampler> MomentGaussian::make_sampler(const Scope& given) const {
  return to_canonical().impl().make_sampler(given);
}

std::string MomentGaussian::describe() const {
  std::ostringstream s;
  Eigen::IOFormat fmt(6, Eigen::DontAlignCols, ", ", "; ", "", "", "[", "]");
  s << "moment" << scope().to_string() << " mean=" << m_.mean.transpose().format(fmt)
    << " cov=" << m_.covariance.format(fmt) << " log_weight=" << m_.log_mass;
  return s.str();
}

}  // namespace polyfactor
