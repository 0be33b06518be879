#include "polyfactor/hybrid/truncated_normal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/erf.hpp>

namespace polyfactor {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrtHalf = 0.70710678118654752440;
constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kCorrelationFloor = 1e-12;
constexpr double kWindow = 12.0;

double log_phi(double x) { return -0.5 * x * x - 0.5 * kLog2Pi; }

double upper_tail(double x) { return 0.5 * std::erfc(x * kSqrtHalf); }  // Q(x) = 1 − Φ(x)
double lower_tail(double x) { return 0.5 * std::erfc(-x * kSqrtHalf); }  // Φ(x)

// Beyond this point erfc heads towards subnormals and the continued fraction takes over.
constexpr double kTailSwitch = 8.0;

// λ(x) − x for the inverse Mills ratio λ = φ/Q, from Q(x)/φ(x) = 1/(x + 1/(x + 2/(x + 3/(x + …)))).
double hazard_excess(double x) {
  double t = x;
  for (int k = 60; k >= 2; --k) {
    t = x + k / t;
  }
  return 1.0 / t;
}

double log_upper_tail(double x) {
  if (x < kTailSwitch) {
    return std::log(upper_tail(x));
  }
  if (x == kInf) {
    return -kInf;
  }
  return log_phi(x) - std::log(x + hazard_excess(x));
}

struct GaussLegendre20 {
  std::array<double, 20> nodes{};
  std::array<double, 20> weights{};

  GaussLegendre20() {
    using Rule = boost::math::quadrature::gauss<double, 20>;
    const auto& x = Rule::abscissa();
    const auto& w = Rule::weights();
    std::size_t k = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      nodes[k] = -x[i];
      weights[k++] = w[i];
      nodes[k] = x[i];
      weights[k++] = w[i];
    }
  }
};

const GaussLegendre20& rule() {
  static const GaussLegendre20 r;
  return r;
}

struct PairResult {
  double log_mass = -kInf;
  std::array<double, 2> mean{};
  std::array<double, 3> cov{};  // 11, 12, 22
};

struct Sums {
  double i0 = 0, i1 = 0, i2 = 0, i11 = 0, i12 = 0, i22 = 0;
};

// N((m1, m2), [[s11, s12], [s12, s22]]) on [lo1, hi1) × [lo2, hi2), integrating x2 analytically
// against the conditional normal and x1 with composite Gauss–Legendre.
PairResult truncated_pair(double m1, double m2, double s11, double s12, double s22, double lo1, double hi1, double lo2,
                          double hi2, const QuadratureOptions& options) {
  PairResult out;
  const double sd1 = std::sqrt(s11);
  const double sd2 = std::sqrt(s22);
  const double slope = s12 / s11;
  const double cond_var = s22 - s12 * slope;
  if (!(cond_var > 0.0)) {
    fail(ErrorCode::not_normalizable, "truncated pair: covariance is not positive definite");
  }
  const double cond_sd = std::sqrt(cond_var);

  const double c1 = std::clamp(m1, lo1, hi1);
  const double c2 = std::clamp(m2, lo2, hi2);
  const double from = std::max(lo1, c1 - kWindow * sd1);
  const double to = std::min(hi1, c1 + kWindow * sd1);
  if (!(from < to)) {
    return out;
  }

  std::vector<double> cuts{from, to};
  for (double bound : {lo2, hi2}) {
    if (std::isfinite(bound) && slope != 0.0) {
      const double x = m1 + (bound - m2) / slope;
      if (x > from && x < to) {
        cuts.push_back(x);
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());

  const auto& gl = rule();
  double reference = -kInf;
  bool have_reference = false;

  auto integrate = [&](std::size_t panels) {
    struct Node {
      double x, lw, mean2, var2;
    };
    std::vector<Node> nodes;
    std::vector<double> weights;
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
      const double width = (cuts[s + 1] - cuts[s]) / static_cast<double>(panels);
      for (std::size_t p = 0; p < panels; ++p) {
        const double a = cuts[s] + width * static_cast<double>(p);
        for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
          const double x = a + 0.5 * width * (gl.nodes[k] + 1.0);
          const BoxMoments inner = truncated_normal_1d(m2 + slope * (x - m1), cond_sd, lo2, hi2);
          if (inner.log_mass == -kInf) {
            continue;
          }
          const double lw = log_phi((x - m1) / sd1) - std::log(sd1) + inner.log_mass;
          nodes.push_back({x, lw, inner.mean[0], inner.covariance(0, 0)});
          weights.push_back(0.5 * width * gl.weights[k]);
        }
      }
    }
    if (!have_reference) {
      for (const auto& n : nodes) {
        reference = std::max(reference, n.lw);
      }
      have_reference = true;
    }
    Sums s;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double e = weights[i] * std::exp(nodes[i].lw - reference);
      const double d1 = nodes[i].x - c1;
      const double d2 = nodes[i].mean2 - c2;
      s.i0 += e;
      s.i1 += e * d1;
      s.i2 += e * d2;
      s.i11 += e * d1 * d1;
      s.i12 += e * d1 * d2;
      s.i22 += e * (nodes[i].var2 + d2 * d2);
    }
    return s;
  };

  auto finish = [&](const Sums& s) {
    PairResult r;
    if (!(s.i0 > 0.0)) {
      return r;
    }
    r.log_mass = reference + std::log(s.i0);
    const double e1 = s.i1 / s.i0;
    const double e2 = s.i2 / s.i0;
    r.mean = {c1 + e1, c2 + e2};
    r.cov = {s.i11 / s.i0 - e1 * e1, s.i12 / s.i0 - e1 * e2, s.i22 / s.i0 - e2 * e2};
    return r;
  };

  const std::size_t segments = cuts.size() - 1;
  std::size_t panels = 2;
  PairResult previous = finish(integrate(panels));
  if (reference == -kInf) {
    return out;
  }
  const double tol = options.relative_tolerance;
  while (true) {
    panels *= 2;
    if (segments * panels * gl.nodes.size() > options.max_nodes) {
      fail(ErrorCode::quadrature_non_convergence,
           "2-D truncated moments did not reach relative change " + std::to_string(tol) + " within " +
               std::to_string(options.max_nodes) + " nodes");
    }
    PairResult current = finish(integrate(panels));
    const bool mass_ok = std::abs(std::expm1(current.log_mass - previous.log_mass)) <= tol;
    const bool mean_ok = std::abs(current.mean[0] - previous.mean[0]) <= tol * sd1 &&
                         std::abs(current.mean[1] - previous.mean[1]) <= tol * sd2;
    const bool cov_ok = std::abs(current.cov[0] - previous.cov[0]) <= tol * s11 &&
                        std::abs(current.cov[1] - previous.cov[1]) <= tol * sd1 * sd2 &&
                        std::abs(current.cov[2] - previous.cov[2]) <= tol * s22;
    previous = current;
    if (mass_ok && mean_ok && cov_ok) {
      return current;
    }
  }
}

BoxMoments truncated_impl(const Vector& mean, const Matrix& cov, const Vector& lower, const Vector& upper,
                          const QuadratureOptions& options, bool want_moments) {
  const auto n = static_cast<std::size_t>(mean.size());
  std::vector<std::size_t> bounded;
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (!(lower[k] < upper[k])) {
      return {-kInf, {}, {}};
    }
    (std::isfinite(lower[k]) || std::isfinite(upper[k]) ? bounded : free).push_back(i);
  }
  BoxMoments out{0.0, mean, cov};
  if (bounded.empty()) {
    return out;
  }

  const std::size_t nb = bounded.size();
  Vector mean_b(static_cast<Eigen::Index>(nb));
  Matrix cov_b = Matrix::Zero(static_cast<Eigen::Index>(nb), static_cast<Eigen::Index>(nb));
  std::vector<std::size_t> local(n, 0);
  for (std::size_t i = 0; i < nb; ++i) {
    local[bounded[i]] = i;
  }

  for (const auto& group : correlated_groups(cov, bounded)) {
    if (group.size() == 1) {
      const auto i = static_cast<Eigen::Index>(group[0]);
      const BoxMoments one = truncated_normal_1d(mean[i], std::sqrt(cov(i, i)), lower[i], upper[i]);
      out.log_mass += one.log_mass;
      if (one.log_mass == -kInf) {
        return {-kInf, {}, {}};
      }
      const auto li = static_cast<Eigen::Index>(local[group[0]]);
      mean_b[li] = one.mean[0];
      cov_b(li, li) = one.covariance(0, 0);
    } else if (group.size() == 2) {
      const auto i = static_cast<Eigen::Index>(group[0]);
      const auto j = static_cast<Eigen::Index>(group[1]);
      const PairResult pair = truncated_pair(mean[i], mean[j], cov(i, i), cov(i, j), cov(j, j), lower[i], upper[i],
                                             lower[j], upper[j], options);
      out.log_mass += pair.log_mass;
      if (pair.log_mass == -kInf) {
        return {-kInf, {}, {}};
      }
      const auto li = static_cast<Eigen::Index>(local[group[0]]);
      const auto lj = static_cast<Eigen::Index>(local[group[1]]);
      mean_b[li] = pair.mean[0];
      mean_b[lj] = pair.mean[1];
      cov_b(li, li) = pair.cov[0];
      cov_b(li, lj) = cov_b(lj, li) = pair.cov[1];
      cov_b(lj, lj) = pair.cov[2];
    } else {
      fail(ErrorCode::unsupported, "correlated truncation over more than two dimensions");
    }
  }
  if (!want_moments) {
    return out;
  }

  for (std::size_t i = 0; i < nb; ++i) {
    out.mean[static_cast<Eigen::Index>(bounded[i])] = mean_b[static_cast<Eigen::Index>(i)];
    for (std::size_t j = 0; j < nb; ++j) {
      out.covariance(static_cast<Eigen::Index>(bounded[i]), static_cast<Eigen::Index>(bounded[j])) =
          cov_b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  if (free.empty()) {
    return out;
  }

  // Unbounded coordinates follow their Gaussian regression on the bounded ones.
  const Matrix s_bb = block(cov, bounded, bounded);
  const Matrix s_ub = block(cov, free, bounded);
  const SpdFactor chol(s_bb, ErrorCode::not_normalizable, "truncated moments");
  const Matrix gain = chol.solve(Matrix(s_ub.transpose())).transpose();
  const Vector shift = mean_b - select(mean, bounded);
  const Vector mean_u = select(mean, free) + gain * shift;
  const Matrix cov_ub = gain * cov_b;
  const Matrix cov_uu = block(cov, free, free) - gain * s_ub.transpose() + gain * cov_b * gain.transpose();
  for (std::size_t i = 0; i < free.size(); ++i) {
    const auto fi = static_cast<Eigen::Index>(free[i]);
    out.mean[fi] = mean_u[static_cast<Eigen::Index>(i)];
    for (std::size_t j = 0; j < free.size(); ++j) {
      out.covariance(fi, static_cast<Eigen::Index>(free[j])) =
          cov_uu(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    for (std::size_t j = 0; j < nb; ++j) {
      const auto bj = static_cast<Eigen::Index>(bounded[j]);
      out.covariance(fi, bj) = out.covariance(bj, fi) =
          cov_ub(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  out.covariance = symmetrized(out.covariance);
  return out;
}

}  // namespace

double log_normal_interval(double a, double b) {
  if (!(a < b)) {
    return -kInf;
  }
  if (a >= 0.0) {
    const double la = log_upper_tail(a);
    return la + std::log1p(-std::exp(log_upper_tail(b) - la));
  }
  if (b <= 0.0) {
    const double lb = log_upper_tail(-b);
    return lb + std::log1p(-std::exp(log_upper_tail(-a) - lb));
  }
  return std::log1p(-(lower_tail(a) + upper_tail(b)));
}

BoxMoments truncated_normal_1d(double mu, double sigma, double lo, double hi) {
  const double a = (lo - mu) / sigma;
  const double b = (hi - mu) / sigma;
  const double log_z = log_normal_interval(a, b);
  if (log_z == -kInf) {
    return {-kInf, {}, {}};
  }
  const double la = std::isfinite(a) ? std::exp(log_phi(a) - log_z) : 0.0;
  const double lb = std::isfinite(b) ? std::exp(log_phi(b) - log_z) : 0.0;
  const double ala = std::isfinite(a) ? a * la : 0.0;
  const double blb = std::isfinite(b) ? b * lb : 0.0;
  const double diff = la - lb;
  BoxMoments out{log_z, Vector(1), Matrix(1, 1)};
  // One-sided and deep in a tail: 1 + aλ − λ² = 1 − (λ − a)λ avoids the cancellation.
  const bool upper_only = hi == kInf && a >= kTailSwitch;
  if (upper_only || (lo == -kInf && b <= -kTailSwitch)) {
    const double z = upper_only ? a : -b;
    const double excess = hazard_excess(z);
    const double lambda = z + excess;
    out.mean[0] = std::clamp(upper_only ? mu + sigma * lambda : mu - sigma * lambda, lo, hi);
    out.covariance(0, 0) = std::max(0.0, sigma * sigma * (1.0 - excess * lambda));
    return out;
  }
  out.mean[0] = std::clamp(mu + sigma * diff, lo, hi);
  out.covariance(0, 0) = std::max(0.0, sigma * sigma * (1.0 + ala - blb - diff * diff));
  return out;
}

double sample_truncated_1d(double mu, double sigma, double lo, double hi, Rng& rng) {
  const double a = (lo - mu) / sigma;
  const double b = (hi - mu) / sigma;
  if (!(a < b)) {
    fail(ErrorCode::degenerate, "cannot draw from an empty interval");
  }
  const double u = rng.uniform();
  double z;
  if (a >= 0.0) {
    const double qa = upper_tail(a);
    const double qb = upper_tail(b);
    const double q = qa - u * (qa - qb);
    if (q > 0.0 && qa > qb) {
      z = kSqrt2 * boost::math::erfc_inv(2.0 * q);
    } else {
      z = a - std::log1p(-u) / a;  // exponential approximation deep in the tail
    }
  } else if (b <= 0.0) {
    const double pa = lower_tail(a);
    const double pb = lower_tail(b);
    const double p = pb - u * (pb - pa);
    if (p > 0.0 && pb > pa) {
      z = -kSqrt2 * boost::math::erfc_inv(2.0 * p);
    } else {
      z = b + std::log1p(-u) / b;
    }
  } else {
    const double pa = lower_tail(a);
    const double pb = lower_tail(b);
    const double p = std::clamp(pa + u * (pb - pa), std::numeric_limits<double>::min(), 1.0 - 1e-17);
    z = -kSqrt2 * boost::math::erfc_inv(2.0 * p);
  }
  const double x = mu + sigma * std::clamp(z, a, b);
  return x >= hi ? std::nextafter(hi, -kInf) : std::max(x, lo);
}

std::vector<std::vector<std::size_t>> correlated_groups(const Matrix& cov, const std::vector<std::size_t>& dims) {
  std::vector<std::size_t> parent(dims.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](std::size_t i) {
    while (parent[i] != i) {
      i = parent[i] = parent[parent[i]];
    }
    return i;
  };
  for (std::size_t i = 0; i < dims.size(); ++i) {
    for (std::size_t j = i + 1; j < dims.size(); ++j) {
      const auto a = static_cast<Eigen::Index>(dims[i]);
      const auto b = static_cast<Eigen::Index>(dims[j]);
      if (std::abs(cov(a, b)) > kCorrelationFloor * std::sqrt(cov(a, a) * cov(b, b))) {
        parent[root(i)] = root(j);
      }
    }
  }
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> slot(dims.size(), dims.size());
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const std::size_t r = root(i);
    if (slot[r] == dims.size()) {
      slot[r] = groups.size();
      groups.emplace_back();
    }
    groups[slot[r]].push_back(dims[i]);
  }
  return groups;
}

BoxMoments truncated_moments(const Vector& mean, const Matrix& cov, const Vector& lower, const Vector& upper,
                             const QuadratureOptions& options) {
  return truncated_impl(mean, cov, lower, upper, options, true);
}

double truncated_log_mass(const Vector& mean, const Matrix& cov, const Vector& lower, const Vector& upper,
                          const QuadratureOptions& options) {
  return truncated_impl(mean, cov, lower, upper, options, false).log_mass;
}

}  // namespace polyfactor
