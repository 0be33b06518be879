// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include <polyfactor/core/operations.hpp>
#include <polyfactor/gaussian/canonical_gaussian.hpp>
#include <polyfactor/hybrid/truncated_normal.hpp>
#include <polyfactor/inference/elimination.hpp>
#include <polyfactor/inference/representation.hpp>
#include <polyfactor/inference/summary.hpp>
#include <polyfactor/models/model_file.hpp>
#include <polyfactor/models/models.hpp>
#include <polyfactor/sample/sample_factor.hpp>
#include <polyfactor/table/sparse_table_factor.hpp>
#include <polyfactor/table/table_factor.hpp>

#include "oracles/burglary.hpp"
#include "oracles/enumeration.hpp"
#include "oracles/gaussian_density.hpp"
#include "oracles/grid_filter.hpp"
#include "oracles/kalman.hpp"
#include "oracles/truncated_grid.hpp"
#include "support/random_factors.hpp"
#include "support/random_network.hpp"

namespace {

using namespace polyfactor;
namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct Outcome {
  bool pass;
  std::string detail;
};

struct Paths {
  std::string cli;
  std::string data;
};

// ---------------------------------------------------------------------------
// AC1: pointwise semantics of the five operations on exact representations.

struct MaxError {
  double value = 0.0;
  void track(double got, double expected) { value = std::max(value, std::abs(got - expected)); }
};

void table_laws(const Factor& f, const Factor& g, const Factor& h, const Factor& positive, const Scope& sub,
                const Assignment& evidence, MaxError& err) {
  const Factor fg = f * g;
  const Factor fh = f + h;
  const Factor red = reduce(f, evidence);
  const Factor marg = sum_out(f, sub);
  const Factor quot = fg / positive;
  for (const auto& a : testing::all_assignments(f.scope().union_with(g.scope()))) {
    err.track(evaluate(fg, a), evaluate(f, a) * evaluate(g, a));
    err.track(evaluate(quot, a), evaluate(fg, a) / evaluate(positive, a));
  }
  for (const auto& a : testing::all_assignments(f.scope())) {
    err.track(evaluate(fh, a), evaluate(f, a) + evaluate(h, a));
    bool consistent = true;
    for (const auto& [name, value] : evidence.entries()) {
      consistent = consistent && a.find(name) == value;
    }
    if (consistent) {
      err.track(evaluate(red, a.restricted_to(red.scope())), evaluate(f, a));
    }
  }
  for (const auto& rest : testing::all_assignments(marg.scope())) {
    double total = 0.0;
    for (const auto& s : testing::all_assignments(sub)) {
      total += evaluate(f, rest.merged(s));
    }
    err.track(evaluate(marg, rest), total);
  }
}

Outcome ac1(const Paths&) {
  constexpr int kInstances = 100;
  MaxError dense;
  MaxError sparse;
  for (int seed = 0; seed < kInstances; ++seed) {
    std::mt19937_64 gen(static_cast<std::uint64_t>(seed) + 1);
    auto pool = testing::discrete_pool(5, 2);
    std::uniform_int_distribution<std::size_t> card(2, 4);
    for (auto& v : pool) {
      v = Variable::discrete(v.name(), card(gen));
    }
    const Scope fs = testing::random_subscope(pool, 1, 4, gen);
    const Scope gs = testing::random_subscope(pool, 1, 4, gen);
    const Factor f = testing::random_table(fs, gen, 0.2);
    const Factor g = testing::random_table(gs, gen, 0.2);
    const Factor h = testing::random_table(fs, gen, 0.2);
    const Factor positive = testing::random_table(gs, gen);
    const Scope sub = testing::random_subscope(fs.vars(), 1, fs.size(), gen);
    Assignment evidence;
    for (const auto& v : testing::random_subscope(fs.vars(), 1, fs.size(), gen)) {
      evidence.set(v.name(), static_cast<double>(gen() % v.cardinality()));
    }
    table_laws(f, g, h, positive, sub, evidence, dense);
    const auto sp = [](const Factor& x) { return to_sparse(x.get<TableFactor>()); };
    table_laws(sp(f), sp(g), sp(h), sp(positive), sub, evidence, sparse);
  }

  // Gaussians: compare log densities, and marginals against the moment-form oracle.
  double gauss = 0.0;
  const auto x = Variable::continuous("X");
  const auto y = Variable::continuous("Y");
  const auto z = Variable::continuous("Z");
  for (int seed = 0; seed < kInstances; ++seed) {
    std::mt19937_64 gen(static_cast<std::uint64_t>(seed) + 1000);
    const Eigen::VectorXd mf = oracle::random_vector(2, gen);
    const Eigen::MatrixXd cf = oracle::random_spd(2, gen);
    const Eigen::VectorXd mg = oracle::random_vector(2, gen);
    const Eigen::MatrixXd cg = oracle::random_spd(2, gen);
    const Eigen::VectorXd mh = oracle::random_vector(2, gen);
    const Eigen::MatrixXd ch = oracle::random_spd(2, gen);
    const Factor f = CanonicalGaussian::from_moments({x, y}, mf, cf, 0.3);
    const Factor g = CanonicalGaussian::from_moments({y, z}, mg, cg);
    const Factor h = CanonicalGaussian::from_moments({x, y}, mh, ch);
    const Factor fg = f * g;
    const Factor quot = fg / g;
    const Factor sum = f + h;
    const Factor marg = sum_out(f, Scope{y});
    for (int k = 0; k < 5; ++k) {
      const Eigen::VectorXd p = oracle::random_vector(3, gen, 2.0);
      const Assignment a{{"X", p(0)}, {"Y", p(1)}, {"Z", p(2)}};
      const Eigen::Vector2d xy(p(0), p(1));
      const Eigen::Vector2d yz(p(1), p(2));
      const double lf = 0.3 + oracle::mvn_log_pdf(xy, mf, cf);
      const double lg = oracle::mvn_log_pdf(yz, mg, cg);
      const double lh = oracle::mvn_log_pdf(xy, mh, ch);
      gauss = std::max(gauss, std::abs(std::log(evaluate(f, a)) - lf));
      gauss = std::max(gauss, std::abs(std::log(evaluate(fg, a)) - (lf + lg)));
      gauss = std::max(gauss, std::abs(std::log(evaluate(quot, a)) - lf));
      gauss = std::max(gauss, std::abs(std::log(evaluate(sum, a)) - std::log(std::exp(lf) + std::exp(lh))));
      gauss = std::max(gauss, std::abs(std::log(evaluate(reduce(fg, {{"Y", p(1)}}), a)) - (lf + lg)));
      const double lm = 0.3 + oracle::mvn_log_pdf(Eigen::VectorXd::Constant(1, p(0)), mf.head(1), cf.topLeftCorner(1, 1));
      gauss = std::max(gauss, std::abs(std::log(evaluate(marg, a)) - lm));
    }
  }
  const bool pass = dense.value <= 1e-12 && sparse.value <= 1e-12 && gauss <= 1e-9;
  return {pass, fmt::format("{} instances each; max error dense {:.1e}, sparse {:.1e} (tol 1e-12), "
                            "canonical Gaussian log-density {:.1e} (tol 1e-9)",
                            kInstances, dense.value, sparse.value, gauss)};
}

// ---------------------------------------------------------------------------
// AC2: variable elimination against full-joint enumeration.

Outcome ac2(const Paths&) {
  double worst = 0.0;
  for (int seed = 0; seed < 50; ++seed) {
    std::mt19937_64 gen(static_cast<std::uint64_t>(seed) * 104729u + 17u);
    const int n = 3 + seed % 4;
    const auto net = testing::random_network(gen, n);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    const std::size_t n_query = 1 + static_cast<std::size_t>(seed % 2);
    std::vector<int> query(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_query));
    std::map<int, int> evidence;
    Assignment ev;
    for (std::size_t k = 0; k < static_cast<std::size_t>(seed % 3) && n_query + k < perm.size(); ++k) {
      const int v = perm[n_query + k];
      evidence[v] = static_cast<int>(gen() % 2);
      ev.set(testing::var_name(v), evidence[v]);
    }
    std::vector<Variable> qvars;
    for (int q : query) {
      qvars.push_back(Variable::discrete(testing::var_name(q), 2));
    }
    const auto expected = oracle::enumerate_posterior(net.plain, query, evidence);
    const auto got = testing::library_posterior(variable_elimination(net.model, Scope(qvars), ev), query);
    for (std::size_t i = 0; i < expected.size(); ++i) {
      worst = std::max(worst, std::abs(got[i] - expected[i]));
    }
  }

  const FactorGraphModel burglary = burglary_model();
  const auto plain = oracle::plain_burglary();
  const std::vector<std::string> names{"B", "E", "A", "J", "M"};
  double burglary_worst = 0.0;
  for (int q = 0; q < 5; ++q) {
    for (const auto& [ev_vars, ev_assignment] :
         std::vector<std::pair<std::map<int, int>, Assignment>>{{{}, {}}, {{{3, 1}, {4, 1}}, {{"J", 1.0}, {"M", 1.0}}}}) {
      if (ev_vars.contains(q)) {
        continue;
      }
      const Factor post =
          variable_elimination(burglary, Scope{*burglary.scope().find(names[static_cast<std::size_t>(q)])}, ev_assignment);
      const auto expected = oracle::enumerate_posterior(plain, {q}, ev_vars);
      for (int s = 0; s < 2; ++s) {
        burglary_worst = std::max(burglary_worst, std::abs(evaluate(post, {{names[static_cast<std::size_t>(q)], s}}) -
                                                           expected[static_cast<std::size_t>(s)]));
      }
    }
  }
  const Factor b = variable_elimination(burglary, Scope{*burglary.scope().find("B")}, {{"J", 1.0}, {"M", 1.0}});
  const double p_b = evaluate(b, {{"B", 1.0}});
  const double p_b_oracle = oracle::enumerate_posterior(plain, {0}, {{3, 1}, {4, 1}})[1];
  const bool pass = worst <= 1e-12 && burglary_worst <= 1e-12 && std::abs(p_b - p_b_oracle) <= 1e-12;
  return {pass, fmt::format("50 random networks max error {:.1e}; burglary marginals max error {:.1e}; "
                            "P(B=true|J=true,M=true) = {:.6f} (oracle {:.6f})",
                            worst, burglary_worst, p_b, p_b_oracle)};
}

// ---------------------------------------------------------------------------
// AC3 / AC4: linear-Gaussian state-space models.

oracle::LinearGaussianSsm lg1_oracle() {
  oracle::LinearGaussianSsm m;
  m.A = Eigen::MatrixXd::Constant(1, 1, 0.9);
  m.Q = Eigen::MatrixXd::Constant(1, 1, 0.5);
  m.C = Eigen::MatrixXd::Constant(1, 1, 1.0);
  m.R = Eigen::MatrixXd::Constant(1, 1, 1.0);
  m.m0 = Eigen::VectorXd::Zero(1);
  m.P0 = Eigen::MatrixXd::Constant(1, 1, 1.0);
  return m;
}

oracle::LinearGaussianSsm lg2_oracle() {
  oracle::LinearGaussianSsm m;
  m.A.resize(2, 2);
  m.A << 1.0, 0.1, 0.0, 1.0;
  m.Q.resize(2, 2);
  m.Q << 0.01, 0.0, 0.0, 0.04;
  m.C.resize(2, 2);
  m.C << 1.0, 0.0, 0.3, 1.0;
  m.R.resize(2, 2);
  m.R << 0.25, 0.05, 0.05, 0.5;
  m.m0.resize(2);
  m.m0 << 0.0, 1.0;
  m.P0.resize(2, 2);
  m.P0 << 1.0, 0.2, 0.2, 0.5;
  return m;
}

// Observations drawn with std::mt19937_64, independent of the library's simulator.
std::vector<Eigen::VectorXd> draw_observations(const oracle::LinearGaussianSsm& m, std::size_t steps, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z;
  const auto noise = [&](const Eigen::MatrixXd& cov) {
    Eigen::VectorXd e(cov.rows());
    for (Eigen::Index i = 0; i < e.size(); ++i) {
      e[i] = z(gen);
    }
    return Eigen::VectorXd(cov.llt().matrixL() * e);
  };
  Eigen::VectorXd x = m.m0 + noise(m.P0);
  std::vector<Eigen::VectorXd> ys;
  for (std::size_t t = 0; t < steps; ++t) {
    x = m.A * x + noise(m.Q);
    ys.push_back(m.C * x + noise(m.R));
  }
  return ys;
}

std::vector<Assignment> as_assignments(const std::vector<Eigen::VectorXd>& ys) {
  std::vector<Assignment> out;
  for (const auto& y : ys) {
    Assignment a;
    for (Eigen::Index k = 0; k < y.size(); ++k) {
      a.set(fmt::format("Y{}", k + 1), y[k]);
    }
    out.push_back(std::move(a));
  }
  return out;
}

Outcome ac3(const Paths& paths) {
  double mean_err = 0.0;
  double var_err = 0.0;
  double ll_err = 0.0;
  for (const auto& [file, oracle_model] : {std::pair{"lg1.json", lg1_oracle()}, std::pair{"lg2.json", lg2_oracle()}}) {
    const ModelDocument doc = load_model(paths.data + "/" + file);
    const StateSpaceModel& model = doc.state_space();
    const auto ys = draw_observations(oracle_model, 50, 2024);
    const auto kalman = oracle::kalman_filter(oracle_model, ys);
    const auto rts = oracle::rts_smoother(oracle_model, kalman);
    const FilterResult filtered = filter(model, as_assignments(ys));
    const std::vector<Factor> smoothed = smooth(model, as_assignments(ys));
    double total = 0.0;
    for (std::size_t t = 0; t < ys.size(); ++t) {
      const auto f = summarize(filtered.posteriors[t]);
      const auto s = summarize(smoothed[t]);
      for (Eigen::Index i = 0; i < oracle_model.A.rows(); ++i) {
        const std::string name = fmt::format("X{}", i + 1);
        mean_err = std::max({mean_err, std::abs(f.mean.at(name) - kalman[t].mean[i]),
                             std::abs(s.mean.at(name) - rts[t].mean[i])});
        var_err = std::max({var_err, std::abs(f.variance.at(name) - kalman[t].cov(i, i)),
                            std::abs(s.variance.at(name) - rts[t].cov(i, i))});
      }
      total += kalman[t].loglik;
    }
    ll_err = std::max(ll_err, std::abs(filtered.total_log_likelihood - total));
  }
  const bool pass = mean_err <= 1e-8 && var_err <= 1e-8 && ll_err <= 1e-8;
  return {pass, fmt::format("1-D and 2-D, T=50, filter and smoother vs Kalman/RTS: max error mean {:.1e}, "
                            "variance {:.1e}, total log-likelihood {:.1e} (tol 1e-8)",
                            mean_err, var_err, ll_err)};
}

Outcome ac4(const Paths& paths) {
  const ModelDocument doc = load_model(paths.data + "/lg1.json");
  const StateSpaceModel& model = doc.state_space();
  const auto oracle_model = lg1_oracle();
  const auto ys = draw_observations(oracle_model, 50, 2024);
  const auto kalman = oracle::kalman_filter(oracle_model, ys);
  const auto obs = as_assignments(ys);
  constexpr int kSeeds = 20;
  const std::vector<std::size_t> sizes{1000, 10000, 100000};
  std::vector<double> mean_rmse;
  std::vector<std::vector<double>> last;  // [seed][t] at the largest n
  for (std::size_t n : sizes) {
    double total = 0.0;
    last.assign(kSeeds, {});
    for (int seed = 1; seed <= kSeeds; ++seed) {
      RunSettings settings;
      settings.representation = Representation::sample;
      settings.particles = n;
      settings.seed = static_cast<std::uint64_t>(seed);
      const FilterResult r = run_filter(model, obs, settings);
      double sq = 0.0;
      for (std::size_t t = 0; t < ys.size(); ++t) {
        const double m = summarize(r.posteriors[t]).mean.at("X1");
        sq += (m - kalman[t].mean[0]) * (m - kalman[t].mean[0]);
        last[static_cast<std::size_t>(seed - 1)].push_back(m);
      }
      total += std::sqrt(sq / static_cast<double>(ys.size()));
    }
    mean_rmse.push_back(total / kSeeds);
  }
  // Standard error per step: spread of the estimate across the independent seeds at n = 10^5.
  double worst_z = 0.0;
  std::size_t outside = 0;
  for (std::size_t t = 0; t < ys.size(); ++t) {
    double mean = 0.0;
    for (const auto& run : last) {
      mean += run[t];
    }
    mean /= kSeeds;
    double var = 0.0;
    for (const auto& run : last) {
      var += (run[t] - mean) * (run[t] - mean);
    }
    const double se = std::sqrt(var / (kSeeds - 1));
    for (const auto& run : last) {
      const double zscore = std::abs(run[t] - kalman[t].mean[0]) / se;
      worst_z = std::max(worst_z, zscore);
      outside += zscore > 4.0 ? 1 : 0;
    }
  }
  const bool decreasing = mean_rmse[0] > mean_rmse[1] && mean_rmse[1] > mean_rmse[2];
  return {decreasing && outside == 0,
          fmt::format("mean RMSE vs Kalman over {} seeds: n=1e3 {:.2e}, n=1e4 {:.2e}, n=1e5 {:.2e}; at n=1e5 "
                      "{} of {} per-step means beyond 4 SE (max {:.2f} SE, SE = across-seed spread)",
                      kSeeds, mean_rmse[0], mean_rmse[1], mean_rmse[2], outside, kSeeds * ys.size(), worst_z)};
}

// ---------------------------------------------------------------------------
// AC5: truncated-Gaussian moments.

Outcome ac5(const Paths&) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double one_d = 0.0;
  const BoxMoments half = truncated_normal_1d(0.0, 1.0, 0.0, kInf);
  const BoxMoments unit = truncated_normal_1d(0.0, 1.0, -1.0, 1.0);
  const auto gh = oracle::grid_truncated_1d(0.0, 1.0, 0.0, kInf);
  const auto gu = oracle::grid_truncated_1d(0.0, 1.0, -1.0, 1.0);
  for (const auto& [m, g] : {std::pair{half, gh}, std::pair{unit, gu}}) {
    one_d = std::max({one_d, std::abs(m.mean[0] - g.mean[0]), std::abs(m.covariance(0, 0) - g.cov[0]),
                      std::abs(std::exp(m.log_mass) - g.mass)});
  }
  // Reference constants are quoted to five digits; allow one unit in the last place.
  const bool published = std::abs(half.mean[0] - 0.79788) < 1e-5 && std::abs(half.covariance(0, 0) - 0.36338) < 1e-5 &&
                         std::abs(unit.mean[0]) < 1e-5 && std::abs(unit.covariance(0, 0) - 0.29112) < 1e-5;

  double mean_err = 0.0;
  double cov_err = 0.0;
  double mass_err = 0.0;
  int cases = 0;
  std::mt19937_64 gen(5);
  const std::vector<std::array<double, 4>> quadrants{
      {0, kInf, 0, kInf}, {-kInf, 0, 0, kInf}, {-kInf, 0, -kInf, 0}, {0, kInf, -kInf, 0}};
  for (int k = 0; k < 6; ++k) {
    const Eigen::VectorXd mean = oracle::random_vector(2, gen, 1.0);
    Eigen::MatrixXd cov = oracle::random_spd(2, gen);
    if (k == 0) {
      cov << 1.0, 0.8, 0.8, 1.0;  // strongly correlated
    }
    double total = 0.0;
    for (const auto& b : quadrants) {
      const BoxMoments m = truncated_moments(mean, cov, Eigen::Vector2d(b[0], b[2]), Eigen::Vector2d(b[1], b[3]));
      const auto g = oracle::grid_truncated_2d(mean[0], mean[1], cov(0, 0), cov(0, 1), cov(1, 1), b[0], b[1], b[2], b[3]);
      total += std::exp(m.log_mass);
      mean_err = std::max({mean_err, std::abs(m.mean[0] - g.mean[0]), std::abs(m.mean[1] - g.mean[1])});
      cov_err = std::max({cov_err, std::abs(m.covariance(0, 0) - g.cov[0]), std::abs(m.covariance(0, 1) - g.cov[1]),
                          std::abs(m.covariance(1, 1) - g.cov[2])});
      ++cases;
    }
    mass_err = std::max(mass_err, std::abs(total - 1.0));
  }
  const bool pass = one_d <= 1e-6 && published && mean_err <= 1e-5 && cov_err <= 1e-4 && mass_err <= 1e-8;
  return {pass, fmt::format("1-D: [0,inf) mean {:.6f} var {:.6f}, [-1,1] mean {:.1e} var {:.6f}, max error vs "
                            "quadrature {:.1e}; 2-D: {} quadrant truncations vs 400x400 grid, max error mean {:.1e}, "
                            "covariance {:.1e}; quadrant masses sum to 1 within {:.1e}",
                            half.mean[0], half.covariance(0, 0), unit.mean[0], unit.covariance(0, 0), one_d, cases,
                            mean_err, cov_err, mass_err)};
}

// ---------------------------------------------------------------------------
// AC6: parametric versus particle representation on the quadrant model.

double state_accuracy(const FilterResult& r, const Simulation& sim) {
  std::size_t hits = 0;
  for (std::size_t t = 0; t < r.posteriors.size(); ++t) {
    const PosteriorSummary summary = summarize(r.posteriors[t]);
    const auto& p = summary.marginal.at("S");
    const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    hits += best == sim.states[t].index(Variable::discrete("S", 4)) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(r.posteriors.size());
}

oracle::GridFilterConfig grid_config(const QuadrantConfig& c, const Simulation& sim) {
  oracle::GridFilterConfig g;
  for (std::size_t q = 0; q < 4; ++q) {
    g.drift[q] = {c.drifts[q][0], c.drifts[q][1]};
  }
  g.step = c.step;
  g.q1 = c.process_noise(0, 0);
  g.q2 = c.process_noise(1, 1);
  g.r1 = c.observation_noise(0, 0);
  g.r2 = c.observation_noise(1, 1);
  g.start = {c.start[0], c.start[1]};
  g.start_var1 = c.start_covariance(0, 0);
  g.start_var2 = c.start_covariance(1, 1);
  double reach = 0.0;
  for (const auto& y : sim.observations) {
    reach = std::max({reach, std::abs(*y.find("Y1")), std::abs(*y.find("Y2"))});
  }
  g.half_width = std::ceil(reach + 2.0);
  g.h = 0.02;
  return g;
}

Outcome ac6(const Paths&) {
  constexpr std::size_t kParticles = 100000;
  constexpr std::size_t kSteps = 200;

  // Part 1: agreement on the default configuration.
  const QuadrantConfig cfg = QuadrantConfig::defaults();
  const StateSpaceModel model = quadrant_model(cfg);
  const Simulation sim = simulate(model, kSteps, cfg.seed);
  RunSettings parametric;
  parametric.representation = Representation::hybrid_parametric;
  RunSettings particles;
  particles.representation = Representation::hybrid_sample;
  particles.particles = kParticles;
  particles.seed = cfg.seed;
  const FilterResult rp = run_filter(model, sim.observations, parametric);
  const FilterResult rs = run_filter(model, sim.observations, particles);
  std::size_t within = 0;
  std::vector<double> ratio;
  for (std::size_t t = 0; t < kSteps; ++t) {
    const auto a = summarize(rp.posteriors[t]);
    const auto b = summarize(rs.posteriors[t]);
    const double ess = effective_sample_size(rs.posteriors[t].get<SampleFactor>());
    bool ok = true;
    for (const char* v : {"F1", "F2"}) {
      const double se = std::sqrt(b.variance.at(v) / ess);
      ok = ok && std::abs(a.mean.at(v) - b.mean.at(v)) <= 3.0 * se;
      ratio.push_back(std::abs(a.mean.at(v) - b.mean.at(v)) / se);
    }
    within += ok ? 1 : 0;
  }
  const double agreement = static_cast<double>(within) / kSteps;
  std::sort(ratio.begin(), ratio.end());

  // Part 2: quadrant recovery on the low-noise configuration.
  const QuadrantConfig low = QuadrantConfig::low_noise();
  const StateSpaceModel low_model = quadrant_model(low);
  const Simulation low_sim = simulate(low_model, kSteps, low.seed);
  RunSettings low_particles = particles;
  low_particles.seed = low.seed;
  const double acc_param = state_accuracy(run_filter(low_model, low_sim.observations, parametric), low_sim);
  const double acc_sample = state_accuracy(run_filter(low_model, low_sim.observations, low_particles), low_sim);

  // Part 3: both runs are filter_from over the same model; only the initial factor differs.
  RunSettings small = particles;
  small.particles = 500;
  const std::vector<Assignment> head(sim.observations.begin(), sim.observations.begin() + 5);
  bool same_path = true;
  for (const RunSettings& s : {parametric, small}) {
    const FilterResult a = run_filter(model, head, s);
    const FilterResult b = filter_from(initial_factor(model, s), model, head, s.policy);
    same_path = same_path && a.log_likelihoods == b.log_likelihoods;
  }

  // Diagnostic: distance of each filter from an exact point-mass filter on a fine grid.
  const auto grid = oracle::grid_quadrant_filter(grid_config(cfg, sim), [&] {
    std::vector<oracle::Point> ys;
    for (const auto& y : sim.observations) {
      ys.push_back({*y.find("Y1"), *y.find("Y2")});
    }
    return ys;
  }());
  double grid_param = 0.0;
  double grid_sample = 0.0;
  for (std::size_t t = 0; t < kSteps; ++t) {
    const auto a = summarize(rp.posteriors[t]);
    const auto b = summarize(rs.posteriors[t]);
    grid_param += std::pow(a.mean.at("F1") - grid[t].mean1, 2) + std::pow(a.mean.at("F2") - grid[t].mean2, 2);
    grid_sample += std::pow(b.mean.at("F1") - grid[t].mean1, 2) + std::pow(b.mean.at("F2") - grid[t].mean2, 2);
  }
  grid_param = std::sqrt(grid_param / (2.0 * kSteps));
  grid_sample = std::sqrt(grid_sample / (2.0 * kSteps));

  const bool pass = agreement >= 0.95 && acc_param >= 0.90 && acc_sample >= 0.90 && same_path;
  return {pass, fmt::format("T=200, n=1e5: steps with |parametric - particle| <= 3 SE: {:.1f}% (need 95%; "
                            "|diff|/SE median {:.1f}, 90th pct {:.1f}); low-noise S accuracy parametric {:.1f}%, "
                            "particle {:.1f}% (need 90%); identical filter_from code path: {}; "
                            "RMS distance from exact grid filter: parametric {:.1e}, particle {:.1e}",
                            100.0 * agreement, ratio[ratio.size() / 2], ratio[ratio.size() * 9 / 10], 100.0 * acc_param,
                            100.0 * acc_sample, same_path ? "yes" : "no", grid_param, grid_sample)};
}

// ---------------------------------------------------------------------------
// AC7: every CLI run reproduces byte-for-byte from its manifest.

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int shell(const std::vector<std::string>& args) {
  std::string cmd;
  for (const auto& a : args) {
    cmd += "'" + a + "' ";
  }
  cmd += ">/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome ac7(const Paths& paths) {
  const fs::path dir = fs::temp_directory_path() / "polyfactor_acceptance_ac7";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto at = [&](const std::string& name) { return (dir / name).string(); };
  const std::string& d = paths.data;
  const std::vector<std::vector<std::string>> runs{
      {"simulate", d + "/quadrant.json", "--T", "40", "--seed", "3", "--out", at("sim.csv")},
      {"simulate", d + "/lg2.json", "--T", "30", "--seed", "8", "--out", at("lg.csv")},
      {"query", d + "/burglary.json", "--query", "B", "--evidence", "J=true,M=true", "--out", at("query.csv")},
      {"filter", d + "/quadrant.json", "--data", at("sim.csv"), "--rep", "hybrid-parametric", "--out", at("fp.csv")},
      {"filter", d + "/quadrant.json", "--data", at("sim.csv"), "--rep", "hybrid-sample", "--particles", "2000",
       "--seed", "11", "--out", at("fs.csv")},
      {"filter", d + "/lg2.json", "--data", at("lg.csv"), "--rep", "sample", "--particles", "1000", "--format", "json",
       "--out", at("lg_sample.json")},
      {"smooth", d + "/lg2.json", "--data", at("lg.csv"), "--out", at("smooth.csv")},
      {"compare-reps", d + "/quadrant.json", "--data", at("sim.csv"), "--reps", "hybrid-parametric,hybrid-sample",
       "--particles", "2000", "--out", at("compare.csv")},
  };
  std::size_t reproduced = 0;
  std::size_t files = 0;
  std::vector<std::string> failures;
  for (const auto& run : runs) {
    std::vector<std::string> cmd{paths.cli};
    cmd.insert(cmd.end(), run.begin(), run.end());
    const fs::path out = run.back();
    const std::string label = out.filename().string();
    if (shell(cmd) != 0) {
      failures.push_back(label + " (run)");
      continue;
    }
    const Json manifest = Json::parse(slurp(fs::path(out).replace_extension(".manifest.json")));
    const fs::path replay_dir = dir / ("replay_" + out.stem().string());
    if (shell({paths.cli, "replay", fs::path(out).replace_extension(".manifest.json").string(), "--out-dir",
               replay_dir.string()}) != 0) {
      failures.push_back(label + " (replay)");
      continue;
    }
    bool identical = true;
    for (const auto& o : manifest["outputs"]) {
      const fs::path original = o["path"].get<std::string>();
      identical = identical && slurp(original) == slurp(replay_dir / original.filename());
      ++files;
    }
    if (identical) {
      ++reproduced;
    } else {
      failures.push_back(label + " (bytes differ)");
    }
  }
  fs::remove_all(dir);
  std::string detail = fmt::format("{} of {} CLI runs ({} output files) replayed from their manifests byte-identically",
                                   reproduced, runs.size(), files);
  if (!failures.empty()) {
    detail += fmt::format("; failed: {}", fmt::join(failures, ", "));
  }
  return {reproduced == runs.size(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria AC1-AC7"};
  Paths paths;
  std::vector<std::string> only;
  app.add_option("--cli", paths.cli, "polyfactor executable")->required();
  app.add_option("--data", paths.data, "Directory with the shipped model files")->required();
  app.add_option("--only", only, "Run only these criteria (e.g. AC3)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    std::string id;
    double limit_seconds;
    std::function<Outcome(const Paths&)> run;
  };
  const std::vector<Criterion> criteria{
      {"AC1", 10, ac1}, {"AC2", 5, ac2}, {"AC3", 5, ac3}, {"AC4", 120, ac4},
      {"AC5", 30, ac5}, {"AC6", 180, ac6}, {"AC7", 60, ac7},
  };
  bool all = true;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    try {
      o = c.run(paths);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    all = all && pass;
    fmt::print("{} {} {}; runtime {:.1f} s (limit {:.0f} s){}\n", c.id, pass ? "PASS" : "FAIL", o.detail, secs,
               c.limit_seconds, in_time ? "" : " EXCEEDED");
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
