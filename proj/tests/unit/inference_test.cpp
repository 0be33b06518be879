#include <gmock/gmock.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <polyfactor/core/operations.hpp>
#include <polyfactor/gaussian/canonical_gaussian.hpp>
#include <polyfactor/inference/elimination.hpp>
#include <polyfactor/inference/filtering.hpp>
#include <polyfactor/sample/sample_factor.hpp>
#include <polyfactor/table/table_factor.hpp>

#include "oracles/enumeration.hpp"
#include "oracles/kalman.hpp"
#include "support/random_network.hpp"

namespace {

using namespace polyfactor;
using ::testing::HasSubstr;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const FactorError& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected a FactorError";
  return ErrorCode::invalid_argument;
}

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const FactorError& e) {
    return e.what();
  }
  return {};
}

std::vector<std::string> names_of(const std::vector<Variable>& vars) {
  std::vector<std::string> out;
  for (const auto& v : vars) {
    out.push_back(v.name());
  }
  return out;
}

using polyfactor::testing::library_posterior;
using polyfactor::testing::random_network;
using polyfactor::testing::var_name;

TEST(EliminationOrder, ChainQueriedAtOneEnd) {
  const auto A = Variable::discrete("A", 2);
  const auto B = Variable::discrete("B", 2);
  const auto C = Variable::discrete("C", 2);
  const auto D = Variable::discrete("D", 2);
  FactorGraphModel m{"chain", "", {A, B, C, D},
                     {TableFactor::filled(Scope{A, B}, 1.0), TableFactor::filled(Scope{B, C}, 1.0),
                      TableFactor::filled(Scope{C, D}, 1.0)}};
  EXPECT_EQ(names_of(elimination_order(m, Scope{A})), (std::vector<std::string>{"D", "C", "B"}));
}

TEST(EliminationOrder, DisconnectedUsesNameOrder) {
  const auto A = Variable::discrete("A", 2);
  const auto B = Variable::discrete("B", 2);
  const auto C = Variable::discrete("C", 2);
  FactorGraphModel m{"flat", "", {C, B, A}, {}};
  EXPECT_EQ(names_of(elimination_order(m, Scope{})), (std::vector<std::string>{"A", "B", "C"}));
}

TEST(EliminationOrder, EvidenceIsSkipped) {
  const auto A = Variable::discrete("A", 2);
  const auto B = Variable::discrete("B", 2);
  const auto C = Variable::discrete("C", 2);
  FactorGraphModel m{"chain", "", {A, B, C},
                     {TableFactor::filled(Scope{A, B}, 1.0), TableFactor::filled(Scope{B, C}, 1.0)}};
  EXPECT_EQ(names_of(elimination_order(m, Scope{A}, Assignment{{"B", 0}})), (std::vector<std::string>{"C"}));
}

TEST(VariableElimination, SingleFactorNormalizes) {
  const auto A = Variable::discrete("A", 2);
  FactorGraphModel m{"one", "", {A}, {TableFactor::make({A}, {1.0, 3.0})}};
  const Factor p = variable_elimination(m, Scope{A});
  EXPECT_NEAR(evaluate(p, Assignment{{"A", 0}}), 0.25, 1e-15);
  EXPECT_NEAR(evaluate(p, Assignment{{"A", 1}}), 0.75, 1e-15);
}

TEST(VariableElimination, ChainMatchesEnumeration) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    oracle::PlainModel plain{{2, 2, 2}, {}};
    const double pa = unit(gen);
    const double b0 = unit(gen), b1 = unit(gen), c0 = unit(gen), c1 = unit(gen);
    plain.factors.push_back({{0}, {pa, 1 - pa}});
    plain.factors.push_back({{0, 1}, {b0, 1 - b0, b1, 1 - b1}});
    plain.factors.push_back({{1, 2}, {c0, 1 - c0, c1, 1 - c1}});
    FactorGraphModel m;
    std::vector<Variable> vars{Variable::discrete("V0", 2), Variable::discrete("V1", 2), Variable::discrete("V2", 2)};
    m.variables = vars;
    m.factors = {TableFactor::make({vars[0]}, plain.factors[0].values),
                 TableFactor::make({vars[0], vars[1]}, plain.factors[1].values),
                 TableFactor::make({vars[1], vars[2]}, plain.factors[2].values)};
    const auto expected = oracle::enumerate_posterior(plain, {2}, {});
    const auto got = library_posterior(variable_elimination(m, Scope{vars[2]}), {2});
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_NEAR(got[i], expected[i], 1e-12);
    }
  }
}

class RandomNetworks : public ::testing::TestWithParam<int> {};

TEST_P(RandomNetworks, MatchEnumerationForAnyOrder) {
  std::mt19937_64 gen(static_cast<std::uint64_t>(GetParam()) * 7919u + 3u);
  const int n = 3 + GetParam() % 4;
  const auto net = random_network(gen, n);
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), gen);
  const std::size_t n_query = 1 + static_cast<std::size_t>(GetParam() % 2);
  const std::size_t n_evidence = static_cast<std::size_t>(GetParam() % 3);
  std::vector<int> query(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_query));
  std::map<int, int> evidence;
  Assignment ev;
  for (std::size_t k = 0; k < n_evidence && n_query + k < perm.size(); ++k) {
    const int v = perm[n_query + k];
    const int s = static_cast<int>(gen() % 2);
    evidence[v] = s;
    ev.set(var_name(v), s);
  }
  std::vector<Variable> qvars;
  for (int q : query) {
    qvars.push_back(Variable::discrete(var_name(q), 2));
  }
  const auto expected = oracle::enumerate_posterior(net.plain, query, evidence);
  const auto got = library_posterior(variable_elimination(net.model, Scope(qvars), ev), query);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_NEAR(got[i], expected[i], 1e-12);
  }

  auto order = elimination_order(net.model, Scope(qvars), ev);
  for (int k = 0; k < 4; ++k) {
    std::shuffle(order.begin(), order.end(), gen);
    const auto alt = library_posterior(variable_elimination(net.model, Scope(qvars), ev, order), query);
    for (std::size_t i = 0; i < expected.size(); ++i) {
      EXPECT_NEAR(alt[i], expected[i], 1e-12);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomNetworks, ::testing::Range(0, 50));

TEST(VariableElimination, Errors) {
  const auto A = Variable::discrete("A", 2);
  const auto B = Variable::discrete("B", 2);
  FactorGraphModel m{"one", "", {A}, {TableFactor::make({A}, {1.0, 3.0})}};
  EXPECT_EQ(code_of([&] { (void)variable_elimination(m, Scope{}); }), ErrorCode::empty_query);
  EXPECT_EQ(code_of([&] { (void)variable_elimination(m, Scope{B}); }), ErrorCode::missing_variable);
  EXPECT_EQ(code_of([&] { (void)variable_elimination(m, Scope{A}, Assignment{{"A", 0}}); }),
            ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([&] { (void)variable_elimination(m, Scope{A}, {}, std::vector<Variable>{B}); }),
            ErrorCode::invalid_argument);
}

TEST(VariableElimination, GaussianChain) {
  const auto X1 = Variable::continuous("X1");
  const auto X2 = Variable::continuous("X2");
  const auto Y = Variable::continuous("Y");
  FactorGraphModel m{"lg", "", {X1, X2, Y},
                     {CanonicalGaussian::from_moments({X1}, Vector::Constant(1, 1.0), Matrix::Constant(1, 1, 2.0), 0.0),
                      CanonicalGaussian::linear_gaussian({X1}, {X2}, Matrix::Constant(1, 1, 0.5), Vector::Zero(1),
                                                         Matrix::Constant(1, 1, 1.0)),
                      CanonicalGaussian::linear_gaussian({X2}, {Y}, Matrix::Identity(1, 1), Vector::Zero(1),
                                                         Matrix::Constant(1, 1, 0.5))}};
  const auto post = moments_of(variable_elimination(m, Scope{X2}, Assignment{{"Y", 2.0}}));
  // Prior X2 ~ N(0.5, 0.25·2 + 1) = N(0.5, 1.5); correction with R = 0.5.
  const double gain = 1.5 / 2.0;
  EXPECT_NEAR(post.mean(0), 0.5 + gain * 1.5, 1e-12);
  EXPECT_NEAR(post.covariance(0, 0), (1 - gain) * 1.5, 1e-12);
}

TEST(FactorGraphModel, ValidateNamesUndeclaredVariable) {
  const auto A = Variable::discrete("A", 2);
  const auto B = Variable::discrete("B", 2);
  FactorGraphModel m{"bad", "", {A}, {TableFactor::filled(Scope{A, B}, 1.0)}};
  EXPECT_THAT(error_of([&] { m.validate(); }), HasSubstr("'B'"));
  EXPECT_EQ(code_of([&] { m.validate(); }), ErrorCode::schema_error);
}

// ---------------------------------------------------------------------------
// State-space models.

const auto X = Variable::continuous("X");
const auto Y = Variable::continuous("Y");

StateSpaceModel lg1(double a, double q, double r, double m0, double p0) {
  StateSpaceModel m{
      .name = "lg1",
      .state = Scope{X},
      .observed = Scope{Y},
      .prior = CanonicalGaussian::from_moments({X}, Vector::Constant(1, m0), Matrix::Constant(1, 1, p0), 0.0),
      .transition = CanonicalGaussian::linear_gaussian({X.renamed("X_prev")}, {X}, Matrix::Constant(1, 1, a),
                                                       Vector::Zero(1), Matrix::Constant(1, 1, q)),
      .observation = CanonicalGaussian::linear_gaussian({X}, {Y}, Matrix::Identity(1, 1), Vector::Zero(1),
                                                        Matrix::Constant(1, 1, r)),
  };
  m.validate();
  return m;
}

oracle::LinearGaussianSsm plain_lg1(double a, double q, double r, double m0, double p0) {
  oracle::LinearGaussianSsm s;
  s.A = Eigen::MatrixXd::Constant(1, 1, a);
  s.Q = Eigen::MatrixXd::Constant(1, 1, q);
  s.C = Eigen::MatrixXd::Identity(1, 1);
  s.R = Eigen::MatrixXd::Constant(1, 1, r);
  s.m0 = Eigen::VectorXd::Constant(1, m0);
  s.P0 = Eigen::MatrixXd::Constant(1, 1, p0);
  return s;
}

std::vector<double> simulate_lg1(double a, double q, double r, double m0, double p0, std::size_t T, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z;
  double x = m0 + std::sqrt(p0) * z(gen);
  std::vector<double> ys;
  for (std::size_t t = 0; t < T; ++t) {
    x = a * x + std::sqrt(q) * z(gen);
    ys.push_back(x + std::sqrt(r) * z(gen));
  }
  return ys;
}

std::vector<Assignment> as_observations(const std::vector<double>& ys) {
  std::vector<Assignment> out;
  for (double y : ys) {
    out.push_back(Assignment{{"Y", y}});
  }
  return out;
}

std::vector<Eigen::VectorXd> as_vectors(const std::vector<double>& ys) {
  std::vector<Eigen::VectorXd> out;
  for (double y : ys) {
    out.push_back(Eigen::VectorXd::Constant(1, y));
  }
  return out;
}

TEST(StateSpaceModel, ValidateChecksConvention) {
  StateSpaceModel m = lg1(1, 1, 1, 0, 1);
  m.transition = CanonicalGaussian::linear_gaussian({X.renamed("Z")}, {X}, Matrix::Identity(1, 1), Vector::Zero(1),
                                                    Matrix::Identity(1, 1));
  EXPECT_EQ(code_of([&] { m.validate(); }), ErrorCode::schema_error);
}

TEST(FilterStep, OneDimensionalExample) {
  const auto m = lg1(1.0, 1.0, 1.0, 0.0, 1.0);
  const auto step = filter_step(m.prior, m, Assignment{{"Y", 1.0}});
  const auto mo = moments_of(step.posterior);
  EXPECT_NEAR(mo.mean(0), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(mo.covariance(0, 0), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(log_total_mass(step.posterior), 0.0, 1e-12);
}

TEST(Filter, SingleObservationEqualsStep) {
  const auto m = lg1(0.9, 0.5, 0.3, 1.0, 2.0);
  const auto step = filter_step(m.prior, m, Assignment{{"Y", 0.4}});
  const auto result = filter(m, {Assignment{{"Y", 0.4}}});
  ASSERT_EQ(result.posteriors.size(), 1u);
  EXPECT_DOUBLE_EQ(result.total_log_likelihood, step.log_likelihood);
  EXPECT_DOUBLE_EQ(moments_of(result.posteriors[0]).mean(0), moments_of(step.posterior).mean(0));
}

TEST(Filter, MatchesKalmanOracle) {
  const double a = 0.95, q = 0.4, r = 0.8, m0 = 0.5, p0 = 1.5;
  const auto ys = simulate_lg1(a, q, r, m0, p0, 20, 123);
  const auto result = filter(lg1(a, q, r, m0, p0), as_observations(ys));
  const auto oracle_steps = oracle::kalman_filter(plain_lg1(a, q, r, m0, p0), as_vectors(ys));
  double total = 0.0;
  for (std::size_t t = 0; t < ys.size(); ++t) {
    const auto mo = moments_of(result.posteriors[t]);
    EXPECT_NEAR(mo.mean(0), oracle_steps[t].mean(0), 1e-9);
    EXPECT_NEAR(mo.covariance(0, 0), oracle_steps[t].cov(0, 0), 1e-9);
    EXPECT_NEAR(result.log_likelihoods[t], oracle_steps[t].loglik, 1e-9);
    EXPECT_NEAR(log_total_mass(result.posteriors[t]), 0.0, 1e-9);
    total += oracle_steps[t].loglik;
  }
  EXPECT_NEAR(result.total_log_likelihood, total, 1e-9);
}

TEST(Smooth, SingleStepEqualsFilter) {
  const auto m = lg1(0.9, 0.5, 0.3, 1.0, 2.0);
  const auto s = smooth(m, {Assignment{{"Y", 0.4}}});
  const auto f = filter(m, {Assignment{{"Y", 0.4}}});
  EXPECT_DOUBLE_EQ(moments_of(s[0]).mean(0), moments_of(f.posteriors[0]).mean(0));
}

TEST(Smooth, MatchesRtsOracle) {
  const double a = 0.95, q = 0.4, r = 0.8, m0 = 0.5, p0 = 1.5;
  const auto ys = simulate_lg1(a, q, r, m0, p0, 20, 321);
  const auto smoothed = smooth(lg1(a, q, r, m0, p0), as_observations(ys));
  const auto plain = plain_lg1(a, q, r, m0, p0);
  const auto rts = oracle::rts_smoother(plain, oracle::kalman_filter(plain, as_vectors(ys)));
  for (std::size_t t = 0; t < ys.size(); ++t) {
    const auto mo = moments_of(smoothed[t]);
    EXPECT_NEAR(mo.mean(0), rts[t].mean(0), 1e-8) << "t=" << t;
    EXPECT_NEAR(mo.covariance(0, 0), rts[t].cov(0, 0), 1e-8) << "t=" << t;
    EXPECT_NEAR(log_total_mass(smoothed[t]), 0.0, 1e-9);
  }
}

TEST(Smooth, SamplesAreUnsupported) {
  auto m = lg1(1, 1, 1, 0, 1);
  Rng rng(1);
  m.prior = sample_from(m.prior, 100, rng);
  EXPECT_EQ(code_of([&] { (void)smooth(m, {Assignment{{"Y", 0.0}}, Assignment{{"Y", 0.0}}}); }),
            ErrorCode::unsupported);
}

// Discrete HMM over X ∈ {0, 1} with observations O ∈ {0, 1}.
const auto H = Variable::discrete("H", 2);
const auto O = Variable::discrete("O", 2);

StateSpaceModel hmm(const oracle::PlainHmm& h) {
  StateSpaceModel m{
      .name = "hmm",
      .state = Scope{H},
      .observed = Scope{O},
      .prior = TableFactor::make({H}, h.pi),
      .transition = TableFactor::make({H.renamed("H_prev"), H},
                                      {h.trans[0][0], h.trans[0][1], h.trans[1][0], h.trans[1][1]}),
      .observation = TableFactor::make({H, O}, {h.emit[0][0], h.emit[0][1], h.emit[1][0], h.emit[1][1]}),
  };
  m.validate();
  return m;
}

std::vector<Assignment> symbols(const std::vector<int>& ys) {
  std::vector<Assignment> out;
  for (int y : ys) {
    out.push_back(Assignment{{"O", y}});
  }
  return out;
}

const oracle::PlainHmm kHmm{{0.6, 0.4}, {{0.7, 0.3}, {0.2, 0.8}}, {{0.9, 0.1}, {0.25, 0.75}}};
const std::vector<int> kSymbols{0, 1, 1, 0, 1};

TEST(FilterHmm, IdentityTransitionCollapses) {
  const oracle::PlainHmm h{{0.5, 0.5}, {{1, 0}, {0, 1}}, {{1, 0}, {0, 1}}};
  const auto step = filter_step(hmm(h).prior, hmm(h), Assignment{{"O", 1}});
  EXPECT_DOUBLE_EQ(evaluate(step.posterior, Assignment{{"H", 1}}), 1.0);
  EXPECT_DOUBLE_EQ(evaluate(step.posterior, Assignment{{"H", 0}}), 0.0);
}

TEST(FilterHmm, ImpossibleObservationIsZeroMass) {
  const oracle::PlainHmm h{{1.0, 0.0}, {{1, 0}, {0, 1}}, {{1, 0}, {0, 1}}};
  EXPECT_EQ(code_of([&] { (void)filter_step(hmm(h).prior, hmm(h), Assignment{{"O", 1}}); }), ErrorCode::zero_mass);
  EXPECT_THAT(error_of([&] { (void)filter(hmm(h), symbols({0, 1})); }), HasSubstr("step 2"));
}

TEST(FilterHmm, LogLikelihoodMatchesPathEnumeration) {
  const auto result = filter(hmm(kHmm), symbols(kSymbols));
  EXPECT_NEAR(result.total_log_likelihood, oracle::hmm_path_log_likelihood(kHmm, kSymbols), 1e-10);
  for (std::size_t t = 0; t < kSymbols.size(); ++t) {
    const auto expected = oracle::hmm_path_marginals(kHmm, kSymbols, t + 1)[t];
    for (int i = 0; i < 2; ++i) {
      EXPECT_NEAR(evaluate(result.posteriors[t], Assignment{{"H", i}}), expected[static_cast<std::size_t>(i)], 1e-10);
    }
  }
}

TEST(SmoothHmm, MatchesEnumeration) {
  const auto smoothed = smooth(hmm(kHmm), symbols(kSymbols));
  const auto expected = oracle::hmm_path_marginals(kHmm, kSymbols, kSymbols.size());
  for (std::size_t t = 0; t < kSymbols.size(); ++t) {
    double total = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double p = evaluate(smoothed[t], Assignment{{"H", i}});
      EXPECT_NEAR(p, expected[t][static_cast<std::size_t>(i)], 1e-10);
      total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(SmoothHmm, ZeroPredictiveMassDividesToZero) {
  const oracle::PlainHmm h{{1.0, 0.0}, {{1.0, 0.0}, {0.5, 0.5}}, {{0.5, 0.5}, {0.5, 0.5}}};
  const auto smoothed = smooth(hmm(h), symbols({0, 0}));
  EXPECT_DOUBLE_EQ(evaluate(smoothed[0], Assignment{{"H", 0}}), 1.0);
  EXPECT_DOUBLE_EQ(evaluate(smoothed[1], Assignment{{"H", 1}}), 0.0);
}

TEST(FilterSamples, SameCodePathTracksKalman) {
  const double a = 0.9, q = 0.3, r = 0.5, m0 = 0.0, p0 = 1.0;
  const auto ys = simulate_lg1(a, q, r, m0, p0, 10, 77);
  const auto model = lg1(a, q, r, m0, p0);
  const auto exact = oracle::kalman_filter(plain_lg1(a, q, r, m0, p0), as_vectors(ys));
  const std::size_t n = 20000;
  Rng rng(5);
  const auto result = filter_from(sample_from(model.prior, n, rng), model, as_observations(ys));
  for (std::size_t t = 0; t < ys.size(); ++t) {
    const auto& s = result.posteriors[t].get<SampleFactor>();
    const auto est = estimate_moments(s);
    // Generous bound: resampling inflates the variance above var/n.
    EXPECT_LE(std::abs(est.continuous->mean(0) - exact[t].mean(0)), 8.0 * std::sqrt(exact[t].cov(0, 0) / 2000.0));
    EXPECT_NEAR(result.log_likelihoods[t], exact[t].loglik, 0.05);
  }
}

TEST(ProjectionPolicy, ResamplesOnlyBelowThreshold) {
  const Factor even = Factor::make<SampleFactor>(Scope{X}, std::vector<double>{0, 1, 2, 3},
                                                 std::vector<double>{1, 1, 1, 1}, 0.0, std::vector<std::string>{});
  const Factor skewed = Factor::make<SampleFactor>(Scope{X}, std::vector<double>{0, 1, 2, 3},
                                                   std::vector<double>{1, 0, 0, 0}, 0.0, std::vector<std::string>{});
  const ProjectionPolicy policy;
  EXPECT_EQ(policy.project(even).shared(), even.shared());
  const Factor r = policy.project(skewed);
  EXPECT_THAT(r.get<SampleFactor>().particles(), ::testing::Each(0.0));
  EXPECT_THAT(r.get<SampleFactor>().lineage().back(), HasSubstr("resample"));
  EXPECT_EQ(ProjectionPolicy::exact().project(skewed).shared(), skewed.shared());
}

}  // namespace
