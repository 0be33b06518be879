#include <gmock/gmock.h>

#include <polyfactor/core/operations.hpp>
#include <polyfactor/table/sparse_table_factor.hpp>
#include <polyfactor/table/table_factor.hpp>

#include "support/random_factors.hpp"

namespace {

using namespace polyfactor;
using polyfactor::testing::all_assignments;

const auto X = Variable::discrete("X", 2);
const auto Y = Variable::discrete("Y", 2);

std::vector<double> values_of(const Factor& f) {
  if (const auto* s = f.as<SparseTableFactor>()) {
    return values_of(to_dense(*s));
  }
  const auto v = f.get<TableFactor>().values();
  return {v.begin(), v.end()};
}

TEST(TableFactor, Lookup) {
  auto f = TableFactor::make({X}, {0.3, 0.7});
  EXPECT_DOUBLE_EQ(evaluate(f, {{"X", 1}}), 0.7);
}

TEST(TableFactor, ConstructorPermutesToCanonicalLayout) {
  auto f = TableFactor::make({Y, X}, {1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(evaluate(f, {{"Y", 0}, {"X", 1}}), 2.0);
  EXPECT_THAT(values_of(f), ::testing::ElementsAre(1, 3, 2, 4));
}

TEST(TableFactor, RejectsNegativeValues) {
  EXPECT_THROW((void)TableFactor::make({X}, {-0.1, 1.0}), FactorError);
  EXPECT_THROW((void)TableFactor::make({X}, {1.0}), FactorError);
}

TEST(TableFactor, Multiply) {
  auto f = TableFactor::make({X}, {0.2, 0.8});
  auto g = TableFactor::make({Y}, {0.4, 0.6});
  auto h = f * g;
  EXPECT_EQ(h.scope(), (Scope{X, Y}));
  EXPECT_THAT(values_of(h), ::testing::Pointwise(::testing::DoubleEq(), std::vector{0.08, 0.12, 0.32, 0.48}));
}

TEST(TableFactor, MultiplyByOnesIsIdentity) {
  auto f = TableFactor::make({X}, {0.2, 0.8});
  EXPECT_THAT(values_of(f * TableFactor::filled(Scope{X}, 1.0)), ::testing::ElementsAre(0.2, 0.8));
}

TEST(TableFactor, OneHotMasks) {
  auto f = TableFactor::make({X}, {0.3, 0.7});
  auto masked = TableFactor::one_hot(X, 0) * f;
  EXPECT_THAT(values_of(masked), ::testing::ElementsAre(0.3, 0.0));
  EXPECT_DOUBLE_EQ(std::exp(log_scalar(sum_out(masked, Scope{X}))), 0.3);
}

TEST(TableFactor, SumOutRows) {
  auto h = TableFactor::make({X, Y}, {0.08, 0.12, 0.32, 0.48});
  EXPECT_THAT(values_of(sum_out(h, Scope{Y})), ::testing::Pointwise(::testing::DoubleEq(), std::vector{0.2, 0.8}));
}

TEST(TableFactor, ReduceSlices) {
  auto h = TableFactor::make({X, Y}, {0.08, 0.12, 0.32, 0.48});
  auto r = reduce(h, {{"X", 1}});
  EXPECT_EQ(r.scope(), Scope{Y});
  EXPECT_THAT(values_of(r), ::testing::ElementsAre(0.32, 0.48));
}

TEST(TableFactor, Divide) {
  auto f = TableFactor::make({X}, {0.15, 0.35});
  auto g = TableFactor::make({X}, {0.5, 0.5});
  EXPECT_THAT(values_of(f / g), ::testing::Pointwise(::testing::DoubleEq(), std::vector{0.3, 0.7}));
}

TEST(TableFactor, ZeroOverZeroIsZero) {
  auto f = TableFactor::make({X}, {0.0, 0.4});
  auto g = TableFactor::make({X}, {0.0, 0.5});
  EXPECT_THAT(values_of(f / g), ::testing::Pointwise(::testing::DoubleEq(), std::vector{0.0, 0.8}));
  EXPECT_THROW((void)(TableFactor::make({X}, {0.3, 0.5}) / f), FactorError);
}

TEST(TableFactor, SelfQuotientIsOnes) {
  auto f = TableFactor::make({X, Y}, {0.1, 0.2, 0.3, 0.4});
  EXPECT_THAT(values_of(f / f), ::testing::Each(::testing::DoubleEq(1.0)));
}

TEST(TableFactor, Add) {
  auto f = TableFactor::make({X}, {0.1, 0.2});
  auto g = TableFactor::make({X}, {0.3, 0.4});
  EXPECT_THAT(values_of(f + g), ::testing::Pointwise(::testing::DoubleEq(), std::vector{0.4, 0.6}));
  EXPECT_THAT(values_of(f + TableFactor::filled(Scope{X}, 0.0)), ::testing::ElementsAre(0.1, 0.2));
}

TEST(TableFactor, Normalize) {
  auto f = TableFactor::make({X}, {2, 6});
  EXPECT_THAT(values_of(normalize(f)), ::testing::Pointwise(::testing::DoubleNear(1e-15), std::vector{0.25, 0.75}));
  auto n = normalize(normalize(f));
  EXPECT_THAT(values_of(n), ::testing::Pointwise(::testing::DoubleNear(1e-12), std::vector{0.25, 0.75}));
}

TEST(SparseTableFactor, RoundTrip) {
  auto f = TableFactor::make({X, Y}, {0, 0.4, 0, 0.6});
  auto s = to_sparse(f.get<TableFactor>());
  EXPECT_EQ(s.get<SparseTableFactor>().entries().size(), 2u);
  EXPECT_THAT(values_of(to_dense(s.get<SparseTableFactor>())), ::testing::ElementsAre(0, 0.4, 0, 0.6));
  auto zeros = to_sparse(TableFactor::filled(Scope{X, Y}, 0.0).get<TableFactor>());
  EXPECT_TRUE(zeros.get<SparseTableFactor>().entries().empty());
}

TEST(SparseTableFactor, RandomRoundTrip) {
  std::mt19937_64 gen(7);
  auto pool = polyfactor::testing::discrete_pool(3, 3);
  for (int trial = 0; trial < 20; ++trial) {
    auto f = polyfactor::testing::random_table(Scope(pool), gen, 0.5);
    auto back = to_dense(to_sparse(f.get<TableFactor>()).get<SparseTableFactor>());
    EXPECT_EQ(values_of(back), values_of(f));
  }
}

TEST(SparseTableFactor, DivisionTouchesNumeratorSupportOnly) {
  auto f = to_sparse(TableFactor::make({X}, {0.0, 0.4}).get<TableFactor>());
  auto g = to_sparse(TableFactor::make({X}, {0.0, 0.5}).get<TableFactor>());
  EXPECT_THAT(values_of(f / g), ::testing::Pointwise(::testing::DoubleEq(), std::vector{0.0, 0.8}));
  auto h = to_sparse(TableFactor::make({X}, {0.3, 0.5}).get<TableFactor>());
  EXPECT_THROW((void)(h / f), FactorError);
}

TEST(SparseTableFactor, MixedOperandsPromoteToDense) {
  auto f = TableFactor::make({X}, {0.2, 0.8});
  auto g = to_sparse(TableFactor::make({Y}, {0.0, 0.5}).get<TableFactor>());
  EXPECT_EQ((f * g).tag(), "table");
  EXPECT_EQ((g * f).tag(), "table");
}

TEST(SparseTableFactor, MixedOperandsStaySparseWhenLarge) {
  std::vector<Variable> big;
  for (int i = 0; i < 11; ++i) {
    big.push_back(Variable::discrete("B" + std::to_string(i), 4));
  }
  auto s = SparseTableFactor::make(Scope(big), {{0, 1.0}, {12345, 2.0}});
  auto d = TableFactor::make({X}, {0.5, 0.25});
  auto r = s * d;
  EXPECT_EQ(r.tag(), "sparse");
  EXPECT_EQ(r.get<SparseTableFactor>().entries().size(), 4u);
}

TEST(SparseTableFactor, ScalarLogOfEmpty) {
  auto s = SparseTableFactor::make(Scope{}, {});
  EXPECT_EQ(log_scalar(s), -std::numeric_limits<double>::infinity());
}

class DenseSparseAgreement : public ::testing::TestWithParam<int> {};

TEST_P(DenseSparseAgreement, AllOperations) {
  std::mt19937_64 gen(static_cast<std::uint64_t>(GetParam()));
  auto pool = polyfactor::testing::discrete_pool(5, 3);
  std::uniform_int_distribution<std::size_t> card(2, 4);
  for (auto& v : pool) {
    v = Variable::discrete(v.name(), card(gen));
  }
  auto fs = polyfactor::testing::random_subscope(pool, 1, 4, gen);
  auto gs = polyfactor::testing::random_subscope(pool, 1, 4, gen);
  auto f = polyfactor::testing::random_table(fs, gen, 0.3);
  auto g = polyfactor::testing::random_table(gs, gen, 0.3);
  auto sf = to_sparse(f.get<TableFactor>());
  auto sg = to_sparse(g.get<TableFactor>());

  auto near = [](const Factor& a, const Factor& b) {
    ASSERT_EQ(a.scope(), b.scope());
    EXPECT_THAT(values_of(a), ::testing::Pointwise(::testing::DoubleNear(1e-12), values_of(b)));
  };
  auto product = sf * sg;
  EXPECT_EQ(product.tag(), "sparse");
  near(product, f * g);
  for (const auto& e : product.get<SparseTableFactor>().entries()) {
    EXPECT_GT(e.second, 0.0);
  }
  auto sub = polyfactor::testing::random_subscope(fs.vars(), 1, fs.size(), gen);
  near(sum_out(sf, sub), sum_out(f, sub));
  Assignment evidence;
  for (const auto& v : sub) {
    evidence.set(v.name(), static_cast<double>(gen() % v.cardinality()));
  }
  near(reduce(sf, evidence), reduce(f, evidence));
  near(sf + to_sparse(polyfactor::testing::random_table(fs, gen, 0.5).get<TableFactor>()),
       f + polyfactor::testing::random_table(fs, std::mt19937_64(gen) = gen, 0.5));
  auto positive = polyfactor::testing::random_table(sub, gen);
  near(sf / to_sparse(positive.get<TableFactor>()), f / positive);
  near(rename(sf, {{fs[0].name(), "Z"}}), rename(f, {{fs[0].name(), "Z"}}));
  EXPECT_EQ(f.scope().union_with(g.scope()).joint_cardinality(),
            (f * g).get<TableFactor>().values().size());
}

INSTANTIATE_TEST_SUITE_P(Seeds, DenseSparseAgreement, ::testing::Range(0, 60));

TEST(TableFactor, SumOutPreservesMass) {
  std::mt19937_64 gen(3);
  auto pool = polyfactor::testing::discrete_pool(4, 3);
  auto f = polyfactor::testing::random_table(Scope(pool), gen);
  const double total = f.get<TableFactor>().total();
  auto m = sum_out(f, Scope{pool[1], pool[3]});
  EXPECT_NEAR(m.get<TableFactor>().total(), total, 1e-12);
}

TEST(TableFactor, SamplerFrequencies) {
  auto f = TableFactor::make({X}, {0.2, 0.8});
  auto sampler = f.impl().make_sampler(Scope{});
  Rng rng(42);
  const int n = 100000;
  std::vector<double> out(1);
  int ones = 0;
  for (int i = 0; i < n; ++i) {
    sampler->draw({}, out, rng);
    ones += out[0] == 1.0;
  }
  EXPECT_NEAR(static_cast<double>(ones) / n, 0.8, 4 * std::sqrt(0.16 / n));
}

TEST(TableFactor, ConditionalSampler) {
  auto f = TableFactor::make({X, Y}, {0.0, 1.0, 3.0, 0.0});
  auto sampler = f.impl().make_sampler(Scope{X});
  Rng rng(1);
  std::vector<double> out(1);
  std::vector<double> given{0.0};
  EXPECT_DOUBLE_EQ(sampler->draw(given, out, rng), 0.0);
  EXPECT_EQ(out[0], 1.0);
  given[0] = 1.0;
  EXPECT_DOUBLE_EQ(sampler->log_mass(given), std::log(3.0));
  sampler->draw(given, out, rng);
  EXPECT_EQ(out[0], 0.0);
}

TEST(TableFactor, AllAssignmentsEnumeration) {
  EXPECT_EQ(all_assignments(Scope{X, Y, Variable::discrete("Z", 3)}).size(), 12u);
}

}  // namespace
