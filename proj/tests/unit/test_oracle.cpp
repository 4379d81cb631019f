#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "tole/oracle.hpp"
#include "tole/random.hpp"
#include "tole/shaping.hpp"

using namespace tole;
using namespace tole::oracle;

namespace {

bool contains_one(std::span<const TokenId> y) { return std::find(y.begin(), y.end(), 1) != y.end(); }

}  // namespace

TEST(Posterior, HandComputedValues) {
  auto task = uniform_task(2, 2, contains_one);
  EXPECT_NEAR(exact_attr_posterior(task, std::vector<TokenId>{}), 0.75, 1e-15);
  EXPECT_NEAR(exact_attr_posterior(task, std::vector<TokenId>{1}), 1.0, 1e-15);
  EXPECT_NEAR(exact_attr_posterior(task, std::vector<TokenId>{0}), 0.5, 1e-15);
  EXPECT_EQ(exact_attr_posterior(task, std::vector<TokenId>{0, 0}), 0.0);
  EXPECT_THROW(exact_attr_posterior(task, std::vector<TokenId>{0, 0, 1}), std::out_of_range);
}

TEST(BayesIdentity, HoldsOnUniformAndRandomTasks) {
  auto r = check_bayes_identity(uniform_task(3, 3, contains_one));
  EXPECT_LT(r.max_deviation, 1e-12);
  EXPECT_GT(r.checked, 0u);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto rep = check_bayes_identity(random_task(3, 4, seed));
    EXPECT_LT(rep.max_deviation, 1e-12) << "seed " << seed;
  }
}

TEST(BayesIdentity, IndependentPredicateLeavesConditionalsUnchanged) {
  // The attribute is always true, so conditioning changes nothing.
  auto task = uniform_task(3, 3, [](std::span<const TokenId>) { return true; });
  for (TokenId a = 0; a < 3; ++a) EXPECT_DOUBLE_EQ(exact_attr_posterior(task, std::vector<TokenId>{a}), 1.0);
  EXPECT_LT(check_bayes_identity(task).max_deviation, 1e-12);
}

TEST(BayesIdentity, ImpossiblePrefixesAreSkipped) {
  auto task = uniform_task(2, 2, [](std::span<const TokenId> y) { return y[0] == 0; });
  auto r = check_bayes_identity(task);
  EXPECT_EQ(r.skipped, 1u);  // the prefix [1]
  EXPECT_LT(r.max_deviation, 1e-12);
}

TEST(BayesIdentity, HoldsForAPolicyNetwork) {
  auto p = PolicyParams::random(PolicyShape{4, 3}, 5, 0.8);
  auto task = network_task(p, 3, contains_one);
  EXPECT_EQ(task.num_actions, 3u);
  EXPECT_LT(check_bayes_identity(task).max_deviation, 1e-12);
}

TEST(BruteForceQuantiles, SimpleCasesAndAgreement) {
  EXPECT_EQ(brute_force_quantiles(std::vector<double>{0.4}, 3), std::vector<double>(4, 0.4));
  std::vector<double> a{0.5, 0.1, 0.9, 0.3}, b{0.9, 0.3, 0.1, 0.5};
  EXPECT_EQ(brute_force_quantiles(a, 3), brute_force_quantiles(b, 3));
  EXPECT_THROW(brute_force_quantiles({}, 2), std::invalid_argument);

  Rng rng(77);
  std::uniform_int_distribution<std::size_t> n_dist(1, 200), q_dist(1, 10);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> r(n_dist(rng));
    for (double& x : r) x = u(rng);
    const std::size_t q = q_dist(rng);
    ASSERT_EQ(brute_force_quantiles(r, q), compute_quantiles(r, q).boundaries);
  }
}

TEST(FiniteDifference, SquareAtThree) {
  auto g = finite_difference([](std::span<const double> x) { return x[0] * x[0]; }, std::vector<double>{3.0});
  EXPECT_NEAR(g[0], 6.0, 1e-8);
  EXPECT_THROW(finite_difference([](std::span<const double> x) { return std::log(x[0]); }, std::vector<double>{0.0}),
               std::domain_error);
}

TEST(CompareGradients, FlagsTheWorstCoordinate) {
  std::vector<double> a{1.0, 2.0, 3.0}, n{1.0, 2.1, 3.0};
  auto c = compare_gradients(a, n);
  EXPECT_FALSE(c.passed);
  EXPECT_EQ(c.worst_index, 1u);
  EXPECT_TRUE(compare_gradients(a, a).passed);
  EXPECT_THROW(compare_gradients(a, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(OracleSuite, EveryCheckPasses) {
  SuiteOptions opts;
  opts.gradient_seeds = 5;
  opts.quantile_cases = 200;
  for (const auto& r : run_oracle_suite(opts)) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
}
