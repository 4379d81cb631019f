#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "test_util.hpp"
#include "tole/policy.hpp"

using namespace tole;
using tole::testing::max_rel_error;
using tole::testing::numeric_gradient;

namespace {

// Four sampleable tokens plus BOS.
PolicyShape shape5() { return PolicyShape{5, 4}; }
Vocabulary vocab5() { return Vocabulary::with_generated_labels(4); }

PolicyParams with_data(PolicyShape s, std::span<const double> x) {
  PolicyParams p(s);
  std::copy(x.begin(), x.end(), p.data().begin());
  return p;
}

std::vector<double> as_vector(const PolicyParams& p) { return {p.data().begin(), p.data().end()}; }

}  // namespace

TEST(Policy, ZeroParametersGiveUniformOverSampleableTokens) {
  PolicyParams p(shape5());
  auto act = forward_history(p, std::vector<TokenId>{4});
  auto full = softmax(act.logits);
  for (double x : full) EXPECT_DOUBLE_EQ(x, 0.2);
  auto dist = action_distribution(p.shape(), act.logits);
  EXPECT_EQ(dist.prob[4], 0.0);
  EXPECT_TRUE(std::isinf(dist.log_prob[4]));
  for (int a = 0; a < 4; ++a) EXPECT_DOUBLE_EQ(dist.prob[a], 0.25);
}

TEST(Policy, SoftmaxSumsToOne) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto p = PolicyParams::random(shape5(), seed, 2.0);
    const std::vector<TokenId> h{4, static_cast<TokenId>(seed % 4)};
    auto dist = action_distribution(p.shape(), forward_history(p, h).logits);
    double sum = 0;
    for (double x : dist.prob) sum += x;
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Policy, PointMassAlwaysSamplesItsToken) {
  PolicyParams p(shape5());
  p.out_b()[2] = 60.0;
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(sample_token(p, std::vector<TokenId>{4}, rng), 2);
}

TEST(Policy, UniformSamplingFrequencies) {
  PolicyParams p(shape5());
  Rng rng(2);
  std::vector<int> counts(5, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_token(p, std::vector<TokenId>{4}, rng))];
  EXPECT_EQ(counts[4], 0);
  for (int a = 0; a < 4; ++a) EXPECT_NEAR(counts[a] / double(n), 0.25, 0.02);
}

TEST(Policy, SameSeedSameSamples) {
  auto p = PolicyParams::random(shape5(), 3);
  Rng a(9), b(9);
  auto ta = rollout(p, vocab5(), {4}, 12, a);
  auto tb = rollout(p, vocab5(), {4}, 12, b);
  EXPECT_EQ(ta.generated(), tb.generated());
}

TEST(Rollout, LengthAndDiversity) {
  auto p = PolicyParams::random(shape5(), 4);
  Rng rng(5);
  auto one = rollout(p, vocab5(), {4}, 1, rng);
  EXPECT_EQ(one.length(), 1u);
  EXPECT_EQ(one.hidden_states().size(), 1u);
  std::set<std::vector<TokenId>> seen;
  for (int i = 0; i < 64; ++i) {
    auto t = rollout(p, vocab5(), {4}, 12, rng);
    EXPECT_EQ(t.length(), 12u);
    for (TokenId x : t.generated()) EXPECT_NE(x, 4);
    seen.insert(t.generated());
  }
  EXPECT_GT(seen.size(), 1u);
  EXPECT_THROW(rollout(p, vocab5(), {4}, 0, rng), std::invalid_argument);
}

TEST(Rollout, ReferenceCopyReproducesRollouts) {
  auto p = PolicyParams::random(shape5(), 6);
  ReferencePolicy ref(p);
  Rng a(7), b(7);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(rollout(p, vocab5(), {4}, 8, a).generated(), rollout(ref.params(), vocab5(), {4}, 8, b).generated());
  }
}

TEST(Rollout, HiddenStatesMatchRecomputation) {
  auto p = PolicyParams::random(shape5(), 8);
  Rng rng(3);
  auto t = rollout(p, vocab5(), {4, 1}, 6, rng);
  EXPECT_EQ(hidden_states(p, t.sequence()), t.hidden_states());
}

TEST(Policy, ContextWindowPadsWithBos) {
  auto s = shape5();
  const std::vector<TokenId> h{4, 1};
  EXPECT_EQ(context_window(s, h), (std::vector<TokenId>{4, 4, 4, 1}));
  const std::vector<TokenId> longer{4, 0, 1, 2, 3, 0};
  EXPECT_EQ(context_window(s, longer), (std::vector<TokenId>{1, 2, 3, 0}));
}

TEST(LogProb, UniformValueAndBosRejected) {
  PolicyParams p(shape5());
  const std::vector<TokenId> h{4};
  EXPECT_NEAR(log_prob(p, h, 2).value, -std::log(4.0), 1e-15);
  EXPECT_THROW(log_prob(p, h, 4), std::invalid_argument);
  EXPECT_THROW(log_prob(p, h, 5), std::out_of_range);
}

TEST(Gradients, MatchCentralDifferences) {
  const auto s = shape5();
  const std::vector<TokenId> h{4, 2, 0, 3, 1};
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto p = PolicyParams::random(s, seed, 0.5);
    ReferencePolicy ref(PolicyParams::random(s, seed + 100, 0.5));
    const auto x = as_vector(p);

    auto lp = log_prob(p, h, 1);
    auto lp_n = numeric_gradient([&](std::span<const double> v) { return log_prob(with_data(s, v), h, 1).value; }, x);
    EXPECT_LT(max_rel_error(lp.grad, lp_n), 1e-5);

    auto en = entropy(p, h);
    auto en_n = numeric_gradient([&](std::span<const double> v) { return entropy(with_data(s, v), h).value; }, x);
    EXPECT_LT(max_rel_error(en.grad, en_n), 1e-5);

    auto kl = kl_to_reference(p, ref, h);
    auto kl_n =
        numeric_gradient([&](std::span<const double> v) { return kl_to_reference(with_data(s, v), ref, h).value; }, x);
    EXPECT_LT(max_rel_error(kl.grad, kl_n), 1e-5);
  }
}

TEST(Gradients, ScoreFunctionHasZeroExpectation) {
  auto p = PolicyParams::random(shape5(), 11, 0.5);
  const std::vector<TokenId> h{4, 3};
  auto dist = action_distribution(p.shape(), forward_history(p, h).logits);
  std::vector<double> sum(p.size(), 0.0);
  for (TokenId a = 0; a < 4; ++a) {
    auto g = log_prob(p, h, a).grad;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += dist.prob[static_cast<std::size_t>(a)] * g[i];
  }
  for (double x : sum) EXPECT_NEAR(x, 0.0, 1e-8);
}

TEST(Entropy, UniformIsLogFourAndPointMassNearZero) {
  PolicyParams p(shape5());
  const std::vector<TokenId> h{4};
  EXPECT_NEAR(entropy(p, h).value, std::log(4.0), 1e-12);
  p.out_b()[1] = 30.0;
  EXPECT_LT(entropy(p, h).value, 0.01);
}

TEST(Kl, ZeroAtReferenceAndNonNegative) {
  const auto s = shape5();
  auto p = PolicyParams::random(s, 12);
  const std::vector<TokenId> h{4, 0};
  EXPECT_NEAR(kl_to_reference(p, ReferencePolicy(p), h).value, 0.0, 1e-15);
  for (std::uint64_t k = 0; k < 1000; ++k) {
    auto a = PolicyParams::random(s, 2 * k, 1.0);
    ReferencePolicy b(PolicyParams::random(s, 2 * k + 1, 1.0));
    ASSERT_GE(kl_to_reference(a, b, h).value, -1e-15);
  }
}

TEST(Warmup, RepeatedSequenceBecomesLikely) {
  std::vector<Sequence> corpus(8, Sequence{{4}, {0, 1, 2, 3, 0, 1, 2, 3}});
  auto res = mle_warmup(PolicyParams::random(shape5(), 1), corpus, 300);
  EXPECT_GT(res.log_likelihood.back(), res.log_likelihood.front());
  EXPECT_GE(std::exp(mean_log_likelihood(res.params, corpus)), 0.9);
}

TEST(Warmup, ZeroStepsLeavesParametersAndEmptyCorpusThrows) {
  auto p = PolicyParams::random(shape5(), 2);
  std::vector<Sequence> corpus{Sequence{{4}, {0, 1}}};
  EXPECT_EQ(mle_warmup(p, corpus, 0).params, p);
  EXPECT_THROW(mle_warmup(p, {}, 5), std::invalid_argument);
}

TEST(Checkpoint, SaveLoadRoundTrip) {
  auto p = PolicyParams::random(shape5(), 13);
  const auto path = (std::filesystem::temp_directory_path() / "tole_policy_roundtrip.json").string();
  save_policy(path, p);
  EXPECT_EQ(load_policy(path), p);
  std::filesystem::remove(path);
  EXPECT_THROW(load_policy(path), std::runtime_error);
}
