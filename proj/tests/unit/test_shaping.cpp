#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "tole/random.hpp"
#include "tole/scorers.hpp"
#include "tole/shaping.hpp"

using namespace tole;

namespace {

const std::vector<double> kSix{0.1, 0.2, 0.4, 0.6, 0.8, 1.0};

// Brute-force reference: the k-th boundary is the element at sorted index floor(k(n-1)/q).
std::vector<double> reference_quantiles(std::vector<double> r, std::size_t q) {
  std::sort(r.begin(), r.end());
  std::vector<double> b;
  for (std::size_t k = 0; k <= q; ++k) b.push_back(r[(k * (r.size() - 1)) / q]);
  return b;
}

void fill_random(DataPool& pool, std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) pool.push({0}, 1, u(rng));
}

}  // namespace

TEST(Quantiles, SixValueExample) {
  EXPECT_EQ(compute_quantiles(kSix, 5).boundaries, kSix);
  auto t2 = compute_quantiles(kSix, 2);
  EXPECT_EQ(t2.boundaries, (std::vector<double>{0.1, 0.4, 1.0}));
}

TEST(Quantiles, SingleIntervalIsMinMax) {
  std::vector<double> r{0.7, 0.2, 0.9};
  EXPECT_EQ(compute_quantiles(r, 1).boundaries, (std::vector<double>{0.2, 0.9}));
}

TEST(Quantiles, ConstantRewardsCollapseAllBoundaries) {
  std::vector<double> r(10, 0.3);
  auto t = compute_quantiles(r, 4);
  EXPECT_EQ(t.boundaries, std::vector<double>(5, 0.3));
  EXPECT_DOUBLE_EQ(noise_reward(t, 0.3, {1.0, 7}), 0.3);
}

TEST(Quantiles, InvalidInputsThrow) {
  EXPECT_THROW(compute_quantiles({}, 5), std::invalid_argument);
  EXPECT_THROW(compute_quantiles(kSix, 0), std::invalid_argument);
}

TEST(Quantiles, MatchBruteForceOnRandomInputs) {
  Rng rng(21);
  std::uniform_int_distribution<std::size_t> n_dist(1, 60), q_dist(1, 9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> r(n_dist(rng));
    for (double& x : r) x = u(rng);
    const std::size_t q = q_dist(rng);
    auto t = compute_quantiles(r, q);
    EXPECT_EQ(t.boundaries, reference_quantiles(r, q));
    EXPECT_TRUE(std::is_sorted(t.boundaries.begin(), t.boundaries.end()));
  }
}

TEST(AssignInterval, HalfOpenWithTopClosed) {
  auto t = compute_quantiles(kSix, 5);
  EXPECT_EQ(assign_interval(t, 0.1), 0u);
  EXPECT_EQ(assign_interval(t, 0.2), 1u);
  EXPECT_EQ(assign_interval(t, 0.5), 2u);
  EXPECT_EQ(assign_interval(t, 1.0), 4u);
  EXPECT_THROW(assign_interval(t, 1.01), std::out_of_range);
  EXPECT_THROW(assign_interval(t, 0.0), std::out_of_range);
}

TEST(NoiseReward, IdentityCases) {
  auto t = compute_quantiles(kSix, 5);
  EXPECT_DOUBLE_EQ(noise_reward(t, 0.5, {0.0, 3}), 0.5);
  EXPECT_THROW(noise_reward(t, 0.5, {-1.0, 3}), std::invalid_argument);
}

TEST(NoiseReward, ClippedNoiseStaysInsideItsInterval) {
  auto t = compute_quantiles(kSix, 5);
  Rng rng(9);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int i = 0; i < 100000; ++i) {
    const double r = u(rng);
    const std::size_t k = assign_interval(t, r);
    const double s = noise_reward(t, r, {10.0, static_cast<std::uint64_t>(i)});
    ASSERT_GE(s, t.boundaries[k]);
    ASSERT_LE(s, t.boundaries[k + 1]);
  }
}

TEST(NoiseReward, DeterministicPerSeed) {
  auto t = compute_quantiles(kSix, 5);
  EXPECT_EQ(noise_reward(t, 0.5, {0.5, 4}), noise_reward(t, 0.5, {0.5, 4}));
}

TEST(ShapePool, PreservesEntryOrderAndIsIdentityAtZeroSigma) {
  DataPool pool(3);
  for (double r : {0.9, 0.1, 0.5, 0.3}) pool.push({0}, 1, r);
  shape_pool(pool, 2, {0.0, 1});
  std::vector<double> shaped;
  for (const auto& e : pool.entries()) shaped.push_back(*e.shaped_reward);
  EXPECT_EQ(shaped, (std::vector<double>{0.9, 0.1, 0.5, 0.3}));
}

TEST(ShapePool, SingleIntervalSpansWholeRange) {
  DataPool pool(3);
  fill_random(pool, 4, 200);
  const auto raw = pool.snapshot_rewards();
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  shape_pool(pool, 1, {2.0, 8});
  for (const auto& e : pool.entries()) {
    EXPECT_GE(*e.shaped_reward, *lo);
    EXPECT_LE(*e.shaped_reward, *hi);
  }
}

TEST(ShapePool, NoneCopiesRawAndNoiseOnlyIgnoresQ) {
  DataPool a(3), b(3), c(3), d(3);
  for (DataPool* p : {&a, &b, &c, &d}) fill_random(*p, 5, 100);
  shape_pool(a, 5, {0.5, 2}, ShapingMode::none);
  for (const auto& e : a.entries()) EXPECT_EQ(*e.shaped_reward, e.raw_reward);

  shape_pool(b, 5, {0.5, 2}, ShapingMode::noise_only);
  shape_pool(c, 2, {0.5, 2}, ShapingMode::noise_only);
  shape_pool(d, 1, {0.5, 2}, ShapingMode::quantize_noise);
  for (std::size_t k = 0; k < b.size(); ++k) {
    EXPECT_EQ(*b.entries()[k].shaped_reward, *c.entries()[k].shaped_reward);
    EXPECT_EQ(*b.entries()[k].shaped_reward, *d.entries()[k].shaped_reward);
  }
  EXPECT_EQ(parse_shaping_mode(to_string(ShapingMode::noise_only)), ShapingMode::noise_only);
  EXPECT_THROW(parse_shaping_mode("jitter"), std::invalid_argument);
}

TEST(ShapePool, EmptyPoolThrows) {
  DataPool pool(3);
  EXPECT_THROW(shape_pool(pool, 5, {0.5, 1}), std::invalid_argument);
}

TEST(ShapePool, ContainmentAndIntervalMonotonicityOnRandomPools) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    DataPool pool(3);
    fill_random(pool, 100 + seed, 300);
    const auto raw = pool.snapshot_rewards();
    auto table = compute_quantiles(raw, 5);
    shape_pool(pool, 5, {1.0, seed});
    for (const auto& a : pool.entries()) {
      const std::size_t ia = assign_interval(table, a.raw_reward);
      ASSERT_GE(*a.shaped_reward, table.boundaries[ia]);
      ASSERT_LE(*a.shaped_reward, table.boundaries[ia + 1]);
    }
    // An entry in a strictly higher interval never receives a smaller shaped reward.
    for (const auto& a : pool.entries()) {
      for (const auto& b : pool.entries()) {
        if (assign_interval(table, a.raw_reward) < assign_interval(table, b.raw_reward)) {
          ASSERT_LE(*a.shaped_reward, *b.shaped_reward);
        }
      }
    }
  }
}

TEST(SentenceLevel, BroadcastsFinalScore) {
  auto v = Vocabulary::with_generated_labels(4);
  LexiconScorer s("pos", TokenSet({0}));
  auto t = new_trajectory(v, {v.bos()});
  for (TokenId x : {0, 2, 0}) t.append(x, {});
  auto r = sentence_level_rewards(t, s);
  ASSERT_EQ(r.size(), 3u);
  for (double x : r) EXPECT_DOUBLE_EQ(x, s.score(t.generated()));
}
