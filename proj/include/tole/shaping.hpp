#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "tole/core.hpp"
#include "tole/pool.hpp"

namespace tole {

/// q+1 sorted boundaries splitting the reward range into q intervals.
struct QuantileTable {
  std::vector<double> boundaries;

  std::size_t intervals() const { return boundaries.size() - 1; }
  double lower() const { return boundaries.front(); }
  double upper() const { return boundaries.back(); }
};

struct NoiseConfig {
  double sigma = 0.5;
  std::uint64_t rng_seed = 0;
};

enum class ShapingMode {
  quantize_noise,  // bucket into quantile intervals, then perturb inside each
  noise_only,      // same clipped noise over the whole [min, max] range (q ignored)
  none,            // learn from raw rewards
};

ShapingMode parse_shaping_mode(std::string_view s);
std::string_view to_string(ShapingMode m);

/// Lower (type-1) empirical quantiles: b_k is the sorted reward at index
/// floor(k (n-1) / q).
QuantileTable compute_quantiles(std::span<const double> rewards, std::size_t q);

/// Index i of the half-open interval [b_i, b_{i+1}) holding r; r equal to
/// the top boundary maps to the last interval.
std::size_t assign_interval(const QuantileTable& table, double r);

/// Moves r to a random point of its own interval: with p the relative
/// position of r in the interval, returns b_i + w * clamp(p + N(0, sigma), 0, 1).
/// Zero sigma or a zero-width interval returns r unchanged.
double noise_reward(const QuantileTable& table, double r, const NoiseConfig& noise);

/// Sets shaped_reward for every live entry. Quantiles are recomputed over
/// the whole pool each call; entry k draws its noise from substream
/// (noise.rng_seed, k).
void shape_pool(DataPool& pool, std::size_t q, const NoiseConfig& noise,
                ShapingMode mode = ShapingMode::quantize_noise);

/// Sentence-level baseline: every generated position gets P(c | y).
std::vector<double> sentence_level_rewards(const Trajectory& traj, const AttributeScorer& scorer);

}  // namespace tole
