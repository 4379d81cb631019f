#include "tole/shaping.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "tole/random.hpp"

namespace tole {

ShapingMode parse_shaping_mode(std::string_view s) {
  if (s == "quantize_noise") return ShapingMode::quantize_noise;
  if (s == "noise_only") return ShapingMode::noise_only;
  if (s == "none") return ShapingMode::none;
  throw std::invalid_argument("unknown shaping mode '" + std::string(s) + "'");
}

std::string_view to_string(ShapingMode m) {
  switch (m) {
    case ShapingMode::quantize_noise: return "quantize_noise";
    case ShapingMode::noise_only: return "noise_only";
    case ShapingMode::none: return "none";
  }
  return "?";
}

QuantileTable compute_quantiles(std::span<const double> rewards, std::size_t q) {
  if (rewards.empty()) throw std::invalid_argument("compute_quantiles: empty reward list");
  if (q == 0) throw std::invalid_argument("compute_quantiles: q must be positive");
  std::vector<double> sorted(rewards.begin(), rewards.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  QuantileTable table;
  table.boundaries.reserve(q + 1);
  for (std::size_t k = 0; k <= q; ++k) table.boundaries.push_back(sorted[k * (n - 1) / q]);
  return table;
}

std::size_t assign_interval(const QuantileTable& table, double r) {
  if (!(r >= table.lower() && r <= table.upper())) {
    throw std::out_of_range("assign_interval: reward " + std::to_string(r) + " outside [" +
                            std::to_string(table.lower()) + ", " + std::to_string(table.upper()) + "]");
  }
  const auto& b = table.boundaries;
  auto it = std::upper_bound(b.begin(), b.end(), r);
  std::size_t i = static_cast<std::size_t>(it - b.begin()) - 1;
  return std::min(i, table.intervals() - 1);
}

double noise_reward(const QuantileTable& table, double r, const NoiseConfig& noise) {
  std::size_t i = assign_interval(table, r);
  if (noise.sigma < 0) throw std::invalid_argument("noise sigma must be non-negative");
  const double lo = table.boundaries[i];
  const double width = table.boundaries[i + 1] - lo;
  if (width == 0.0 || noise.sigma == 0.0) return r;
  Rng rng(noise.rng_seed);
  std::normal_distribution<double> gauss(0.0, noise.sigma);
  double eps = std::clamp((r - lo) / width + gauss(rng), 0.0, 1.0);
  return lo + width * eps;
}

void shape_pool(DataPool& pool, std::size_t q, const NoiseConfig& noise, ShapingMode mode) {
  if (pool.empty()) throw std::invalid_argument("shape_pool: empty pool");
  auto& entries = pool.entries();
  if (mode == ShapingMode::none) {
    for (auto& e : entries) e.shaped_reward = e.raw_reward;
    return;
  }
  auto rewards = pool.snapshot_rewards();
  QuantileTable table = compute_quantiles(rewards, mode == ShapingMode::noise_only ? 1 : q);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    NoiseConfig sub{noise.sigma, derive_seed(noise.rng_seed, {k})};
    auto& e = entries[k];
    e.shaped_reward = noise_reward(table, e.raw_reward, sub);
  }
}

std::vector<double> sentence_level_rewards(const Trajectory& traj, const AttributeScorer& scorer) {
  return std::vector<double>(traj.length(), scorer.score(traj.generated()));
}

}  // namespace tole
