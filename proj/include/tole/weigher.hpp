#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tole/core.hpp"
#include "tole/policy.hpp"

namespace tole {

struct WeigherShape {
  std::size_t input_dim = 16;   // policy hidden size d
  std::size_t hidden_dim = 32;  // h
  std::size_t outputs = 2;      // scorer count n

  std::size_t parameter_count() const;
  bool operator==(const WeigherShape&) const = default;
};

/// Two ReLU layers and a softmax output over scorers. Flat layout:
/// layer1 h x d, b1 h, layer2 h x h, b2 h, out n x h, b3 n.
class WeigherParams {
 public:
  explicit WeigherParams(WeigherShape shape);  // all zeros
  static WeigherParams random(WeigherShape shape, std::uint64_t seed, double stddev = 0.1);

  const WeigherShape& shape() const { return shape_; }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::size_t size() const { return data_.size(); }

  std::size_t l1_offset() const { return 0; }
  std::size_t b1_offset() const { return shape_.hidden_dim * shape_.input_dim; }
  std::size_t l2_offset() const { return b1_offset() + shape_.hidden_dim; }
  std::size_t b2_offset() const { return l2_offset() + shape_.hidden_dim * shape_.hidden_dim; }
  std::size_t out_offset() const { return b2_offset() + shape_.hidden_dim; }
  std::size_t b3_offset() const { return out_offset() + shape_.outputs * shape_.hidden_dim; }

  bool operator==(const WeigherParams&) const = default;

 private:
  WeigherShape shape_;
  std::vector<double> data_;
};

struct WeigherActivation {
  std::vector<double> input, pre1, act1, pre2, act2, logits, weights;
};

WeigherActivation weigher_activation(const WeigherParams& params, std::span<const double> hidden);
/// Per-scorer weights on the simplex.
std::vector<double> weigher_forward(const WeigherParams& params, std::span<const double> hidden);

/// Dot product of simplex weights and per-scorer rewards.
double combined_reward(std::span<const double> weights, std::span<const double> rewards);

/// One (hidden state, per-scorer token rewards) pair with its share of the
/// corpus expectation.
struct WeigherSample {
  std::vector<double> hidden;
  std::vector<double> rewards;
  double weight = 1.0;
};

/// Samples for every position of every sequence; hidden states from
/// `policy`, rewards from `scorers`. Weights make the weighted sum equal
/// E_y E_{t ~ Uniform} over the corpus.
std::vector<WeigherSample> build_weigher_samples(const std::vector<Sequence>& corpus,
                                                 const Vocabulary& vocab, const PolicyParams& policy,
                                                 const ScorerList& scorers);

/// Weighted sum of W(H) . R over `samples`; adds its gradient into `grad`
/// when non-empty.
double weigher_objective(const WeigherParams& params, std::span<const WeigherSample> samples,
                         std::span<double> grad = {});

struct WeigherFit {
  WeigherParams params;
  std::vector<double> objective;  // before each step, then final
};

WeigherFit train_weigher_on_samples(WeigherParams params, std::span<const WeigherSample> samples,
                                    std::size_t steps, double lr = 1e-3);

/// Full-batch Adam ascent on the integrated reward of `corpus`. Policy and
/// scorers are read only.
WeigherFit train_weigher(WeigherParams params, const std::vector<Sequence>& corpus,
                         const Vocabulary& vocab, const PolicyParams& policy,
                         const ScorerList& scorers, std::size_t steps, double lr = 1e-3);

/// Per-token combined reward of an annotated trajectory using `hidden`
/// (one state per generated token) as weigher input.
std::vector<double> multi_attribute_reward(const Trajectory& traj,
                                           const std::vector<std::vector<double>>& hidden,
                                           const WeigherParams& params);
/// Same, with the trajectory's own recorded hidden states.
std::vector<double> multi_attribute_reward(const Trajectory& traj, const WeigherParams& params);

/// Arithmetic mean of the per-scorer rewards at each position.
std::vector<double> average_reward(const Trajectory& traj);

void save_weigher(const std::string& path, const WeigherParams& params);
WeigherParams load_weigher(const std::string& path);

}  // namespace tole
