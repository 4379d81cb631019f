#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tole/optim.hpp"
#include "tole/policy.hpp"
#include "tole/pool.hpp"
#include "tole/shaping.hpp"
#include "tole/task.hpp"
#include "tole/weigher.hpp"

namespace tole {

enum class Feedback { token, sentence };
enum class Combine { weigher, average };

Feedback parse_feedback(std::string_view s);
std::string_view to_string(Feedback f);
Combine parse_combine(std::string_view s);
std::string_view to_string(Combine c);

struct TrainConfig {
  double alpha = 0.01;  // entropy bonus
  double beta = 0.01;   // KL penalty
  double lr = 1e-2;
  std::size_t episodes = 200;
  std::size_t rollouts_per_episode = 64;
  std::size_t max_length = 12;  // T
  std::size_t q = 5;
  double sigma = 0.5;
  int lifetime = 3;  // L
  Feedback feedback = Feedback::token;
  ShapingMode shaping = ShapingMode::quantize_noise;
  Combine combine = Combine::weigher;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::size_t minibatch = 256;
  std::uint64_t seed = 1;
  std::size_t eval_rollouts = 256;
  // Policy initialisation and warm-up.
  double init_stddev = 0.1;
  std::size_t warmup_steps = 0;
  std::size_t warmup_corpus = 256;
  // Weigher (multi-attribute tasks with combine = weigher).
  std::size_t weigher_steps = 300;
  double weigher_lr = 1e-3;
  std::size_t weigher_corpus = 256;
  std::size_t weigher_hidden = 32;

  /// Throws std::invalid_argument on an out-of-range field.
  void validate() const;
};

struct EpisodeReport {
  std::size_t episode = 0;
  double mean_raw_reward = 0;
  double mean_shaped_reward = 0;
  std::vector<double> correctness;  // per attribute
  double mean_correctness = 0;
  double dist1 = 0, dist2 = 0, dist3 = 0;
  double ppl_proxy = 0;
  double mean_kl = 0;
  double mean_entropy = 0;
  std::size_t pool_size = 0;  // live entries trained on this episode
  std::size_t evictions = 0;
  double wall_seconds = 0;
};

/// Batch gradient of mean[ r_hat * grad log pi + alpha * grad H - beta * grad KL ],
/// an ascent direction. Every entry must carry a shaped reward.
std::vector<double> accumulate_gradient(const PolicyParams& params, const ReferencePolicy& ref,
                                        std::span<const PoolEntry* const> batch, double alpha,
                                        double beta);

/// The matching objective mean[ r_hat * log pi + alpha * H - beta * KL ].
double batch_objective(const PolicyParams& params, const ReferencePolicy& ref,
                       std::span<const PoolEntry* const> batch, double alpha, double beta);

struct EvalReport {
  std::vector<double> correctness;
  double mean_correctness = 0;
  double dist1 = 0, dist2 = 0, dist3 = 0;
  double ppl_proxy = 0;
};

/// Fresh rollouts from `policy`; perplexity measured under `eval_model`.
EvalReport evaluate(const Task& task, const PolicyParams& policy, const PolicyParams& eval_model,
                    std::size_t rollouts, std::size_t max_length, std::uint64_t seed);

/// Rejection-samples up to `count` generations of `policy` satisfying
/// every rule of `task` (`any_rule`: at least one). Gives up after
/// 200 * count attempts and returns what it found.
std::vector<Sequence> rejection_sample(const Task& task, const PolicyParams& policy, std::size_t count,
                                       std::size_t max_length, std::uint64_t seed, bool any_rule = false);

/// Random initialisation from (seed, init stream), then the optional MLE
/// warm-up on an any-rule rejection sample of that policy.
PolicyParams make_initial_policy(const Task& task, const TrainConfig& config);

/// Trains a weigher on reference-policy hidden states over an all-rule
/// rejection corpus. Throws std::runtime_error when the corpus is empty.
WeigherFit fit_weigher(const Task& task, const PolicyParams& reference, const TrainConfig& config);

/// Exploration -> quantize & noise -> learning, one episode at a time.
class Learner {
 public:
  /// Initialises the policy (random, then optional warm-up), freezes the
  /// reference copy and, for multi-attribute weigher runs, trains the
  /// weigher unless one is supplied.
  Learner(Task task, TrainConfig config, std::optional<PolicyParams> init = std::nullopt,
          std::optional<WeigherParams> weigher = std::nullopt);

  EpisodeReport train_episode();

  const Task& task() const { return task_; }
  const TrainConfig& config() const { return config_; }
  const PolicyParams& policy() const { return policy_; }
  const ReferencePolicy& reference() const { return reference_; }
  const DataPool& pool() const { return pool_; }
  const std::optional<WeigherParams>& weigher() const { return weigher_; }
  const std::vector<double>& weigher_objective_history() const { return weigher_history_; }
  std::size_t episodes_done() const { return episode_; }

  /// Per-token training rewards for one annotated rollout.
  std::vector<double> token_rewards(const Trajectory& traj) const;

 private:
  Task task_;
  TrainConfig config_;
  PolicyParams policy_;
  ReferencePolicy reference_;
  std::optional<WeigherParams> weigher_;
  std::vector<double> weigher_history_;
  DataPool pool_;
  Optimizer optimizer_;
  std::size_t episode_ = 0;
};

struct TrainResult {
  std::vector<EpisodeReport> reports;
  PolicyParams policy;
  PolicyParams reference;
  std::optional<WeigherParams> weigher;
  std::vector<double> weigher_objective;
  EvalReport final_eval;
};

using EpisodeCallback = std::function<void(const Learner&, const EpisodeReport&)>;

/// Runs config.episodes episodes, then a fresh evaluation of the final
/// policy. `on_episode` sees every report as it is produced.
TrainResult train(const Task& task, const TrainConfig& config, std::optional<PolicyParams> init = std::nullopt,
                  std::optional<WeigherParams> weigher = std::nullopt, const EpisodeCallback& on_episode = {});

}  // namespace tole
