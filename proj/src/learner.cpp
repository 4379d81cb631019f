#include "tole/learner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "tole/metrics.hpp"
#include "tole/random.hpp"

namespace tole {

namespace {

// RNG substream tags; every random draw in a run derives from (seed, tag, ...).
enum Stream : std::uint64_t {
  kInit = 1,
  kWarmupCorpus,
  kWeigherCorpus,
  kWeigherInit,
  kRollout,
  kShape,
  kShuffle,
  kEval,
};

}  // namespace

Feedback parse_feedback(std::string_view s) {
  if (s == "token") return Feedback::token;
  if (s == "sentence") return Feedback::sentence;
  throw std::invalid_argument("unknown feedback '" + std::string(s) + "'");
}

std::string_view to_string(Feedback f) { return f == Feedback::token ? "token" : "sentence"; }

Combine parse_combine(std::string_view s) {
  if (s == "weigher") return Combine::weigher;
  if (s == "average") return Combine::average;
  throw std::invalid_argument("unknown combine mode '" + std::string(s) + "'");
}

std::string_view to_string(Combine c) { return c == Combine::weigher ? "weigher" : "average"; }

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid config: " + what); };
  if (!(alpha >= 0)) fail("alpha must be >= 0");
  if (!(beta >= 0)) fail("beta must be >= 0");
  if (!(lr > 0)) fail("lr must be > 0");
  if (rollouts_per_episode == 0) fail("rollouts_per_episode must be >= 1");
  if (max_length == 0) fail("T must be >= 1");
  if (q == 0) fail("q must be >= 1");
  if (!(sigma >= 0)) fail("sigma must be >= 0");
  if (lifetime < 1) fail("L must be >= 1");
  if (minibatch == 0) fail("minibatch must be >= 1");
  if (eval_rollouts == 0) fail("eval_rollouts must be >= 1");
  if (!(init_stddev >= 0)) fail("init_stddev must be >= 0");
  if (!(weigher_lr > 0)) fail("weigher_lr must be > 0");
  if (weigher_hidden == 0) fail("weigher_hidden must be >= 1");
}

std::vector<double> accumulate_gradient(const PolicyParams& params, const ReferencePolicy& ref,
                                        std::span<const PoolEntry* const> batch, double alpha,
                                        double beta) {
  std::vector<double> grad(params.size(), 0.0);
  if (batch.empty()) return grad;
  const double inv = 1.0 / static_cast<double>(batch.size());
  std::vector<double> dlogits(params.shape().vocab_size);
  for (const PoolEntry* e : batch) {
    if (!e->shaped_reward) throw std::invalid_argument("accumulate_gradient: entry has no shaped reward");
    auto act = forward_history(params, e->context);
    auto dist = action_distribution(params.shape(), act.logits);
    std::fill(dlogits.begin(), dlogits.end(), 0.0);
    add_log_prob_logit_grad(dist, e->action, *e->shaped_reward * inv, dlogits);
    if (alpha != 0.0) add_entropy_logit_grad(dist, alpha * inv, dlogits);
    if (beta != 0.0) {
      auto ref_act = forward_history(ref.params(), e->context);
      auto ref_dist = action_distribution(params.shape(), ref_act.logits);
      add_kl_logit_grad(dist, ref_dist, -beta * inv, dlogits);
    }
    backward(params, act, dlogits, grad);
  }
  return grad;
}

double batch_objective(const PolicyParams& params, const ReferencePolicy& ref,
                       std::span<const PoolEntry* const> batch, double alpha, double beta) {
  if (batch.empty()) return 0.0;
  double total = 0;
  for (const PoolEntry* e : batch) {
    if (!e->shaped_reward) throw std::invalid_argument("batch_objective: entry has no shaped reward");
    auto dist = action_distribution(params.shape(), forward_history(params, e->context).logits);
    auto ref_dist = action_distribution(params.shape(), forward_history(ref.params(), e->context).logits);
    total += *e->shaped_reward * dist.log_prob[static_cast<std::size_t>(e->action)] +
             alpha * entropy_of(dist) - beta * kl_of(dist, ref_dist);
  }
  return total / static_cast<double>(batch.size());
}

namespace {

const std::vector<TokenId>& pick_prefix(const Task& task, Rng& rng) {
  if (task.prefixes.empty()) throw std::invalid_argument("task has no exploration prefixes");
  std::uniform_int_distribution<std::size_t> pick(0, task.prefixes.size() - 1);
  return task.prefixes[pick(rng)];
}

PolicyShape shape_for(const Task& task) {
  return PolicyShape{task.vocab.size(), task.vocab.bos()};
}

template <class F>
EvalReport summarise(const Task& task, const std::vector<Sequence>& seqs, F&& ppl) {
  std::vector<std::vector<TokenId>> gens;
  gens.reserve(seqs.size());
  for (const auto& s : seqs) gens.push_back(s.generated);
  EvalReport r;
  for (const auto& rule : task.rules) r.correctness.push_back(correctness(gens, rule));
  r.mean_correctness = std::accumulate(r.correctness.begin(), r.correctness.end(), 0.0) /
                       static_cast<double>(r.correctness.size());
  r.dist1 = dist_n(gens, 1);
  r.dist2 = dist_n(gens, 2);
  r.dist3 = dist_n(gens, 3);
  r.ppl_proxy = ppl(seqs);
  return r;
}

}  // namespace

EvalReport evaluate(const Task& task, const PolicyParams& policy, const PolicyParams& eval_model,
                    std::size_t rollouts, std::size_t max_length, std::uint64_t seed) {
  std::vector<Sequence> seqs;
  seqs.reserve(rollouts);
  for (std::size_t i = 0; i < rollouts; ++i) {
    Rng rng = make_rng(seed, {i});
    seqs.push_back(rollout(policy, task.vocab, pick_prefix(task, rng), max_length, rng).sequence());
  }
  return summarise(task, seqs, [&](const std::vector<Sequence>& s) { return ppl_proxy(s, eval_model); });
}

std::vector<Sequence> rejection_sample(const Task& task, const PolicyParams& policy, std::size_t count,
                                       std::size_t max_length, std::uint64_t seed, bool any_rule) {
  std::vector<Sequence> out;
  const std::size_t budget = 200 * count;
  for (std::size_t i = 0; i < budget && out.size() < count; ++i) {
    Rng rng = make_rng(seed, {i});
    Trajectory t = rollout(policy, task.vocab, pick_prefix(task, rng), max_length, rng);
    std::size_t hits = 0;
    for (const auto& rule : task.rules) hits += rule.holds(t.generated()) ? 1 : 0;
    if (any_rule ? hits > 0 : hits == task.rules.size()) out.push_back(t.sequence());
  }
  return out;
}

PolicyParams make_initial_policy(const Task& task, const TrainConfig& config) {
  config.validate();
  PolicyParams p = PolicyParams::random(shape_for(task), derive_seed(config.seed, {kInit}), config.init_stddev);
  if (config.warmup_steps > 0) {
    auto corpus = rejection_sample(task, p, config.warmup_corpus, config.max_length,
                                   derive_seed(config.seed, {kWarmupCorpus}), true);
    if (!corpus.empty()) p = mle_warmup(std::move(p), corpus, config.warmup_steps).params;
  }
  return p;
}

WeigherFit fit_weigher(const Task& task, const PolicyParams& reference, const TrainConfig& config) {
  auto corpus = rejection_sample(task, reference, config.weigher_corpus, config.max_length,
                                 derive_seed(config.seed, {kWeigherCorpus}));
  if (corpus.empty()) throw std::runtime_error("weigher corpus: no reference rollout satisfies every attribute");
  WeigherShape ws{reference.shape().hidden_dim, config.weigher_hidden, task.scorers.size()};
  return train_weigher(WeigherParams::random(ws, derive_seed(config.seed, {kWeigherInit})), corpus, task.vocab,
                       reference, task.scorers, config.weigher_steps, config.weigher_lr);
}

namespace {

PolicyParams initial_policy(const Task& task, const TrainConfig& config, std::optional<PolicyParams> init) {
  config.validate();
  if (!init) return make_initial_policy(task, config);
  const PolicyShape want = shape_for(task);
  if (init->shape().vocab_size != want.vocab_size || init->shape().bos != want.bos) {
    throw std::invalid_argument("initial policy does not match the task vocabulary");
  }
  return std::move(*init);
}

}  // namespace

Learner::Learner(Task task, TrainConfig config, std::optional<PolicyParams> init,
                 std::optional<WeigherParams> weigher)
    : task_(std::move(task)),
      config_(config),
      policy_(initial_policy(task_, config_, std::move(init))),
      reference_(policy_),
      weigher_(std::move(weigher)),
      pool_(config_.lifetime),
      optimizer_(config_.optimizer, config_.lr, policy_.size()) {
  const std::size_t n = task_.scorers.size();
  if (n > 1 && config_.combine == Combine::weigher && !weigher_) {
    auto fit = fit_weigher(task_, reference_.params(), config_);
    weigher_ = std::move(fit.params);
    weigher_history_ = std::move(fit.objective);
  }
  if (weigher_ && weigher_->shape().outputs != n) {
    throw std::invalid_argument("weigher output count does not match the task's scorers");
  }
}

std::vector<double> Learner::token_rewards(const Trajectory& traj) const {
  const std::size_t n = traj.attribute_count();
  const std::size_t len = traj.length();
  std::vector<std::vector<double>> per_attr(n);
  for (std::size_t a = 0; a < n; ++a) {
    per_attr[a] = config_.feedback == Feedback::token ? traj.raw_rewards()[a]
                                                      : std::vector<double>(len, traj.scores()[a].back());
  }
  if (n == 1) return per_attr[0];

  std::vector<double> out(len, 0.0);
  if (config_.combine == Combine::average || !weigher_) {
    for (std::size_t t = 0; t < len; ++t) {
      for (std::size_t a = 0; a < n; ++a) out[t] += per_attr[a][t];
      out[t] /= static_cast<double>(n);
    }
    return out;
  }
  const auto& hidden = traj.hidden_states();
  std::vector<double> r(n);
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t a = 0; a < n; ++a) r[a] = per_attr[a][t];
    out[t] = combined_reward(weigher_forward(*weigher_, hidden[t]), r);
  }
  return out;
}

EpisodeReport Learner::train_episode() {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = config_.seed;
  const auto ep = static_cast<std::uint64_t>(episode_);

  EpisodeReport rep;
  rep.episode = episode_;

  // Exploration.
  std::vector<Sequence> seqs;
  seqs.reserve(config_.rollouts_per_episode);
  double raw_sum = 0, kl_sum = 0, ent_sum = 0, nll_sum = 0;
  std::size_t tokens = 0;
  for (std::size_t r = 0; r < config_.rollouts_per_episode; ++r) {
    Rng rng = make_rng(seed, {kRollout, ep, r});
    const auto& prefix = pick_prefix(task_, rng);
    Trajectory traj = rollout(policy_, task_.vocab, prefix, config_.max_length, rng, task_.scorers);
    auto rewards = token_rewards(traj);

    std::vector<TokenId> context = prefix;
    for (std::size_t t = 0; t < traj.length(); ++t) {
      const TokenId tok = traj.generated()[t];
      auto dist = action_distribution(policy_.shape(), forward_history(policy_, context).logits);
      auto ref_dist =
          action_distribution(policy_.shape(), forward_history(reference_.params(), context).logits);
      kl_sum += kl_of(dist, ref_dist);
      ent_sum += entropy_of(dist);
      nll_sum -= ref_dist.log_prob[static_cast<std::size_t>(tok)];
      raw_sum += rewards[t];
      ++tokens;
      pool_.push(context, tok, rewards[t]);
      context.push_back(tok);
    }
    seqs.push_back(traj.sequence());
  }

  EvalReport summary = summarise(task_, seqs, [&](const std::vector<Sequence>&) {
    return std::exp(nll_sum / static_cast<double>(tokens));
  });
  rep.correctness = summary.correctness;
  rep.mean_correctness = summary.mean_correctness;
  rep.dist1 = summary.dist1;
  rep.dist2 = summary.dist2;
  rep.dist3 = summary.dist3;
  rep.ppl_proxy = summary.ppl_proxy;
  rep.mean_raw_reward = raw_sum / static_cast<double>(tokens);
  rep.mean_kl = kl_sum / static_cast<double>(tokens);
  rep.mean_entropy = ent_sum / static_cast<double>(tokens);

  // Quantize & noise over the whole live pool.
  shape_pool(pool_, config_.q, NoiseConfig{config_.sigma, derive_seed(seed, {kShape, ep})}, config_.shaping);
  const auto& entries = pool_.entries();
  double shaped_sum = 0;
  for (const auto& e : entries) shaped_sum += *e.shaped_reward;
  rep.mean_shaped_reward = shaped_sum / static_cast<double>(entries.size());
  rep.pool_size = entries.size();

  // Learning: shuffled minibatches over every live entry.
  std::vector<const PoolEntry*> order;
  order.reserve(entries.size());
  for (const auto& e : entries) order.push_back(&e);
  Rng shuffle_rng = make_rng(seed, {kShuffle, ep});
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  for (std::size_t off = 0; off < order.size(); off += config_.minibatch) {
    const std::size_t n = std::min(config_.minibatch, order.size() - off);
    auto grad = accumulate_gradient(policy_, reference_, std::span(order).subspan(off, n), config_.alpha,
                                    config_.beta);
    optimizer_.step(policy_.data(), grad);
  }

  rep.evictions = pool_.tick();
  ++episode_;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

TrainResult train(const Task& task, const TrainConfig& config, std::optional<PolicyParams> init,
                  std::optional<WeigherParams> weigher, const EpisodeCallback& on_episode) {
  Learner learner(task, config, std::move(init), std::move(weigher));
  TrainResult result{{}, learner.policy(), learner.reference().params(), learner.weigher(),
                     learner.weigher_objective_history(), {}};
  result.reports.reserve(config.episodes);
  for (std::size_t e = 0; e < config.episodes; ++e) {
    result.reports.push_back(learner.train_episode());
    if (on_episode) on_episode(learner, result.reports.back());
  }
  result.policy = learner.policy();
  result.final_eval = evaluate(task, learner.policy(), learner.reference().params(), config.eval_rollouts,
                               config.max_length, derive_seed(config.seed, {kEval}));
  return result;
}

}  // namespace tole
