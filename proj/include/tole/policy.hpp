#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tole/core.hpp"
#include "tole/random.hpp"

namespace tole {

struct PolicyShape {
  std::size_t vocab_size = 0;
  TokenId bos = 0;
  std::size_t context_window = 4;
  std::size_t embed_dim = 8;
  std::size_t hidden_dim = 16;

  std::size_t input_dim() const { return context_window * embed_dim; }
  std::size_t parameter_count() const;
  bool operator==(const PolicyShape&) const = default;
};

/// Fixed-window language model: concatenated token embeddings -> tanh
/// layer -> vocabulary logits. Parameters live in one flat vector:
///   embed     V x e
///   hidden_w  d x (k e)
///   hidden_b  d
///   out_w     V x d
///   out_b     V
class PolicyParams {
 public:
  explicit PolicyParams(PolicyShape shape);  // all zeros

  /// Gaussian(0, stddev) initialisation.
  static PolicyParams random(PolicyShape shape, std::uint64_t seed, double stddev = 0.1);

  const PolicyShape& shape() const { return shape_; }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::size_t size() const { return data_.size(); }

  std::span<const double> embed() const { return block(0, embed_size()); }
  std::span<const double> hidden_w() const { return block(embed_size(), hidden_w_size()); }
  std::span<const double> hidden_b() const { return block(hidden_b_offset(), shape_.hidden_dim); }
  std::span<const double> out_w() const { return block(out_w_offset(), out_w_size()); }
  std::span<const double> out_b() const { return block(out_b_offset(), shape_.vocab_size); }
  std::span<double> out_b() { return {data_.data() + out_b_offset(), shape_.vocab_size}; }

  std::size_t embed_size() const { return shape_.vocab_size * shape_.embed_dim; }
  std::size_t hidden_w_size() const { return shape_.hidden_dim * shape_.input_dim(); }
  std::size_t hidden_b_offset() const { return embed_size() + hidden_w_size(); }
  std::size_t out_w_offset() const { return hidden_b_offset() + shape_.hidden_dim; }
  std::size_t out_w_size() const { return shape_.vocab_size * shape_.hidden_dim; }
  std::size_t out_b_offset() const { return out_w_offset() + out_w_size(); }

  bool operator==(const PolicyParams&) const = default;

 private:
  std::span<const double> block(std::size_t off, std::size_t n) const { return {data_.data() + off, n}; }

  PolicyShape shape_;
  std::vector<double> data_;
};

/// Frozen copy of the initial policy; the KL anchor.
class ReferencePolicy {
 public:
  explicit ReferencePolicy(PolicyParams params) : params_(std::move(params)) {}
  const PolicyParams& params() const { return params_; }

 private:
  PolicyParams params_;
};

/// Intermediate values of one forward pass, kept for the backward pass.
struct Activation {
  std::vector<TokenId> window;
  std::vector<double> input;   // concatenated embeddings, k e
  std::vector<double> hidden;  // d
  std::vector<double> logits;  // V
};

/// Distribution over the sampleable tokens (BOS masked: prob 0, log -inf).
struct ActionDistribution {
  std::vector<double> prob;
  std::vector<double> log_prob;
};

/// Last k tokens of `history`, left-padded with BOS.
std::vector<TokenId> context_window(const PolicyShape& shape, std::span<const TokenId> history);

/// `window` must hold exactly k tokens.
Activation forward(const PolicyParams& params, std::span<const TokenId> window);
Activation forward_history(const PolicyParams& params, std::span<const TokenId> history);

/// Plain softmax over all V logits.
std::vector<double> softmax(std::span<const double> logits);
ActionDistribution action_distribution(const PolicyShape& shape, std::span<const double> logits);

/// Accumulates d(objective)/d(params) into `grad` given d(objective)/d(logits).
void backward(const PolicyParams& params, const Activation& act, std::span<const double> dlogits,
              std::span<double> grad);

// Logit-space gradients; each adds scale * d(quantity)/d(logits) to `dlogits`.
void add_log_prob_logit_grad(const ActionDistribution& dist, TokenId action, double scale,
                             std::span<double> dlogits);
/// Returns the entropy.
double add_entropy_logit_grad(const ActionDistribution& dist, double scale, std::span<double> dlogits);
/// Returns KL(dist || ref).
double add_kl_logit_grad(const ActionDistribution& dist, const ActionDistribution& ref, double scale,
                         std::span<double> dlogits);

double entropy_of(const ActionDistribution& dist);
double kl_of(const ActionDistribution& dist, const ActionDistribution& ref);

struct ValueGrad {
  double value = 0;
  std::vector<double> grad;
};

/// log pi(action | history) and its gradient. action must not be BOS.
ValueGrad log_prob(const PolicyParams& params, std::span<const TokenId> history, TokenId action);
/// Shannon entropy of pi(. | history) over sampleable tokens and its gradient.
ValueGrad entropy(const PolicyParams& params, std::span<const TokenId> history);
/// KL(pi_theta || pi_ref) at `history`; gradient w.r.t. theta only.
ValueGrad kl_to_reference(const PolicyParams& params, const ReferencePolicy& ref,
                          std::span<const TokenId> history);

TokenId sample_from(const ActionDistribution& dist, Rng& rng);
TokenId sample_token(const PolicyParams& params, std::span<const TokenId> history, Rng& rng);

/// Generates exactly `length` tokens after `prefix`, recording one hidden
/// state per generated token (the state after consuming it).
Trajectory rollout(const PolicyParams& params, const Vocabulary& vocab, std::vector<TokenId> prefix,
                   std::size_t length, Rng& rng, const ScorerList& scorers = {});

/// Hidden states of `params` for each generated token of `seq`, matching
/// the rollout convention.
std::vector<std::vector<double>> hidden_states(const PolicyParams& params, const Sequence& seq);

/// Mean per-token log-likelihood of the generated parts of `corpus`.
double mean_log_likelihood(const PolicyParams& params, const std::vector<Sequence>& corpus);

struct WarmupResult {
  PolicyParams params;
  std::vector<double> log_likelihood;  // before each step, then final
};

/// Maximum-likelihood fine-tuning with full-batch Adam.
WarmupResult mle_warmup(PolicyParams params, const std::vector<Sequence>& corpus, std::size_t steps,
                        double lr = 1e-2);

void save_policy(const std::string& path, const PolicyParams& params);
PolicyParams load_policy(const std::string& path);

}  // namespace tole
