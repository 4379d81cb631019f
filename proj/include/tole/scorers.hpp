#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tole/core.hpp"

namespace tole {

double logistic(double x);

/// Token reward: logistic of the attribute-probability shift caused by one
/// token. Both inputs must lie in [0, 1].
double token_reward(double p_next, double p_prev);

/// P(c | y<=i) for the first `i` generated tokens of `traj`.
double score(const AttributeScorer& scorer, const Trajectory& traj, std::size_t i);

/// Fills every score and raw reward of `traj` from `scorers`.
void annotate(Trajectory& traj, const ScorerList& scorers);

/// logistic(gain * (2m/i - 1)) where m of the i generated tokens are in the
/// lexicon; 0.5 on the empty generation.
class LexiconScorer final : public AttributeScorer {
 public:
  LexiconScorer(std::string name, TokenSet lexicon, double gain = 4.0);

  const std::string& name() const override { return name_; }
  double score(std::span<const TokenId> generated) const override;

  const TokenSet& lexicon() const { return lexicon_; }
  double gain() const { return gain_; }
  /// Fraction of generated tokens in the lexicon (0 when empty).
  double fraction(std::span<const TokenId> generated) const;

 private:
  std::string name_;
  TokenSet lexicon_;
  double gain_;
};

/// 1 - floor when the last `window` tokens all fall in the target class,
/// floor otherwise (including generations shorter than the window).
class SuffixScorer final : public AttributeScorer {
 public:
  SuffixScorer(std::string name, TokenSet target, std::size_t window = 1, double floor = 0.05);

  const std::string& name() const override { return name_; }
  double score(std::span<const TokenId> generated) const override;
  bool satisfied(std::span<const TokenId> generated) const;

  const TokenSet& target() const { return target_; }
  std::size_t window() const { return window_; }
  double floor() const { return floor_; }

 private:
  std::string name_;
  TokenSet target_;
  std::size_t window_;
  double floor_;
};

enum class ScorerTrainingMode { whole_sequence, prefix_decomposed };

/// Logistic regression over length-normalised bag-of-token counts.
class LearnedScorer final : public AttributeScorer {
 public:
  LearnedScorer(std::string name, std::vector<double> weights, double bias,
                ScorerTrainingMode mode);

  const std::string& name() const override { return name_; }
  double score(std::span<const TokenId> generated) const override;

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  ScorerTrainingMode mode() const { return mode_; }

 private:
  std::string name_;
  std::vector<double> weights_;
  double bias_;
  ScorerTrainingMode mode_;
};

struct LabeledSequence {
  std::vector<TokenId> tokens;
  int label = 0;
};

/// One regression sample: token counts normalised by length, and a label.
struct ScorerSample {
  std::vector<double> features;
  int label = 0;
};

/// whole_sequence: one sample per sequence. prefix_decomposed: |y|+1
/// samples (y<=0, ..., y<=|y|) per sequence, all carrying its label.
std::vector<ScorerSample> build_scorer_samples(const std::vector<LabeledSequence>& corpus,
                                               std::size_t vocab_size, ScorerTrainingMode mode);

struct ScorerFitOptions {
  double learning_rate = 1.0;
  std::size_t steps = 2000;
};

struct ScorerFit {
  LearnedScorer scorer;
  std::vector<double> loss_history;  // mean log-loss before each step
  std::size_t sample_count = 0;
  bool single_class = false;  // corpus held one label only; fit is degenerate
};

/// Full-batch gradient descent on the mean logistic loss.
ScorerFit train_learned_scorer(const std::vector<LabeledSequence>& corpus, std::size_t vocab_size,
                               ScorerTrainingMode mode, const ScorerFitOptions& options = {},
                               std::string name = "learned");

}  // namespace tole
