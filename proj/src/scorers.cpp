#include "tole/scorers.hpp"

#include <cmath>
#include <stdexcept>

namespace tole {

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double token_reward(double p_next, double p_prev) {
  if (!(p_next >= 0.0 && p_next <= 1.0) || !(p_prev >= 0.0 && p_prev <= 1.0)) {
    throw std::domain_error("token_reward: probabilities must lie in [0, 1]");
  }
  return logistic(p_next - p_prev);
}

double score(const AttributeScorer& scorer, const Trajectory& traj, std::size_t i) {
  const auto& gen = traj.generated();
  if (i > gen.size()) {
    throw std::out_of_range("score: position " + std::to_string(i) + " beyond generation of length " +
                            std::to_string(gen.size()));
  }
  return scorer.score(std::span<const TokenId>(gen.data(), i));
}

void annotate(Trajectory& traj, const ScorerList& scorers) { traj.reannotate(scorers); }

LexiconScorer::LexiconScorer(std::string name, TokenSet lexicon, double gain)
    : name_(std::move(name)), lexicon_(std::move(lexicon)), gain_(gain) {
  if (!(gain_ > 0)) throw std::invalid_argument("lexicon gain must be positive");
}

double LexiconScorer::fraction(std::span<const TokenId> generated) const {
  if (generated.empty()) return 0.0;
  std::size_t m = 0;
  for (TokenId t : generated) m += lexicon_.contains(t) ? 1 : 0;
  return static_cast<double>(m) / static_cast<double>(generated.size());
}

double LexiconScorer::score(std::span<const TokenId> generated) const {
  if (generated.empty()) return 0.5;
  return logistic(gain_ * (2.0 * fraction(generated) - 1.0));
}

SuffixScorer::SuffixScorer(std::string name, TokenSet target, std::size_t window, double floor)
    : name_(std::move(name)), target_(std::move(target)), window_(window), floor_(floor) {
  if (window_ == 0) throw std::invalid_argument("suffix window must be positive");
  if (!(floor_ >= 0.0 && floor_ < 0.5)) throw std::invalid_argument("suffix floor must lie in [0, 0.5)");
}

bool SuffixScorer::satisfied(std::span<const TokenId> generated) const {
  if (generated.size() < window_) return false;
  for (std::size_t i = generated.size() - window_; i < generated.size(); ++i) {
    if (!target_.contains(generated[i])) return false;
  }
  return true;
}

double SuffixScorer::score(std::span<const TokenId> generated) const {
  return satisfied(generated) ? 1.0 - floor_ : floor_;
}

LearnedScorer::LearnedScorer(std::string name, std::vector<double> weights, double bias,
                             ScorerTrainingMode mode)
    : name_(std::move(name)), weights_(std::move(weights)), bias_(bias), mode_(mode) {}

namespace {

std::vector<double> bag_of_tokens(std::span<const TokenId> tokens, std::size_t vocab_size) {
  std::vector<double> x(vocab_size, 0.0);
  if (tokens.empty()) return x;
  double inv = 1.0 / static_cast<double>(tokens.size());
  for (TokenId t : tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_size) {
      throw std::out_of_range("token id " + std::to_string(t) + " outside scorer vocabulary");
    }
    x[static_cast<std::size_t>(t)] += inv;
  }
  return x;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double LearnedScorer::score(std::span<const TokenId> generated) const {
  auto x = bag_of_tokens(generated, weights_.size());
  return logistic(dot(weights_, x) + bias_);
}

std::vector<ScorerSample> build_scorer_samples(const std::vector<LabeledSequence>& corpus,
                                               std::size_t vocab_size, ScorerTrainingMode mode) {
  std::vector<ScorerSample> samples;
  for (const auto& seq : corpus) {
    if (seq.label != 0 && seq.label != 1) throw std::invalid_argument("scorer labels must be 0 or 1");
    std::span<const TokenId> toks(seq.tokens);
    if (mode == ScorerTrainingMode::whole_sequence) {
      samples.push_back({bag_of_tokens(toks, vocab_size), seq.label});
    } else {
      for (std::size_t i = 0; i <= toks.size(); ++i) {
        samples.push_back({bag_of_tokens(toks.first(i), vocab_size), seq.label});
      }
    }
  }
  return samples;
}

namespace {

double mean_log_loss(const std::vector<ScorerSample>& samples, std::span<const double> w, double b) {
  double loss = 0;
  for (const auto& s : samples) {
    double z = dot(w, s.features) + b;
    // log(1 + e^{-z}) for label 1, log(1 + e^{z}) for label 0, computed stably
    double signed_z = s.label == 1 ? -z : z;
    loss += signed_z > 0 ? signed_z + std::log1p(std::exp(-signed_z)) : std::log1p(std::exp(signed_z));
  }
  return loss / static_cast<double>(samples.size());
}

}  // namespace

ScorerFit train_learned_scorer(const std::vector<LabeledSequence>& corpus, std::size_t vocab_size,
                               ScorerTrainingMode mode, const ScorerFitOptions& options,
                               std::string name) {
  if (corpus.empty()) throw std::invalid_argument("train_learned_scorer: empty corpus");
  auto samples = build_scorer_samples(corpus, vocab_size, mode);

  bool has0 = false, has1 = false;
  for (const auto& s : samples) (s.label == 1 ? has1 : has0) = true;

  std::vector<double> w(vocab_size, 0.0);
  double b = 0.0;
  std::vector<double> history;
  history.reserve(options.steps);
  const double n = static_cast<double>(samples.size());
  std::vector<double> gw(vocab_size);
  for (std::size_t step = 0; step < options.steps; ++step) {
    history.push_back(mean_log_loss(samples, w, b));
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0;
    for (const auto& s : samples) {
      double err = logistic(dot(w, s.features) + b) - s.label;
      for (std::size_t v = 0; v < vocab_size; ++v) gw[v] += err * s.features[v];
      gb += err;
    }
    for (std::size_t v = 0; v < vocab_size; ++v) w[v] -= options.learning_rate * gw[v] / n;
    b -= options.learning_rate * gb / n;
  }

  return ScorerFit{LearnedScorer(std::move(name), std::move(w), b, mode), std::move(history),
                   samples.size(), !(has0 && has1)};
}

}  // namespace tole
