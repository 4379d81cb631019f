#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tole {

using TokenId = std::int32_t;

/// Sorted, duplicate-free set of token ids.
class TokenSet {
 public:
  TokenSet() = default;
  explicit TokenSet(std::vector<TokenId> ids);

  bool contains(TokenId id) const;
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  const std::vector<TokenId>& ids() const { return ids_; }

 private:
  std::vector<TokenId> ids_;
};

/// Dense token vocabulary. The BOS id is reserved and never sampled.
class Vocabulary {
 public:
  Vocabulary(std::vector<std::string> labels, TokenId bos,
             std::map<std::string, TokenSet> lexicons = {});

  /// Labels "w00", "w01", ... with BOS appended as the last id.
  static Vocabulary with_generated_labels(std::size_t sampleable,
                                          std::map<std::string, TokenSet> lexicons = {});

  std::size_t size() const { return labels_.size(); }
  TokenId bos() const { return bos_; }
  const std::string& label(TokenId id) const;
  bool contains(TokenId id) const { return id >= 0 && static_cast<std::size_t>(id) < size(); }
  const TokenSet& lexicon(const std::string& name) const;
  const std::map<std::string, TokenSet>& lexicons() const { return lexicons_; }
  std::vector<TokenId> sampleable_tokens() const;

  /// Throws std::out_of_range naming the first offending id.
  void check_tokens(std::span<const TokenId> tokens) const;

 private:
  std::vector<std::string> labels_;
  TokenId bos_;
  std::map<std::string, TokenSet> lexicons_;
};

struct Sequence {
  std::vector<TokenId> prefix;
  std::vector<TokenId> generated;

  /// prefix followed by generated.
  std::vector<TokenId> full() const;
};

/// Maps a (partial) generation to P(c | y<=i). Scorers look only at the
/// generated suffix, never at the prefix.
class AttributeScorer {
 public:
  virtual ~AttributeScorer() = default;
  virtual const std::string& name() const = 0;
  virtual double score(std::span<const TokenId> generated) const = 0;
};

using ScorerPtr = std::shared_ptr<const AttributeScorer>;
using ScorerList = std::vector<ScorerPtr>;

/// A prefix plus generated tokens, with per-attribute scores and token
/// rewards kept in step with the generation. Append-only.
class Trajectory {
 public:
  Trajectory() = default;

  const Sequence& sequence() const { return sequence_; }
  const std::vector<TokenId>& prefix() const { return sequence_.prefix; }
  const std::vector<TokenId>& generated() const { return sequence_.generated; }
  std::size_t length() const { return sequence_.generated.size(); }
  std::size_t attribute_count() const { return scores_.size(); }

  /// scores()[a][i] = P(c_a | y<=i), i = 0..length().
  const std::vector<std::vector<double>>& scores() const { return scores_; }
  /// raw_rewards()[a][i] = token reward of generated token i.
  const std::vector<std::vector<double>>& raw_rewards() const { return raw_rewards_; }
  /// hidden_states()[i] = policy hidden vector after consuming generated token i.
  const std::vector<std::vector<double>>& hidden_states() const { return hidden_states_; }

  /// Appends one token. `scorers` must be the set the trajectory was
  /// created or last annotated with (or empty when unannotated).
  void append(TokenId token, std::vector<double> hidden, const ScorerList& scorers = {});

  /// Rebuilds every score and reward from scratch against `scorers`.
  void reannotate(const ScorerList& scorers);

 private:
  friend Trajectory new_trajectory(const Vocabulary&, std::vector<TokenId>, const ScorerList&);

  Sequence sequence_;
  std::vector<std::vector<double>> scores_;
  std::vector<std::vector<double>> raw_rewards_;
  std::vector<std::vector<double>> hidden_states_;
};

/// Empty generation over `prefix`; with scorers attached the i = 0 score of
/// each attribute is the scorer's value on the empty generation.
Trajectory new_trajectory(const Vocabulary& vocab, std::vector<TokenId> prefix,
                          const ScorerList& scorers = {});

}  // namespace tole
