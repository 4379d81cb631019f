#include "tole/core.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "tole/scorers.hpp"

namespace tole {

TokenSet::TokenSet(std::vector<TokenId> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

bool TokenSet::contains(TokenId id) const {
  return std::binary_search(ids_.begin(), ids_.end(), id);
}

Vocabulary::Vocabulary(std::vector<std::string> labels, TokenId bos,
                       std::map<std::string, TokenSet> lexicons)
    : labels_(std::move(labels)), bos_(bos), lexicons_(std::move(lexicons)) {
  if (labels_.size() < 2) {
    throw std::invalid_argument("vocabulary needs at least two tokens");
  }
  if (!contains(bos_)) {
    throw std::invalid_argument("bos id outside vocabulary");
  }
  std::set<std::string> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size()) {
    throw std::invalid_argument("vocabulary labels must be unique");
  }
  for (const auto& [name, set] : lexicons_) {
    for (TokenId id : set.ids()) {
      if (!contains(id)) {
        throw std::invalid_argument("lexicon '" + name + "' holds out-of-range id " +
                                    std::to_string(id));
      }
    }
  }
}

Vocabulary Vocabulary::with_generated_labels(std::size_t sampleable,
                                             std::map<std::string, TokenSet> lexicons) {
  std::vector<std::string> labels;
  labels.reserve(sampleable + 1);
  char buf[32];
  for (std::size_t i = 0; i < sampleable; ++i) {
    std::snprintf(buf, sizeof buf, "w%02zu", i);
    labels.emplace_back(buf);
  }
  labels.emplace_back("<bos>");
  return Vocabulary(std::move(labels), static_cast<TokenId>(sampleable), std::move(lexicons));
}

const std::string& Vocabulary::label(TokenId id) const {
  if (!contains(id)) {
    throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary");
  }
  return labels_[static_cast<std::size_t>(id)];
}

const TokenSet& Vocabulary::lexicon(const std::string& name) const {
  auto it = lexicons_.find(name);
  if (it == lexicons_.end()) {
    throw std::out_of_range("unknown lexicon '" + name + "'");
  }
  return it->second;
}

std::vector<TokenId> Vocabulary::sampleable_tokens() const {
  std::vector<TokenId> out;
  out.reserve(size() - 1);
  for (std::size_t i = 0; i < size(); ++i) {
    if (static_cast<TokenId>(i) != bos_) out.push_back(static_cast<TokenId>(i));
  }
  return out;
}

void Vocabulary::check_tokens(std::span<const TokenId> tokens) const {
  for (TokenId id : tokens) {
    if (!contains(id)) {
      throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of size " +
                              std::to_string(size()));
    }
  }
}

std::vector<TokenId> Sequence::full() const {
  std::vector<TokenId> out(prefix);
  out.insert(out.end(), generated.begin(), generated.end());
  return out;
}

void Trajectory::append(TokenId token, std::vector<double> hidden, const ScorerList& scorers) {
  if (scorers.size() != scores_.size()) {
    throw std::invalid_argument("scorer count does not match trajectory annotations");
  }
  sequence_.generated.push_back(token);
  hidden_states_.push_back(std::move(hidden));
  for (std::size_t a = 0; a < scorers.size(); ++a) {
    double next = scorers[a]->score(sequence_.generated);
    raw_rewards_[a].push_back(token_reward(next, scores_[a].back()));
    scores_[a].push_back(next);
  }
}

void Trajectory::reannotate(const ScorerList& scorers) {
  const auto& gen = sequence_.generated;
  scores_.assign(scorers.size(), {});
  raw_rewards_.assign(scorers.size(), {});
  for (std::size_t a = 0; a < scorers.size(); ++a) {
    auto& s = scores_[a];
    s.reserve(gen.size() + 1);
    for (std::size_t i = 0; i <= gen.size(); ++i) {
      s.push_back(scorers[a]->score(std::span<const TokenId>(gen.data(), i)));
    }
    auto& r = raw_rewards_[a];
    r.reserve(gen.size());
    for (std::size_t i = 0; i < gen.size(); ++i) r.push_back(token_reward(s[i + 1], s[i]));
  }
}

Trajectory new_trajectory(const Vocabulary& vocab, std::vector<TokenId> prefix,
                          const ScorerList& scorers) {
  vocab.check_tokens(prefix);
  Trajectory traj;
  traj.sequence_.prefix = std::move(prefix);
  traj.reannotate(scorers);
  return traj;
}

}  // namespace tole
