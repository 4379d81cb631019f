#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tole/core.hpp"

namespace tole {

/// Declarative scorer definition; yields both the training scorer and the
/// exact rule used to measure correctness.
struct ScorerSpec {
  enum class Kind { lexicon, suffix };
  Kind kind = Kind::lexicon;
  std::string name;
  std::vector<TokenId> tokens;
  double gain = 4.0;        // lexicon
  std::size_t window = 1;   // suffix
  double floor = 0.05;      // suffix
};

/// Exact attribute rule on a complete generation (not the training scorer).
struct AttributeRule {
  std::string name;
  std::function<bool(std::span<const TokenId>)> holds;
};

ScorerPtr make_scorer(const ScorerSpec& spec);
/// lexicon: lexicon fraction > 0.5. suffix: last `window` tokens in the class.
AttributeRule make_rule(const ScorerSpec& spec);

struct Task {
  std::string name;
  Vocabulary vocab;
  std::vector<ScorerSpec> specs;
  ScorerList scorers;
  std::vector<AttributeRule> rules;
  std::vector<std::vector<TokenId>> prefixes;  // exploration prompts, BOS first
};

/// single_attr_lexicon | detox_like | multi_attr_2 | multi_attr_3
Task make_task(std::string_view name);

/// `base` with its scorers (and rules) replaced by `specs`.
Task with_scorers(Task base, std::vector<ScorerSpec> specs);

std::vector<std::string> task_names();

}  // namespace tole
