#include "tole/task.hpp"

#include <numeric>
#include <stdexcept>

#include "tole/scorers.hpp"

namespace tole {

namespace {

constexpr std::size_t kSampleable = 20;

std::vector<TokenId> range_ids(TokenId lo, TokenId hi) {
  std::vector<TokenId> v(static_cast<std::size_t>(hi - lo));
  std::iota(v.begin(), v.end(), lo);
  return v;
}

/// Every ordered pair from `pool`, each preceded by BOS.
std::vector<std::vector<TokenId>> pair_prefixes(TokenId bos, const std::vector<TokenId>& pool) {
  std::vector<std::vector<TokenId>> out;
  for (TokenId a : pool) {
    for (TokenId b : pool) out.push_back({bos, a, b});
  }
  return out;
}

}  // namespace

ScorerPtr make_scorer(const ScorerSpec& spec) {
  switch (spec.kind) {
    case ScorerSpec::Kind::lexicon:
      return std::make_shared<LexiconScorer>(spec.name, TokenSet(spec.tokens), spec.gain);
    case ScorerSpec::Kind::suffix:
      return std::make_shared<SuffixScorer>(spec.name, TokenSet(spec.tokens), spec.window, spec.floor);
  }
  throw std::logic_error("unhandled scorer kind");
}

AttributeRule make_rule(const ScorerSpec& spec) {
  if (spec.kind == ScorerSpec::Kind::lexicon) {
    LexiconScorer lex(spec.name, TokenSet(spec.tokens), spec.gain);
    return {spec.name, [lex](std::span<const TokenId> y) { return lex.fraction(y) > 0.5; }};
  }
  SuffixScorer suf(spec.name, TokenSet(spec.tokens), spec.window, spec.floor);
  return {spec.name, [suf](std::span<const TokenId> y) { return suf.satisfied(y); }};
}

Task with_scorers(Task base, std::vector<ScorerSpec> specs) {
  if (specs.empty()) throw std::invalid_argument("a task needs at least one scorer");
  for (const auto& s : specs) base.vocab.check_tokens(s.tokens);
  base.specs = std::move(specs);
  base.scorers.clear();
  base.rules.clear();
  for (const auto& s : base.specs) {
    base.scorers.push_back(make_scorer(s));
    base.rules.push_back(make_rule(s));
  }
  return base;
}

std::vector<std::string> task_names() {
  return {"single_attr_lexicon", "detox_like", "multi_attr_2", "multi_attr_3"};
}

Task make_task(std::string_view name) {
  using Kind = ScorerSpec::Kind;
  auto positive = range_ids(0, 5);
  auto clean = range_ids(0, 8);
  auto toxic = range_ids(8, 20);
  // Sentiment and topic lexicons share {7, 8, 9}: 30% of each.
  auto sentiment = range_ids(0, 10);
  auto topic = range_ids(7, 17);
  auto filler = range_ids(17, 20);

  Vocabulary vocab = Vocabulary::with_generated_labels(
      kSampleable, {{"positive", TokenSet(positive)},
                    {"clean", TokenSet(clean)},
                    {"toxic", TokenSet(toxic)},
                    {"sentiment", TokenSet(sentiment)},
                    {"topic", TokenSet(topic)},
                    {"filler", TokenSet(filler)}});
  const TokenId bos = vocab.bos();

  Task task{std::string(name), vocab, {}, {}, {}, {}};
  std::vector<ScorerSpec> specs;
  if (name == "single_attr_lexicon") {
    specs.push_back({Kind::lexicon, "positive", positive});
    task.prefixes = pair_prefixes(bos, range_ids(10, 14));
  } else if (name == "detox_like") {
    specs.push_back({Kind::lexicon, "clean", clean});
    task.prefixes = pair_prefixes(bos, range_ids(12, 16));
  } else if (name == "multi_attr_2") {
    specs.push_back({Kind::lexicon, "sentiment", sentiment});
    specs.push_back({Kind::lexicon, "topic", topic});
    task.prefixes = pair_prefixes(bos, filler);
  } else if (name == "multi_attr_3") {
    specs.push_back({Kind::lexicon, "sentiment", sentiment});
    specs.push_back({Kind::lexicon, "topic", topic});
    specs.push_back({Kind::suffix, "tense", filler});
    task.prefixes = pair_prefixes(bos, filler);
  } else {
    throw std::invalid_argument("unknown task '" + std::string(name) + "'");
  }
  return with_scorers(std::move(task), std::move(specs));
}

}  // namespace tole
