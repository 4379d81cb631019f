#pragma once

#include <cstddef>
#include <vector>

#include "tole/core.hpp"
#include "tole/policy.hpp"
#include "tole/task.hpp"

namespace tole {

/// Fraction of generations satisfying `rule`.
double correctness(const std::vector<std::vector<TokenId>>& generations, const AttributeRule& rule);

/// Distinct n-grams over total n-grams, pooled across generations.
/// Generations shorter than n contribute nothing; returns 0 with no n-grams.
double dist_n(const std::vector<std::vector<TokenId>>& generations, std::size_t n);

/// exp(mean per-token NLL of the generated tokens under `eval_model`).
double ppl_proxy(const std::vector<Sequence>& generations, const PolicyParams& eval_model);

}  // namespace tole
