#include "tole/metrics.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace tole {

double correctness(const std::vector<std::vector<TokenId>>& generations, const AttributeRule& rule) {
  if (generations.empty()) throw std::invalid_argument("correctness: no generations");
  std::size_t ok = 0;
  for (const auto& g : generations) ok += rule.holds(g) ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(generations.size());
}

double dist_n(const std::vector<std::vector<TokenId>>& generations, std::size_t n) {
  if (n == 0) throw std::invalid_argument("dist_n: n must be at least 1");
  std::set<std::vector<TokenId>> distinct;
  std::size_t total = 0;
  for (const auto& g : generations) {
    if (g.size() < n) continue;
    for (std::size_t i = 0; i + n <= g.size(); ++i) {
      distinct.emplace(g.begin() + static_cast<std::ptrdiff_t>(i), g.begin() + static_cast<std::ptrdiff_t>(i + n));
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(distinct.size()) / static_cast<double>(total);
}

double ppl_proxy(const std::vector<Sequence>& generations, const PolicyParams& eval_model) {
  double nll = 0;
  std::size_t count = 0;
  for (const auto& s : generations) {
    std::vector<TokenId> history = s.prefix;
    for (TokenId tok : s.generated) {
      auto act = forward_history(eval_model, history);
      nll -= action_distribution(eval_model.shape(), act.logits).log_prob[static_cast<std::size_t>(tok)];
      ++count;
      history.push_back(tok);
    }
  }
  if (count == 0) throw std::invalid_argument("ppl_proxy: no generated tokens");
  return std::exp(nll / static_cast<double>(count));
}

}  // namespace tole
