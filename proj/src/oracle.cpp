#include "tole/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "tole/random.hpp"
#include "tole/shaping.hpp"
#include "tole/weigher.hpp"

namespace tole::oracle {

namespace {

std::uint64_t hash_tokens(std::uint64_t seed, std::span<const TokenId> tokens) {
  std::uint64_t h = derive_seed(seed, {tokens.size()});
  for (TokenId t : tokens) h = derive_seed(h, {static_cast<std::uint64_t>(t)});
  return h;
}

}  // namespace

EnumerableTask uniform_task(std::size_t num_actions, std::size_t horizon,
                            std::function<bool(std::span<const TokenId>)> predicate) {
  EnumerableTask task;
  task.num_actions = num_actions;
  task.horizon = horizon;
  task.next_token = [num_actions](std::span<const TokenId>) {
    return std::vector<double>(num_actions, 1.0 / static_cast<double>(num_actions));
  };
  task.predicate = std::move(predicate);
  return task;
}

EnumerableTask random_task(std::size_t num_actions, std::size_t horizon, std::uint64_t seed) {
  EnumerableTask task;
  task.num_actions = num_actions;
  task.horizon = horizon;
  task.next_token = [num_actions, seed](std::span<const TokenId> prefix) {
    Rng rng(hash_tokens(seed, prefix));
    std::normal_distribution<double> gauss(0.0, 1.5);
    std::vector<double> w(num_actions);
    double z = 0;
    for (double& x : w) z += (x = std::exp(gauss(rng)));
    for (double& x : w) x /= z;
    return w;
  };
  const std::uint64_t pred_seed = derive_seed(seed, {0x5eed});
  task.predicate = [pred_seed](std::span<const TokenId> y) { return hash_tokens(pred_seed, y) % 3 != 0; };
  return task;
}

EnumerableTask network_task(const PolicyParams& params, std::size_t horizon,
                            std::function<bool(std::span<const TokenId>)> predicate) {
  const auto& shape = params.shape();
  std::vector<TokenId> tokens;
  for (std::size_t v = 0; v < shape.vocab_size; ++v) {
    if (static_cast<TokenId>(v) != shape.bos) tokens.push_back(static_cast<TokenId>(v));
  }
  EnumerableTask task;
  task.num_actions = tokens.size();
  task.horizon = horizon;
  task.next_token = [params, tokens](std::span<const TokenId> prefix) {
    std::vector<TokenId> history{params.shape().bos};
    for (TokenId a : prefix) history.push_back(tokens[static_cast<std::size_t>(a)]);
    auto act = forward_history(params, history);
    auto dist = action_distribution(params.shape(), act.logits);
    std::vector<double> out;
    out.reserve(tokens.size());
    for (TokenId t : tokens) out.push_back(dist.prob[static_cast<std::size_t>(t)]);
    return out;
  };
  task.predicate = std::move(predicate);
  return task;
}

double exact_attr_posterior(const EnumerableTask& task, std::span<const TokenId> prefix) {
  if (prefix.size() > task.horizon) throw std::out_of_range("exact_attr_posterior: prefix exceeds horizon");
  if (prefix.size() == task.horizon) return task.predicate(prefix) ? 1.0 : 0.0;
  auto p = task.next_token(prefix);
  std::vector<TokenId> longer(prefix.begin(), prefix.end());
  longer.push_back(0);
  double total = 0;
  for (std::size_t a = 0; a < task.num_actions; ++a) {
    if (p[a] == 0.0) continue;
    longer.back() = static_cast<TokenId>(a);
    total += p[a] * exact_attr_posterior(task, longer);
  }
  return total;
}

BayesIdentityReport check_bayes_identity(const EnumerableTask& task) {
  const std::size_t V = task.num_actions;
  const std::size_t T = task.horizon;

  // Joint mass of finished sequences satisfying c^, summed under every prefix.
  std::map<std::vector<TokenId>, double> satisfied_mass;
  std::size_t total = 1;
  for (std::size_t t = 0; t < T; ++t) total *= V;
  std::vector<TokenId> seq(T);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (std::size_t t = T; t-- > 0;) {
      seq[t] = static_cast<TokenId>(rest % V);
      rest /= V;
    }
    double joint = 1.0;
    for (std::size_t t = 0; t < T; ++t) {
      joint *= task.next_token(std::span<const TokenId>(seq.data(), t))[static_cast<std::size_t>(seq[t])];
    }
    const double mass = task.predicate(seq) ? joint : 0.0;
    for (std::size_t len = 0; len <= T; ++len) {
      satisfied_mass[std::vector<TokenId>(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(len))] += mass;
    }
  }

  BayesIdentityReport report;
  for (const auto& [prefix, mass] : satisfied_mass) {
    if (prefix.size() == T) continue;
    if (mass == 0.0) {
      ++report.skipped;
      continue;
    }
    const double post_prev = exact_attr_posterior(task, prefix);
    if (post_prev == 0.0) {
      ++report.skipped;
      continue;
    }
    const auto p_next = task.next_token(prefix);
    std::vector<double> direct(V), shifted(V);
    std::vector<TokenId> longer = prefix;
    longer.push_back(0);
    double norm = 0;
    for (std::size_t a = 0; a < V; ++a) {
      longer.back() = static_cast<TokenId>(a);
      auto it = satisfied_mass.find(longer);
      direct[a] = (it == satisfied_mass.end() ? 0.0 : it->second) / mass;
      shifted[a] = exact_attr_posterior(task, longer) / post_prev * p_next[a];
      norm += shifted[a];
    }
    for (std::size_t a = 0; a < V; ++a) {
      report.max_deviation = std::max(report.max_deviation, std::abs(direct[a] - shifted[a] / norm));
      ++report.checked;
    }
  }
  return report;
}

std::vector<double> brute_force_quantiles(std::span<const double> rewards, std::size_t q) {
  if (rewards.empty()) throw std::invalid_argument("brute_force_quantiles: empty input");
  if (q == 0) throw std::invalid_argument("brute_force_quantiles: q must be positive");
  const std::size_t n = rewards.size();
  // The rank-j order statistic is the value v with #{x < v} <= j < #{x <= v}.
  auto order_statistic = [&](std::size_t j) {
    for (double v : rewards) {
      std::size_t below = 0, at_most = 0;
      for (double x : rewards) {
        below += x < v ? 1 : 0;
        at_most += x <= v ? 1 : 0;
      }
      if (below <= j && j < at_most) return v;
    }
    throw std::logic_error("order statistic not found");
  };
  std::vector<double> out;
  for (std::size_t k = 0; k <= q; ++k) {
    const auto j = static_cast<std::size_t>(std::floor(static_cast<long double>(k) * (n - 1) / q));
    out.push_back(order_statistic(j));
  }
  return out;
}

std::vector<double> finite_difference(const Objective& objective, std::span<const double> params,
                                      double h) {
  std::vector<double> x(params.begin(), params.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = objective(x);
    x[i] = saved - h;
    const double down = objective(x);
    x[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw std::domain_error("finite_difference: objective is not finite at coordinate " + std::to_string(i));
    }
    grad[i] = (up - down) / (2 * h);
  }
  return grad;
}

GradientComparison compare_gradients(std::span<const double> analytic, std::span<const double> numeric,
                                     double rel_tol, double abs_floor) {
  if (analytic.size() != numeric.size()) throw std::invalid_argument("compare_gradients: size mismatch");
  GradientComparison cmp;
  const double floor = abs_floor / rel_tol;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    const double err = std::abs(analytic[i] - numeric[i]) / denom;
    if (err > cmp.max_relative_error) {
      cmp.max_relative_error = err;
      cmp.worst_index = i;
    }
  }
  cmp.passed = cmp.max_relative_error <= rel_tol;
  return cmp;
}

namespace {

PolicyParams with_data(const PolicyParams& like, std::span<const double> data) {
  PolicyParams p(like.shape());
  std::copy(data.begin(), data.end(), p.data().begin());
  return p;
}

}  // namespace

std::vector<CheckResult> run_oracle_suite(const SuiteOptions& options) {
  std::vector<CheckResult> results;

  {
    BayesIdentityReport worst;
    std::size_t checked = 0;
    for (std::size_t i = 0; i < options.bayes_tasks; ++i) {
      auto r = check_bayes_identity(random_task(options.bayes_actions, options.bayes_horizon,
                                                derive_seed(options.seed, {1, i})));
      worst.max_deviation = std::max(worst.max_deviation, r.max_deviation);
      checked += r.checked;
    }
    results.push_back({"bayes_factorization_identity", worst.max_deviation, 1e-10,
                       worst.max_deviation <= 1e-10,
                       std::to_string(options.bayes_tasks) + " tasks, " + std::to_string(checked) + " (prefix, token) pairs"});
  }

  {
    std::size_t mismatches = 0;
    for (std::size_t c = 0; c < options.quantile_cases; ++c) {
      Rng rng = make_rng(options.seed, {2, c});
      std::uniform_int_distribution<std::size_t> len(1, 60), qs(1, 12), dup(0, 3);
      std::uniform_real_distribution<double> val(-1.0, 2.0);
      std::vector<double> r(len(rng));
      for (double& x : r) x = val(rng);
      // Force ties in some cases.
      if (dup(rng) == 0 && r.size() > 2) r[r.size() - 1] = r[0];
      const std::size_t q = qs(rng);
      if (compute_quantiles(r, q).boundaries != brute_force_quantiles(r, q)) ++mismatches;
    }
    results.push_back({"quantile_dual_implementation", static_cast<double>(mismatches), 0.0, mismatches == 0,
                       std::to_string(options.quantile_cases) + " random inputs"});
  }

  double worst_logp = 0, worst_ent = 0, worst_kl = 0, worst_weigher = 0;
  for (std::size_t s = 0; s < options.gradient_seeds; ++s) {
    PolicyShape shape{21, 20};
    auto params = PolicyParams::random(shape, derive_seed(options.seed, {3, s}), 0.5);
    ReferencePolicy ref(PolicyParams::random(shape, derive_seed(options.seed, {4, s}), 0.5));
    Rng rng = make_rng(options.seed, {5, s});
    std::uniform_int_distribution<TokenId> tok(0, 19);
    std::vector<TokenId> history{shape.bos};
    for (int i = 0; i < 5; ++i) history.push_back(tok(rng));
    const TokenId action = tok(rng);

    auto lp = log_prob(params, history, action);
    auto lp_fd = finite_difference(
        [&](std::span<const double> x) { return log_prob(with_data(params, x), history, action).value; },
        params.data());
    worst_logp = std::max(worst_logp, compare_gradients(lp.grad, lp_fd).max_relative_error);

    auto h = entropy(params, history);
    auto h_fd = finite_difference(
        [&](std::span<const double> x) { return entropy(with_data(params, x), history).value; }, params.data());
    worst_ent = std::max(worst_ent, compare_gradients(h.grad, h_fd).max_relative_error);

    auto kl = kl_to_reference(params, ref, history);
    auto kl_fd = finite_difference(
        [&](std::span<const double> x) { return kl_to_reference(with_data(params, x), ref, history).value; },
        params.data());
    worst_kl = std::max(worst_kl, compare_gradients(kl.grad, kl_fd).max_relative_error);

    WeigherShape ws{16, 32, 3};
    auto wp = WeigherParams::random(ws, derive_seed(options.seed, {6, s}), 0.3);
    std::vector<WeigherSample> samples(4);
    std::uniform_real_distribution<double> unit(-1.0, 1.0), reward(0.0, 1.0);
    for (auto& smp : samples) {
      smp.hidden.resize(ws.input_dim);
      for (double& x : smp.hidden) x = unit(rng);
      smp.rewards.resize(ws.outputs);
      for (double& x : smp.rewards) x = reward(rng);
      smp.weight = 0.25;
    }
    std::vector<double> wg(wp.size(), 0.0);
    weigher_objective(wp, samples, wg);
    auto wg_fd = finite_difference(
        [&](std::span<const double> x) {
          WeigherParams p(ws);
          std::copy(x.begin(), x.end(), p.data().begin());
          return weigher_objective(p, samples);
        },
        wp.data());
    worst_weigher = std::max(worst_weigher, compare_gradients(wg, wg_fd).max_relative_error);
  }
  const std::string seeds = std::to_string(options.gradient_seeds) + " seeds";
  results.push_back({"grad_log_prob_vs_fd", worst_logp, 1e-4, worst_logp <= 1e-4, seeds});
  results.push_back({"grad_entropy_vs_fd", worst_ent, 1e-4, worst_ent <= 1e-4, seeds});
  results.push_back({"grad_kl_vs_fd", worst_kl, 1e-4, worst_kl <= 1e-4, seeds});
  results.push_back({"grad_weigher_vs_fd", worst_weigher, 1e-4, worst_weigher <= 1e-4, seeds});
  return results;
}

}  // namespace tole::oracle
