#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tole/core.hpp"
#include "tole/policy.hpp"

namespace tole::oracle {

/// A small autoregressive process over `num_actions` tokens, run for
/// exactly `horizon` steps, with a boolean attribute on finished sequences.
/// Tokens here are action indices 0..V-1; there is no BOS.
struct EnumerableTask {
  std::size_t num_actions = 2;
  std::size_t horizon = 2;
  std::function<std::vector<double>(std::span<const TokenId>)> next_token;
  std::function<bool(std::span<const TokenId>)> predicate;
};

EnumerableTask uniform_task(std::size_t num_actions, std::size_t horizon,
                            std::function<bool(std::span<const TokenId>)> predicate);

/// Next-token distribution drawn at random per prefix (deterministic in
/// seed and prefix); the predicate is a random truth table over finished
/// sequences.
EnumerableTask random_task(std::size_t num_actions, std::size_t horizon, std::uint64_t seed);

/// Wraps a policy network; action index i is the i-th sampleable token.
/// Finished sequences are judged by `predicate` on action indices.
EnumerableTask network_task(const PolicyParams& params, std::size_t horizon,
                            std::function<bool(std::span<const TokenId>)> predicate);

/// P(c^ | y<=t): probability that a finished continuation of `prefix`
/// satisfies the predicate, by recursion over every completion.
double exact_attr_posterior(const EnumerableTask& task, std::span<const TokenId> prefix);

struct BayesIdentityReport {
  double max_deviation = 0;
  std::size_t checked = 0;  // (prefix, token) pairs compared
  std::size_t skipped = 0;  // prefixes with P(c^ | prefix) = 0
};

/// Compares P(y_t | y<t, c^), obtained by summing joint probabilities of
/// every finished sequence, with the probability-shift form
/// P(c^|y<=t) / P(c^|y<t) * P(y_t|y<t) renormalised over tokens.
BayesIdentityReport check_bayes_identity(const EnumerableTask& task);

/// Full sort and direct indexing at floor(k (n-1) / q).
std::vector<double> brute_force_quantiles(std::span<const double> rewards, std::size_t q);

using Objective = std::function<double(std::span<const double>)>;

/// Central differences, one coordinate at a time.
std::vector<double> finite_difference(const Objective& objective, std::span<const double> params,
                                      double h = 1e-5);

struct GradientComparison {
  double max_relative_error = 0;  // |a - n| / max(|a|, |n|, abs_floor / rel_tol)
  std::size_t worst_index = 0;
  bool passed = true;
};

GradientComparison compare_gradients(std::span<const double> analytic, std::span<const double> numeric,
                                     double rel_tol = 1e-4, double abs_floor = 1e-7);

struct CheckResult {
  std::string name;
  double value = 0;      // measured quantity
  double threshold = 0;  // pass iff value <= threshold
  bool passed = false;
  std::string detail;
};

struct SuiteOptions {
  std::size_t bayes_tasks = 10;
  std::size_t bayes_actions = 4;
  std::size_t bayes_horizon = 4;
  std::size_t quantile_cases = 1000;
  std::size_t gradient_seeds = 50;
  std::uint64_t seed = 2024;
};

/// Factorisation identity, quantile dual implementation, and every
/// analytic gradient against finite differences.
std::vector<CheckResult> run_oracle_suite(const SuiteOptions& options = {});

}  // namespace tole::oracle
