// Experiment driver: train, sweep, eval, oracle-check, warmup, train-weigher.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tole/experiment.hpp"
#include "tole/oracle.hpp"

namespace {

using tole::ExperimentConfig;

// Config keys exposed as --flags; the flag spelling uses dashes.
const std::vector<std::string> kFlagKeys = {
    "task",          "alpha",        "beta",           "lr",          "episodes",       "rollouts_per_episode",
    "T",             "q",            "sigma",          "L",           "feedback",       "shaping",
    "combine",       "optimizer",    "minibatch",      "eval_rollouts", "init_stddev",  "warmup_steps",
    "warmup_corpus", "weigher_steps", "weigher_lr",    "weigher_corpus", "weigher_hidden", "run_id",
    "checkpoint_every", "init_policy", "weigher_checkpoint"};

std::string dashed(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

struct Overrides {
  std::map<std::string, std::string> flags;
  std::vector<std::string> sets;  // key=value
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
  for (const auto& key : kFlagKeys) {
    cmd->add_option("--" + dashed(key), o.flags[key], "override config key '" + key + "'");
  }
  cmd->add_option("--set", o.sets, "override any config key: key=value (repeatable)");
}

void apply_overrides(ExperimentConfig& c, const Overrides& o) {
  for (const auto& [key, value] : o.flags) {
    if (!value.empty()) tole::set_config_value(c, key, value);
  }
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    tole::set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  c.train.validate();
}

ExperimentConfig config_or_default(const std::string& path) {
  return path.empty() ? ExperimentConfig{} : tole::load_config(path);
}

template <class T>
std::vector<T> parse_list(const std::string& csv) {
  std::vector<T> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if constexpr (std::is_same_v<T, std::string>) {
      out.push_back(item);
    } else {
      out.push_back(static_cast<T>(std::stoull(item)));
    }
  }
  return out;
}

nlohmann::json eval_json(const tole::Task& task, const tole::EvalReport& e) {
  nlohmann::json corr = nlohmann::json::object();
  for (std::size_t a = 0; a < task.rules.size(); ++a) corr[task.rules[a].name] = e.correctness[a];
  return {{"correctness", corr}, {"mean_correctness", e.mean_correctness}, {"dist1", e.dist1},
          {"dist2", e.dist2},    {"dist3", e.dist3},                       {"ppl_proxy", e.ppl_proxy}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tole: token-level reward RL for attribute-controllable generation"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train one policy and write CSV, summary and checkpoints");
  std::string train_config, train_out;
  std::uint64_t train_seed = 0;
  Overrides train_over;
  train->add_option("--config", train_config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--seed", train_seed, "random seed")->required();
  train->add_option("--out", train_out, "output directory")->required();
  add_override_flags(train, train_over);

  // sweep
  auto* sw = app.add_subcommand("sweep", "one run per (value, seed) of a config axis plus a comparison table");
  std::string sw_config, sw_out, sw_axis, sw_values, sw_seeds = "1,2,3,4,5";
  Overrides sw_over;
  sw->add_option("--config", sw_config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sw->add_option("--axis", sw_axis, "config key to vary, e.g. q, sigma, feedback, combine")->required();
  sw->add_option("--values", sw_values, "comma-separated values")->required();
  sw->add_option("--seeds", sw_seeds, "comma-separated seeds")->capture_default_str();
  sw->add_option("--out", sw_out, "output directory (default: config 'out')");
  add_override_flags(sw, sw_over);

  // eval
  auto* ev = app.add_subcommand("eval", "sample a checkpoint and report correctness, dist-n and ppl proxy");
  std::string ev_policy, ev_reference, ev_config, ev_task;
  std::size_t ev_rollouts = 256, ev_T = 12;
  std::uint64_t ev_seed = 1;
  ev->add_option("--policy", ev_policy, "policy checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--reference", ev_reference, "evaluation model for the ppl proxy (default: the policy)")
      ->check(CLI::ExistingFile);
  ev->add_option("--config", ev_config, "config supplying task and scorers")->check(CLI::ExistingFile);
  ev->add_option("--task", ev_task, "task name (overrides the config)");
  ev->add_option("--rollouts", ev_rollouts, "number of samples")->capture_default_str();
  ev->add_option("--T", ev_T, "generation length")->capture_default_str();
  ev->add_option("--seed", ev_seed, "sampling seed")->capture_default_str();

  // oracle-check
  auto* oc = app.add_subcommand("oracle-check", "exact oracles and gradient checks; nonzero exit on failure");
  tole::oracle::SuiteOptions oc_opts;
  oc->add_option("--seed", oc_opts.seed, "suite seed")->capture_default_str();
  oc->add_option("--bayes-tasks", oc_opts.bayes_tasks, "random enumerable tasks")->capture_default_str();
  oc->add_option("--quantile-cases", oc_opts.quantile_cases, "random quantile inputs")->capture_default_str();
  oc->add_option("--gradient-seeds", oc_opts.gradient_seeds, "finite-difference seeds")->capture_default_str();

  // warmup
  auto* wu = app.add_subcommand("warmup", "initialise a policy and MLE-finetune it on a rejection-sampled corpus");
  std::string wu_config, wu_out;
  std::uint64_t wu_seed = 1;
  Overrides wu_over;
  wu->add_option("--config", wu_config, "experiment config (JSON)")->check(CLI::ExistingFile);
  wu->add_option("--seed", wu_seed, "random seed")->capture_default_str();
  wu->add_option("--out", wu_out, "policy checkpoint path")->required();
  add_override_flags(wu, wu_over);

  // train-weigher
  auto* tw = app.add_subcommand("train-weigher", "fit the multi-attribute weigher on reference hidden states");
  std::string tw_config, tw_out, tw_policy;
  std::uint64_t tw_seed = 1;
  Overrides tw_over;
  tw->add_option("--config", tw_config, "experiment config (JSON)")->check(CLI::ExistingFile);
  tw->add_option("--policy", tw_policy, "reference policy checkpoint (default: the seed's initial policy)")
      ->check(CLI::ExistingFile);
  tw->add_option("--seed", tw_seed, "random seed")->capture_default_str();
  tw->add_option("--out", tw_out, "weigher checkpoint path")->required();
  add_override_flags(tw, tw_over);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      ExperimentConfig c = tole::load_config(train_config);
      apply_overrides(c, train_over);
      c.train.seed = train_seed;
      c.out_dir = train_out;
      auto run = tole::run_experiment(c);
      const auto& fe = run.result.final_eval;
      std::printf("run %s: %zu episodes, final correctness %.4f, dist-3 %.4f, ppl proxy %.4f\n",
                  run.run_id.c_str(), run.result.reports.size(), fe.mean_correctness, fe.dist3, fe.ppl_proxy);
      std::printf("wrote %s\n      %s\n      %s\n", run.csv_path.c_str(), run.summary_path.c_str(),
                  run.policy_path.c_str());
      if (!run.weigher_path.empty()) std::printf("      %s\n", run.weigher_path.c_str());
      return 0;
    }
    if (sw->parsed()) {
      ExperimentConfig c = tole::load_config(sw_config);
      apply_overrides(c, sw_over);
      if (!sw_out.empty()) c.out_dir = sw_out;
      auto out = tole::sweep(c, sw_axis, parse_list<std::string>(sw_values), parse_list<std::uint64_t>(sw_seeds));
      std::printf("%zu runs\n", out.runs.size());
      std::ifstream cmp(out.comparison_path);
      std::cout << cmp.rdbuf();
      std::printf("wrote %s\n      %s\n", out.summary_path.c_str(), out.comparison_path.c_str());
      return 0;
    }
    if (ev->parsed()) {
      ExperimentConfig c = config_or_default(ev_config);
      if (!ev_task.empty()) {
        c.task = ev_task;
        if (ev_config.empty()) c.scorers.clear();
      }
      const tole::Task task = tole::build_task(c);
      const tole::PolicyParams policy = tole::load_policy(ev_policy);
      const tole::PolicyParams reference = ev_reference.empty() ? policy : tole::load_policy(ev_reference);
      auto report = tole::evaluate(task, policy, reference, ev_rollouts, ev_T, ev_seed);
      nlohmann::json j = eval_json(task, report);
      j["task"] = task.name;
      j["rollouts"] = ev_rollouts;
      std::cout << j.dump(2) << '\n';
      return 0;
    }
    if (oc->parsed()) {
      bool ok = true;
      for (const auto& r : tole::oracle::run_oracle_suite(oc_opts)) {
        std::printf("%s %-30s %.3e (<= %.0e)  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.value,
                    r.threshold, r.detail.c_str());
        ok = ok && r.passed;
      }
      return ok ? 0 : 1;
    }
    if (wu->parsed()) {
      ExperimentConfig c = config_or_default(wu_config);
      apply_overrides(c, wu_over);
      c.train.seed = wu_seed;
      const tole::Task task = tole::build_task(c);
      const tole::PolicyParams p = tole::make_initial_policy(task, c.train);
      tole::save_policy(wu_out, p);
      std::printf("warm-up %zu steps on task %s; wrote %s\n", c.train.warmup_steps, task.name.c_str(),
                  wu_out.c_str());
      return 0;
    }
    if (tw->parsed()) {
      ExperimentConfig c = config_or_default(tw_config);
      apply_overrides(c, tw_over);
      c.train.seed = tw_seed;
      const tole::Task task = tole::build_task(c);
      const tole::PolicyParams ref =
          tw_policy.empty() ? tole::make_initial_policy(task, c.train) : tole::load_policy(tw_policy);
      auto fit = tole::fit_weigher(task, ref, c.train);
      tole::save_weigher(tw_out, fit.params);
      std::printf("weigher objective %.6f -> %.6f over %zu steps; wrote %s\n", fit.objective.front(),
                  fit.objective.back(), fit.objective.size() - 1, tw_out.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
