#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tole/learner.hpp"
#include "tole/task.hpp"

namespace tole {

struct ExperimentConfig {
  std::string task = "single_attr_lexicon";
  TrainConfig train;
  std::vector<ScorerSpec> scorers;  // empty: the task's own scorers
  std::string out_dir = "runs";
  std::string run_id;               // empty: "<task>_s<seed>"
  std::size_t checkpoint_every = 0;  // 0: final checkpoint only
  std::string init_policy;           // optional policy checkpoint to start from
  std::string weigher_checkpoint;    // optional pre-trained weigher

  std::string resolved_run_id() const;
};

/// Flat JSON object; every key optional, unknown keys rejected.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& config);

/// Sets one key from its textual value (numbers parsed, anything else
/// taken as a string). Throws std::invalid_argument on unknown keys.
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);

Task build_task(const ExperimentConfig& config);

std::string csv_header(const Task& task);
std::string csv_row(const std::string& run_id, std::uint64_t seed, const EpisodeReport& report);

struct RunOutput {
  std::string run_id;
  std::string csv_path;
  std::string summary_path;
  std::string policy_path;
  std::string weigher_path;  // empty without a weigher
  TrainResult result;
};

/// Trains and writes <out>/<run_id>.csv, .summary.json, .policy.json
/// (and .weigher.json). Deterministic per seed.
RunOutput run_experiment(const ExperimentConfig& config);

/// First episode whose mean correctness reaches `threshold`; `episodes`
/// when never reached.
std::size_t episodes_to_reach(const std::vector<double>& mean_correctness, double threshold);

struct CsvRun {
  std::string run_id;
  std::vector<double> mean_correctness;  // per episode
  std::vector<double> dist3;
  std::vector<double> mean_kl;
  std::vector<double> ppl_proxy;
};

CsvRun read_metrics_csv(const std::string& path);

struct ArmSummary {
  std::string arm;
  std::size_t runs = 0;
  double final_correctness_mean = 0;
  double final_correctness_median = 0;
  double episodes_to_080_median = 0;
  double final_dist3_mean = 0;
  double final_kl_mean = 0;
  double final_ppl_mean = 0;
};

/// Per-arm aggregates over final CSV rows; a pure function of the files.
std::vector<ArmSummary> compare_runs(const std::vector<std::pair<std::string, std::string>>& arm_csvs);
std::string comparison_csv(const std::vector<ArmSummary>& arms);

struct SweepOutput {
  std::vector<std::pair<std::string, RunOutput>> runs;  // (arm value, run)
  std::string summary_path;
  std::string comparison_path;
};

/// One run per (value, seed) of `axis`, a sweep summary JSON and a
/// comparison CSV built by re-reading the run CSVs.
SweepOutput sweep(const ExperimentConfig& config, const std::string& axis,
                  const std::vector<std::string>& values, const std::vector<std::uint64_t>& seeds);

}  // namespace tole
