#include "tole/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace tole {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
  throw std::invalid_argument("config key '" + key + "': " + why);
}

double as_number(const std::string& key, const json& v) {
  if (!v.is_number()) bad_key(key, "expected a number");
  return v.get<double>();
}

std::size_t as_count(const std::string& key, const json& v) {
  if (!v.is_number_integer() || v.get<long long>() < 0) bad_key(key, "expected a non-negative integer");
  return v.get<std::size_t>();
}

std::string as_string(const std::string& key, const json& v) {
  if (!v.is_string()) bad_key(key, "expected a string");
  return v.get<std::string>();
}

ScorerSpec parse_scorer(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config key 'scorers': entries must be objects");
  ScorerSpec s;
  for (const auto& [k, v] : j.items()) {
    const std::string key = "scorers." + k;
    if (k == "kind") {
      const std::string kind = as_string(key, v);
      if (kind == "lexicon") s.kind = ScorerSpec::Kind::lexicon;
      else if (kind == "suffix") s.kind = ScorerSpec::Kind::suffix;
      else bad_key(key, "expected 'lexicon' or 'suffix'");
    } else if (k == "name") {
      s.name = as_string(key, v);
    } else if (k == "tokens") {
      if (!v.is_array()) bad_key(key, "expected an array of token ids");
      for (const auto& t : v) {
        if (!t.is_number_integer()) bad_key(key, "expected integer token ids");
        s.tokens.push_back(t.get<TokenId>());
      }
    } else if (k == "gain") {
      s.gain = as_number(key, v);
    } else if (k == "window") {
      s.window = as_count(key, v);
    } else if (k == "floor") {
      s.floor = as_number(key, v);
    } else {
      bad_key(key, "unknown key");
    }
  }
  if (s.name.empty()) throw std::invalid_argument("config key 'scorers': every scorer needs a name");
  return s;
}

json scorer_json(const ScorerSpec& s) {
  json j{{"kind", s.kind == ScorerSpec::Kind::lexicon ? "lexicon" : "suffix"}, {"name", s.name}, {"tokens", s.tokens}};
  if (s.kind == ScorerSpec::Kind::lexicon) {
    j["gain"] = s.gain;
  } else {
    j["window"] = s.window;
    j["floor"] = s.floor;
  }
  return j;
}

void apply_key(ExperimentConfig& c, const std::string& key, const json& v) {
  TrainConfig& t = c.train;
  if (key == "task") c.task = as_string(key, v);
  else if (key == "alpha") t.alpha = as_number(key, v);
  else if (key == "beta") t.beta = as_number(key, v);
  else if (key == "lr") t.lr = as_number(key, v);
  else if (key == "episodes") t.episodes = as_count(key, v);
  else if (key == "rollouts_per_episode") t.rollouts_per_episode = as_count(key, v);
  else if (key == "T") t.max_length = as_count(key, v);
  else if (key == "q") t.q = as_count(key, v);
  else if (key == "sigma") t.sigma = as_number(key, v);
  else if (key == "L") t.lifetime = static_cast<int>(as_count(key, v));
  else if (key == "feedback") t.feedback = parse_feedback(as_string(key, v));
  else if (key == "shaping") t.shaping = parse_shaping_mode(as_string(key, v));
  else if (key == "combine") t.combine = parse_combine(as_string(key, v));
  else if (key == "optimizer") t.optimizer = parse_optimizer(as_string(key, v));
  else if (key == "minibatch") t.minibatch = as_count(key, v);
  else if (key == "seed") t.seed = as_count(key, v);
  else if (key == "eval_rollouts") t.eval_rollouts = as_count(key, v);
  else if (key == "init_stddev") t.init_stddev = as_number(key, v);
  else if (key == "warmup_steps") t.warmup_steps = as_count(key, v);
  else if (key == "warmup_corpus") t.warmup_corpus = as_count(key, v);
  else if (key == "weigher_steps") t.weigher_steps = as_count(key, v);
  else if (key == "weigher_lr") t.weigher_lr = as_number(key, v);
  else if (key == "weigher_corpus") t.weigher_corpus = as_count(key, v);
  else if (key == "weigher_hidden") t.weigher_hidden = as_count(key, v);
  else if (key == "out") c.out_dir = as_string(key, v);
  else if (key == "run_id") c.run_id = as_string(key, v);
  else if (key == "checkpoint_every") c.checkpoint_every = as_count(key, v);
  else if (key == "init_policy") c.init_policy = as_string(key, v);
  else if (key == "weigher_checkpoint") c.weigher_checkpoint = as_string(key, v);
  else if (key == "scorers") {
    if (!v.is_array()) bad_key(key, "expected an array");
    c.scorers.clear();
    for (const auto& s : v) c.scorers.push_back(parse_scorer(s));
  } else {
    bad_key(key, "unknown key");
  }
}

bool safe_id(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
  });
}

std::string file_safe(const std::string& s) {
  std::string out = s;
  for (char& ch : out) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.')) ch = '_';
  }
  return out;
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

json eval_json(const Task& task, const EvalReport& e) {
  json corr = json::object();
  for (std::size_t a = 0; a < task.rules.size(); ++a) corr[task.rules[a].name] = e.correctness[a];
  return {{"correctness", corr}, {"mean_correctness", e.mean_correctness}, {"dist1", e.dist1},
          {"dist2", e.dist2},    {"dist3", e.dist3},                       {"ppl_proxy", e.ppl_proxy}};
}

json report_json(const Task& task, const EpisodeReport& r) {
  json corr = json::object();
  for (std::size_t a = 0; a < task.rules.size(); ++a) corr[task.rules[a].name] = r.correctness[a];
  return {{"episode", r.episode},
          {"mean_raw_reward", r.mean_raw_reward},
          {"mean_shaped_reward", r.mean_shaped_reward},
          {"correctness", corr},
          {"mean_correctness", r.mean_correctness},
          {"dist1", r.dist1},
          {"dist2", r.dist2},
          {"dist3", r.dist3},
          {"ppl_proxy", r.ppl_proxy},
          {"mean_kl", r.mean_kl},
          {"mean_entropy", r.mean_entropy},
          {"pool_size", r.pool_size},
          {"evictions", r.evictions},
          {"wall_seconds", r.wall_seconds}};
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory '" + dir + "'");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::string ExperimentConfig::resolved_run_id() const {
  return run_id.empty() ? task + "_s" + std::to_string(train.seed) : run_id;
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  ExperimentConfig c;
  for (const auto& [k, v] : j.items()) apply_key(c, k, v);
  c.train.validate();
  if (!c.run_id.empty() && !safe_id(c.run_id)) {
    throw std::invalid_argument("config key 'run_id': only letters, digits, '_', '-' and '.' allowed");
  }
  build_task(c);  // rejects unknown task names and bad scorer token ids
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  const TrainConfig& t = c.train;
  json j{{"task", c.task},
         {"alpha", t.alpha},
         {"beta", t.beta},
         {"lr", t.lr},
         {"episodes", t.episodes},
         {"rollouts_per_episode", t.rollouts_per_episode},
         {"T", t.max_length},
         {"q", t.q},
         {"sigma", t.sigma},
         {"L", t.lifetime},
         {"feedback", to_string(t.feedback)},
         {"shaping", to_string(t.shaping)},
         {"combine", to_string(t.combine)},
         {"optimizer", to_string(t.optimizer)},
         {"minibatch", t.minibatch},
         {"seed", t.seed},
         {"eval_rollouts", t.eval_rollouts},
         {"init_stddev", t.init_stddev},
         {"warmup_steps", t.warmup_steps},
         {"warmup_corpus", t.warmup_corpus},
         {"weigher_steps", t.weigher_steps},
         {"weigher_lr", t.weigher_lr},
         {"weigher_corpus", t.weigher_corpus},
         {"weigher_hidden", t.weigher_hidden},
         {"out", c.out_dir},
         {"checkpoint_every", c.checkpoint_every}};
  if (!c.run_id.empty()) j["run_id"] = c.run_id;
  if (!c.init_policy.empty()) j["init_policy"] = c.init_policy;
  if (!c.weigher_checkpoint.empty()) j["weigher_checkpoint"] = c.weigher_checkpoint;
  if (!c.scorers.empty()) {
    j["scorers"] = json::array();
    for (const auto& s : c.scorers) j["scorers"].push_back(scorer_json(s));
  }
  return j;
}

void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value) {
  json v = value;
  try {
    json parsed = json::parse(value);
    if (parsed.is_number() || parsed.is_array() || parsed.is_object()) v = std::move(parsed);
  } catch (const json::parse_error&) {
  }
  apply_key(config, key, v);
}

Task build_task(const ExperimentConfig& config) {
  Task task = make_task(config.task);
  if (!config.scorers.empty()) task = with_scorers(std::move(task), config.scorers);
  return task;
}

std::string csv_header(const Task& task) {
  std::string h = "run_id,seed,episode,mean_raw_reward,mean_shaped_reward";
  for (const auto& r : task.rules) h += ",correctness_" + r.name;
  h += ",mean_correctness,dist1,dist2,dist3,ppl_proxy,mean_kl,mean_entropy,pool_size,evictions";
  return h;
}

std::string csv_row(const std::string& run_id, std::uint64_t seed, const EpisodeReport& r) {
  std::string row = run_id + "," + std::to_string(seed) + "," + std::to_string(r.episode) + "," +
                    num(r.mean_raw_reward) + "," + num(r.mean_shaped_reward);
  for (double c : r.correctness) row += "," + num(c);
  row += "," + num(r.mean_correctness) + "," + num(r.dist1) + "," + num(r.dist2) + "," + num(r.dist3) + "," +
         num(r.ppl_proxy) + "," + num(r.mean_kl) + "," + num(r.mean_entropy) + "," +
         std::to_string(r.pool_size) + "," + std::to_string(r.evictions);
  return row;
}

std::size_t episodes_to_reach(const std::vector<double>& mean_correctness, double threshold) {
  for (std::size_t e = 0; e < mean_correctness.size(); ++e) {
    if (mean_correctness[e] >= threshold) return e;
  }
  return mean_correctness.size();
}

RunOutput run_experiment(const ExperimentConfig& config) {
  config.train.validate();
  const Task task = build_task(config);
  const std::string id = config.resolved_run_id();
  if (!safe_id(id)) throw std::invalid_argument("run id '" + id + "' is not file-name safe");
  ensure_dir(config.out_dir);

  const fs::path dir(config.out_dir);
  const std::string csv_path = (dir / (id + ".csv")).string();
  const std::string summary_path = (dir / (id + ".summary.json")).string();
  const std::string policy_path = (dir / (id + ".policy.json")).string();

  std::optional<PolicyParams> init;
  if (!config.init_policy.empty()) init = load_policy(config.init_policy);
  std::optional<WeigherParams> weigher;
  if (!config.weigher_checkpoint.empty()) weigher = load_weigher(config.weigher_checkpoint);

  std::ofstream csv = open_out(csv_path);
  csv << csv_header(task) << '\n';
  const auto start = std::chrono::steady_clock::now();
  TrainResult result = train(task, config.train, std::move(init), std::move(weigher),
                             [&](const Learner& learner, const EpisodeReport& rep) {
                               csv << csv_row(id, config.train.seed, rep) << '\n';
                               const std::size_t done = rep.episode + 1;
                               if (config.checkpoint_every > 0 && done % config.checkpoint_every == 0) {
                                 save_policy((dir / (id + ".policy.ep" + std::to_string(done) + ".json")).string(),
                                             learner.policy());
                               }
                             });
  csv.close();
  if (!csv) throw std::runtime_error("failed writing '" + csv_path + "'");
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  save_policy(policy_path, result.policy);
  std::string weigher_path;
  if (result.weigher) {
    weigher_path = (dir / (id + ".weigher.json")).string();
    save_weigher(weigher_path, *result.weigher);
  }

  std::vector<double> mc;
  for (const auto& r : result.reports) mc.push_back(r.mean_correctness);
  json summary{{"run_id", id},
               {"config", to_json(config)},
               {"episodes_run", result.reports.size()},
               {"episodes_to_0.80", episodes_to_reach(mc, 0.8)},
               {"final_eval", eval_json(task, result.final_eval)},
               {"weigher_objective", result.weigher_objective},
               {"wall_seconds", wall},
               {"csv", fs::path(csv_path).filename().string()},
               {"policy", fs::path(policy_path).filename().string()}};
  if (!result.reports.empty()) summary["last_episode"] = report_json(task, result.reports.back());
  if (!weigher_path.empty()) summary["weigher"] = fs::path(weigher_path).filename().string();
  std::ofstream js = open_out(summary_path);
  js << summary.dump(2) << '\n';
  return RunOutput{id, csv_path, summary_path, policy_path, weigher_path, std::move(result)};
}

CsvRun read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("'" + path + "' is empty");
  const auto header = split(line, ',');
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* need : {"run_id", "mean_correctness", "dist3", "mean_kl", "ppl_proxy"}) {
    if (!col.count(need)) throw std::runtime_error("'" + path + "' lacks column " + need);
  }
  CsvRun run;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) throw std::runtime_error("'" + path + "': ragged row");
    run.run_id = cells[col["run_id"]];
    run.mean_correctness.push_back(std::stod(cells[col["mean_correctness"]]));
    run.dist3.push_back(std::stod(cells[col["dist3"]]));
    run.mean_kl.push_back(std::stod(cells[col["mean_kl"]]));
    run.ppl_proxy.push_back(std::stod(cells[col["ppl_proxy"]]));
  }
  return run;
}

std::vector<ArmSummary> compare_runs(const std::vector<std::pair<std::string, std::string>>& arm_csvs) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<CsvRun>> by_arm;
  for (const auto& [arm, path] : arm_csvs) {
    if (!by_arm.count(arm)) order.push_back(arm);
    by_arm[arm].push_back(read_metrics_csv(path));
  }
  std::vector<ArmSummary> out;
  for (const auto& arm : order) {
    std::vector<double> fc, hit, d3, kl, ppl;
    for (const auto& run : by_arm[arm]) {
      if (run.mean_correctness.empty()) continue;
      fc.push_back(run.mean_correctness.back());
      hit.push_back(static_cast<double>(episodes_to_reach(run.mean_correctness, 0.8)));
      d3.push_back(run.dist3.back());
      kl.push_back(run.mean_kl.back());
      ppl.push_back(run.ppl_proxy.back());
    }
    out.push_back({arm, fc.size(), mean(fc), median(fc), median(hit), mean(d3), mean(kl), mean(ppl)});
  }
  return out;
}

std::string comparison_csv(const std::vector<ArmSummary>& arms) {
  std::string s =
      "arm,runs,final_correctness_mean,final_correctness_median,episodes_to_0.80_median,final_dist3_mean,"
      "final_kl_mean,final_ppl_mean\n";
  for (const auto& a : arms) {
    s += a.arm + "," + std::to_string(a.runs) + "," + num(a.final_correctness_mean) + "," +
         num(a.final_correctness_median) + "," + num(a.episodes_to_080_median) + "," + num(a.final_dist3_mean) +
         "," + num(a.final_kl_mean) + "," + num(a.final_ppl_mean) + "\n";
  }
  return s;
}

SweepOutput sweep(const ExperimentConfig& config, const std::string& axis, const std::vector<std::string>& values,
                  const std::vector<std::uint64_t>& seeds) {
  if (values.empty() || seeds.empty()) throw std::invalid_argument("sweep needs at least one value and one seed");
  {
    ExperimentConfig probe = config;
    set_config_value(probe, axis, values.front());  // fail fast on an unknown axis
  }
  ensure_dir(config.out_dir);
  const std::string base = config.run_id.empty() ? config.task : config.run_id;

  SweepOutput out;
  std::vector<std::pair<std::string, std::string>> arm_csvs;
  json runs = json::array();
  for (const auto& value : values) {
    for (std::uint64_t seed : seeds) {
      ExperimentConfig c = config;
      set_config_value(c, axis, value);
      c.train.seed = seed;
      c.run_id = base + "_" + file_safe(axis) + "-" + file_safe(value) + "_s" + std::to_string(seed);
      RunOutput r = run_experiment(c);
      arm_csvs.emplace_back(value, r.csv_path);
      runs.push_back({{"arm", value},
                      {"seed", seed},
                      {"run_id", r.run_id},
                      {"csv", fs::path(r.csv_path).filename().string()},
                      {"final_eval", eval_json(build_task(c), r.result.final_eval)}});
      out.runs.emplace_back(value, std::move(r));
    }
  }

  const fs::path dir(config.out_dir);
  const auto arms = compare_runs(arm_csvs);
  out.comparison_path = (dir / ("comparison_" + file_safe(axis) + ".csv")).string();
  std::ofstream cmp = open_out(out.comparison_path);
  cmp << comparison_csv(arms);

  out.summary_path = (dir / ("sweep_" + file_safe(axis) + ".json")).string();
  json arms_json = json::array();
  for (const auto& a : arms) {
    arms_json.push_back({{"arm", a.arm},
                         {"runs", a.runs},
                         {"final_correctness_mean", a.final_correctness_mean},
                         {"final_correctness_median", a.final_correctness_median},
                         {"episodes_to_0.80_median", a.episodes_to_080_median},
                         {"final_dist3_mean", a.final_dist3_mean},
                         {"final_kl_mean", a.final_kl_mean},
                         {"final_ppl_mean", a.final_ppl_mean}});
  }
  json summary{{"axis", axis}, {"values", values}, {"seeds", seeds}, {"config", to_json(config)},
               {"runs", runs}, {"arms", arms_json}, {"comparison", fs::path(out.comparison_path).filename().string()}};
  std::ofstream js = open_out(out.summary_path);
  js << summary.dump(2) << '\n';
  return out;
}

}  // namespace tole
