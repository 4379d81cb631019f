// Acceptance run: one PASS/FAIL line per criterion on stdout, progress on
// stderr. Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tole/experiment.hpp"
#include "tole/learner.hpp"
#include "tole/oracle.hpp"
#include "tole/pool.hpp"
#include "tole/random.hpp"
#include "tole/shaping.hpp"

using namespace tole;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string join(const std::vector<double>& v, const char* fmt = "%.3f") {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, fmt, v[i]);
    out += (i ? "," : "") + std::string(buf);
  }
  return out;
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5};

struct Run {
  double final_correctness = 0;
  std::vector<double> episode_correctness;
  std::vector<double> weigher_objective;
  double seconds = 0;
};

Run run(const Task& task, TrainConfig cfg) {
  const auto t0 = Clock::now();
  auto res = train(task, cfg);
  Run r;
  r.final_correctness = res.final_eval.mean_correctness;
  for (const auto& rep : res.reports) r.episode_correctness.push_back(rep.mean_correctness);
  r.weigher_objective = res.weigher_objective;
  r.seconds = seconds_since(t0);
  std::fprintf(stderr, "  %s seed %llu feedback %s shaping %s sigma %.2f combine %s: final %.3f (%.1f s)\n",
               task.name.c_str(), static_cast<unsigned long long>(cfg.seed), std::string(to_string(cfg.feedback)).c_str(),
               std::string(to_string(cfg.shaping)).c_str(), cfg.sigma, std::string(to_string(cfg.combine)).c_str(),
               r.final_correctness, r.seconds);
  return r;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const Verdict& v) {
  std::printf("criterion %d %s: %s | %s\n", id, v.pass ? "PASS" : "FAIL", title.c_str(), v.detail.c_str());
  std::fflush(stdout);
  failures += v.pass ? 0 : 1;
}

// 1. Oracle suite at the prescribed sizes, under a minute.
Verdict oracle_suite() {
  oracle::SuiteOptions opts;
  opts.bayes_tasks = 10;
  opts.bayes_actions = 4;
  opts.bayes_horizon = 4;
  opts.quantile_cases = 1000;
  opts.gradient_seeds = 50;
  const auto t0 = Clock::now();
  auto results = oracle::run_oracle_suite(opts);
  const double secs = seconds_since(t0);
  bool ok = secs < 60.0;
  std::ostringstream d;
  for (const auto& r : results) {
    double limit = r.threshold;
    if (r.name.find("bayes") != std::string::npos) limit = 1e-10;
    else if (r.name.find("quantile") != std::string::npos) limit = 0.0;
    else limit = 1e-4;
    const bool this_ok = r.passed && r.value <= limit;
    ok = ok && this_ok;
    d << r.name << '=' << r.value << (this_ok ? "" : "(!)") << ' ';
  }
  d << "runtime=" << secs << "s (< 60)";
  return {ok, d.str()};
}

// 2. Containment and cross-interval monotonicity over 1e5 shaped rewards
// per sigma, with intervals from the brute-force quantile oracle.
Verdict shaping_invariants() {
  const std::size_t n = 100000, q = 5;
  bool ok = true;
  std::ostringstream d;
  for (double sigma : {0.0, 0.1, 0.5, 1.0, 10.0}) {
    DataPool pool(3);
    Rng rng(derive_seed(99, {static_cast<std::uint64_t>(sigma * 1000)}));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) pool.push({0}, 1, u(rng));
    shape_pool(pool, q, NoiseConfig{sigma, 1234});
    const auto b = oracle::brute_force_quantiles(pool.snapshot_rewards(), q);

    std::size_t outside = 0, identity_breaks = 0;
    std::vector<double> lo(q, 1e300), hi(q, -1e300);
    for (const auto& e : pool.entries()) {
      const double r = e.raw_reward, s = *e.shaped_reward;
      std::size_t k = 0;
      while (k + 1 < q && r >= b[k + 1]) ++k;
      if (s < b[k] || s > b[k + 1]) ++outside;
      lo[k] = std::min(lo[k], s);
      hi[k] = std::max(hi[k], s);
      if (sigma == 0.0 && s != r) ++identity_breaks;
    }
    std::size_t order_breaks = 0;
    for (std::size_t k = 0; k + 1 < q; ++k) {
      for (std::size_t j = k + 1; j < q; ++j) order_breaks += hi[k] > lo[j] ? 1 : 0;
    }
    const bool this_ok = outside == 0 && order_breaks == 0 && identity_breaks == 0;
    ok = ok && this_ok;
    d << "sigma=" << sigma << ":outside=" << outside << ",order=" << order_breaks;
    if (sigma == 0.0) d << ",identity_breaks=" << identity_breaks;
    d << ' ';
  }
  return {ok, d.str()};
}

// 7. Entry pushed at episode e with lifetime L is live in exactly e..e+L-1.
Verdict pool_semantics() {
  Rng rng(7);
  std::uniform_int_distribution<int> e_dist(0, 30), l_dist(1, 10);
  std::size_t bad = 0;
  for (int c = 0; c < 1000; ++c) {
    const int e = e_dist(rng), L = l_dist(rng);
    DataPool pool(L);
    const TokenId marker = 1000;
    for (int ep = 0; ep < e + L + 3; ++ep) {
      pool.push({0}, 0, 0.0);  // background traffic every episode
      if (ep == e) pool.push({0}, marker, 1.0);
      bool live = false;
      for (const auto& x : pool.entries()) live = live || x.action == marker;
      const bool expected = ep >= e && ep <= e + L - 1;
      bad += live != expected ? 1 : 0;
      pool.tick();
    }
  }
  return {bad == 0, "1000 random (e, L) cases, mismatched episodes=" + std::to_string(bad)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 8. Two runs of the same config and seed give byte-identical CSVs.
Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "tole_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::string> csvs;
  for (const char* sub : {"a", "b"}) {
    ExperimentConfig c;
    c.train.seed = 3;
    c.out_dir = (root / sub).string();
    csvs.push_back(slurp(run_experiment(c).csv_path));
  }
  fs::remove_all(root);
  const bool same = !csvs[0].empty() && csvs[0] == csvs[1];
  return {same, "200-episode default run, seed 3, csv bytes " + std::to_string(csvs[0].size()) +
                    (same ? " identical" : " differ")};
}

}  // namespace

int main() {
  std::fprintf(stderr, "criterion 1: oracle suite\n");
  report(1, "oracle suite", oracle_suite());
  std::fprintf(stderr, "criterion 2: shaping invariants\n");
  report(2, "shaping invariants", shaping_invariants());

  const Task lexicon = make_task("single_attr_lexicon");
  TrainConfig base;  // defaults: 200 episodes x 64 rollouts

  // Token-level, quantize_noise, sigma 0.5: criteria 3, 4 and one cell of 5.
  std::fprintf(stderr, "criterion 3: single-attribute learning\n");
  std::map<std::uint64_t, Run> token_runs;
  for (auto seed : kSeeds) {
    TrainConfig c = base;
    c.seed = seed;
    token_runs[seed] = run(lexicon, c);
  }
  {
    std::vector<double> finals, secs;
    for (auto& [s, r] : token_runs) {
      finals.push_back(r.final_correctness);
      secs.push_back(r.seconds);
    }
    const double med = median(finals), slowest = *std::max_element(secs.begin(), secs.end());
    char buf[160];
    std::snprintf(buf, sizeof buf, "median final correctness %.4f (>= 0.90); slowest seed %.1f s (< 300)", med,
                  slowest);
    report(3, "single-attribute learning", {med >= 0.90 && slowest < 300.0, "finals=" + join(finals) + "; " + buf});
  }

  std::fprintf(stderr, "criterion 4: token vs sentence feedback\n");
  {
    std::vector<double> tok_hit, sen_hit;
    for (auto seed : kSeeds) {
      TrainConfig c = base;
      c.seed = seed;
      c.feedback = Feedback::sentence;
      auto sr = run(lexicon, c);
      tok_hit.push_back(static_cast<double>(episodes_to_reach(token_runs[seed].episode_correctness, 0.80)));
      sen_hit.push_back(static_cast<double>(episodes_to_reach(sr.episode_correctness, 0.80)));
    }
    const double mt = median(tok_hit), ms = median(sen_hit);
    char buf[160];
    std::snprintf(buf, sizeof buf, "median episodes-to-0.80 token %.1f vs sentence %.1f (token < sentence)", mt, ms);
    report(4, "token vs sentence convergence",
           {mt < ms, std::string(buf) + "; token=" + join(tok_hit, "%.0f") + " sentence=" + join(sen_hit, "%.0f")});
  }

  std::fprintf(stderr, "criterion 5: quantization robustness\n");
  {
    const std::vector<double> sigmas{0.1, 0.5, 1.0};
    auto arm = [&](ShapingMode mode) {
      std::vector<double> per_sigma;
      for (double sigma : sigmas) {
        std::vector<double> finals;
        for (auto seed : kSeeds) {
          if (mode == ShapingMode::quantize_noise && sigma == base.sigma) {
            finals.push_back(token_runs[seed].final_correctness);
            continue;
          }
          TrainConfig c = base;
          c.seed = seed;
          c.sigma = sigma;
          c.shaping = mode;
          finals.push_back(run(lexicon, c).final_correctness);
        }
        per_sigma.push_back(mean(finals));
      }
      return per_sigma;
    };
    const auto qn = arm(ShapingMode::quantize_noise);
    const auto no = arm(ShapingMode::noise_only);
    auto spread = [](const std::vector<double>& v) {
      return *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
    };
    const double sq = spread(qn), sn = spread(no);
    char buf[200];
    std::snprintf(buf, sizeof buf, "quantize_noise spread %.4f (<= 0.05), noise_only spread %.4f (> %.4f)", sq, sn,
                  sq);
    report(5, "quantization robustness",
           {sq <= 0.05 && sn > sq,
            std::string(buf) + "; seed-mean finals at sigma 0.1,0.5,1.0: quantize_noise=" + join(qn) +
                " noise_only=" + join(no)});
  }

  std::fprintf(stderr, "criterion 6: weigher ablation\n");
  {
    const Task multi = make_task("multi_attr_2");
    std::vector<double> w_finals, a_finals;
    std::size_t objective_drops = 0;
    for (auto seed : kSeeds) {
      TrainConfig c = base;
      c.seed = seed;
      c.combine = Combine::weigher;
      auto wr = run(multi, c);
      w_finals.push_back(wr.final_correctness);
      const auto& obj = wr.weigher_objective;
      if (obj.size() < 11) {
        ++objective_drops;
      } else {
        for (std::size_t k = 1; k <= 10; ++k) objective_drops += obj[k] < obj[k - 1] ? 1 : 0;
      }
      c.combine = Combine::average;
      a_finals.push_back(run(multi, c).final_correctness);
    }
    const double mw = mean(w_finals), ma = mean(a_finals);
    char buf[200];
    std::snprintf(buf, sizeof buf, "mean correctness weigher %.4f vs average %.4f (weigher >= average)", mw, ma);
    report(6, "weigher ablation",
           {mw >= ma && objective_drops == 0,
            std::string(buf) + "; weigher=" + join(w_finals) + " average=" + join(a_finals) +
                "; objective decreases in first 10 steps=" + std::to_string(objective_drops)});
  }

  std::fprintf(stderr, "criterion 7: pool semantics\n");
  report(7, "pool semantics", pool_semantics());
  std::fprintf(stderr, "criterion 8: determinism\n");
  report(8, "determinism", determinism());

  std::printf("acceptance: %d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
