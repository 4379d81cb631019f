#include "tole/weigher.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "tole/optim.hpp"
#include "tole/random.hpp"

namespace tole {

std::size_t WeigherShape::parameter_count() const {
  return hidden_dim * input_dim + hidden_dim + hidden_dim * hidden_dim + hidden_dim +
         outputs * hidden_dim + outputs;
}

WeigherParams::WeigherParams(WeigherShape shape) : shape_(shape) {
  if (shape_.input_dim == 0 || shape_.hidden_dim == 0 || shape_.outputs == 0) {
    throw std::invalid_argument("weigher shape has a zero dimension");
  }
  data_.assign(shape_.parameter_count(), 0.0);
}

WeigherParams WeigherParams::random(WeigherShape shape, std::uint64_t seed, double stddev) {
  WeigherParams p(shape);
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, stddev);
  for (double& x : p.data_) x = gauss(rng);
  return p;
}

namespace {

void affine(const double* w, const double* b, std::span<const double> x, std::size_t rows,
            std::vector<double>& out) {
  out.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b[r];
    const double* row = w + r * x.size();
    for (std::size_t c = 0; c < x.size(); ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
}

std::vector<double> relu(const std::vector<double>& x) {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0 ? x[i] : 0.0;
  return y;
}

}  // namespace

WeigherActivation weigher_activation(const WeigherParams& params, std::span<const double> hidden) {
  const auto& s = params.shape();
  if (hidden.size() != s.input_dim) {
    throw std::invalid_argument("weigher: hidden state has " + std::to_string(hidden.size()) +
                                " entries, expected " + std::to_string(s.input_dim));
  }
  const double* p = params.data().data();
  WeigherActivation a;
  a.input.assign(hidden.begin(), hidden.end());
  affine(p + params.l1_offset(), p + params.b1_offset(), a.input, s.hidden_dim, a.pre1);
  a.act1 = relu(a.pre1);
  affine(p + params.l2_offset(), p + params.b2_offset(), a.act1, s.hidden_dim, a.pre2);
  a.act2 = relu(a.pre2);
  affine(p + params.out_offset(), p + params.b3_offset(), a.act2, s.outputs, a.logits);
  a.weights = softmax(a.logits);
  return a;
}

std::vector<double> weigher_forward(const WeigherParams& params, std::span<const double> hidden) {
  return weigher_activation(params, hidden).weights;
}

double combined_reward(std::span<const double> weights, std::span<const double> rewards) {
  if (weights.size() != rewards.size()) {
    throw std::invalid_argument("combined_reward: weight and reward counts differ");
  }
  double r = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) r += weights[i] * rewards[i];
  return r;
}

std::vector<WeigherSample> build_weigher_samples(const std::vector<Sequence>& corpus,
                                                 const Vocabulary& vocab, const PolicyParams& policy,
                                                 const ScorerList& scorers) {
  std::vector<WeigherSample> samples;
  std::size_t usable = 0;
  for (const auto& seq : corpus) usable += seq.generated.empty() ? 0 : 1;
  if (usable == 0) throw std::invalid_argument("weigher corpus has no generated tokens");
  for (const auto& seq : corpus) {
    if (seq.generated.empty()) continue;
    auto hidden = hidden_states(policy, seq);
    Trajectory traj = new_trajectory(vocab, seq.prefix, scorers);
    for (std::size_t t = 0; t < seq.generated.size(); ++t) traj.append(seq.generated[t], hidden[t], scorers);
    const double w = 1.0 / (static_cast<double>(usable) * static_cast<double>(seq.generated.size()));
    for (std::size_t t = 0; t < seq.generated.size(); ++t) {
      WeigherSample s;
      s.hidden = hidden[t];
      s.rewards.reserve(scorers.size());
      for (std::size_t a = 0; a < scorers.size(); ++a) s.rewards.push_back(traj.raw_rewards()[a][t]);
      s.weight = w;
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

double weigher_objective(const WeigherParams& params, std::span<const WeigherSample> samples,
                         std::span<double> grad) {
  const auto& s = params.shape();
  if (!grad.empty() && grad.size() != params.size()) {
    throw std::invalid_argument("weigher_objective: gradient size mismatch");
  }
  const double* p = params.data().data();
  const std::size_t h = s.hidden_dim, d = s.input_dim, n = s.outputs;
  double total = 0;
  std::vector<double> dlogits(n), da2(h), dpre2(h), da1(h), dpre1(h);
  for (const auto& sample : samples) {
    if (sample.rewards.size() != n) throw std::invalid_argument("weigher sample has wrong reward count");
    auto a = weigher_activation(params, sample.hidden);
    const double value = combined_reward(a.weights, sample.rewards);
    total += sample.weight * value;
    if (grad.empty()) continue;

    // d(w . R)/d logit_j = w_j (R_j - w . R)
    for (std::size_t j = 0; j < n; ++j) dlogits[j] = sample.weight * a.weights[j] * (sample.rewards[j] - value);

    std::fill(da2.begin(), da2.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      grad[params.b3_offset() + j] += dlogits[j];
      const double* wrow = p + params.out_offset() + j * h;
      double* grow = grad.data() + params.out_offset() + j * h;
      for (std::size_t r = 0; r < h; ++r) {
        grow[r] += dlogits[j] * a.act2[r];
        da2[r] += dlogits[j] * wrow[r];
      }
    }
    for (std::size_t r = 0; r < h; ++r) dpre2[r] = a.pre2[r] > 0 ? da2[r] : 0.0;

    std::fill(da1.begin(), da1.end(), 0.0);
    for (std::size_t r = 0; r < h; ++r) {
      if (dpre2[r] == 0.0) continue;
      grad[params.b2_offset() + r] += dpre2[r];
      const double* wrow = p + params.l2_offset() + r * h;
      double* grow = grad.data() + params.l2_offset() + r * h;
      for (std::size_t c = 0; c < h; ++c) {
        grow[c] += dpre2[r] * a.act1[c];
        da1[c] += dpre2[r] * wrow[c];
      }
    }
    for (std::size_t r = 0; r < h; ++r) dpre1[r] = a.pre1[r] > 0 ? da1[r] : 0.0;

    for (std::size_t r = 0; r < h; ++r) {
      if (dpre1[r] == 0.0) continue;
      grad[params.b1_offset() + r] += dpre1[r];
      double* grow = grad.data() + params.l1_offset() + r * d;
      for (std::size_t c = 0; c < d; ++c) grow[c] += dpre1[r] * a.input[c];
    }
  }
  return total;
}

WeigherFit train_weigher_on_samples(WeigherParams params, std::span<const WeigherSample> samples,
                                    std::size_t steps, double lr) {
  if (samples.empty()) throw std::invalid_argument("train_weigher: empty corpus");
  WeigherFit fit{std::move(params), {}};
  Optimizer opt(OptimizerKind::adam, lr, fit.params.size());
  std::vector<double> grad(fit.params.size());
  for (std::size_t step = 0; step < steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    fit.objective.push_back(weigher_objective(fit.params, samples, grad));
    opt.step(fit.params.data(), grad);
  }
  fit.objective.push_back(weigher_objective(fit.params, samples));
  return fit;
}

WeigherFit train_weigher(WeigherParams params, const std::vector<Sequence>& corpus,
                         const Vocabulary& vocab, const PolicyParams& policy,
                         const ScorerList& scorers, std::size_t steps, double lr) {
  if (corpus.empty()) throw std::invalid_argument("train_weigher: empty corpus");
  if (params.shape().outputs != scorers.size()) {
    throw std::invalid_argument("train_weigher: weigher outputs do not match scorer count");
  }
  auto samples = build_weigher_samples(corpus, vocab, policy, scorers);
  return train_weigher_on_samples(std::move(params), samples, steps, lr);
}

std::vector<double> multi_attribute_reward(const Trajectory& traj,
                                           const std::vector<std::vector<double>>& hidden,
                                           const WeigherParams& params) {
  const std::size_t n = traj.attribute_count();
  if (n != params.shape().outputs) {
    throw std::invalid_argument("multi_attribute_reward: trajectory annotated with " +
                                std::to_string(n) + " scorers, weigher expects " +
                                std::to_string(params.shape().outputs));
  }
  if (hidden.size() != traj.length()) {
    throw std::invalid_argument("multi_attribute_reward: missing hidden states");
  }
  std::vector<double> out(traj.length());
  std::vector<double> r(n);
  for (std::size_t t = 0; t < traj.length(); ++t) {
    for (std::size_t a = 0; a < n; ++a) r[a] = traj.raw_rewards()[a][t];
    out[t] = combined_reward(weigher_forward(params, hidden[t]), r);
  }
  return out;
}

std::vector<double> multi_attribute_reward(const Trajectory& traj, const WeigherParams& params) {
  return multi_attribute_reward(traj, traj.hidden_states(), params);
}

std::vector<double> average_reward(const Trajectory& traj) {
  const std::size_t n = traj.attribute_count();
  if (n == 0) throw std::invalid_argument("average_reward: trajectory has no annotations");
  std::vector<double> out(traj.length(), 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t t = 0; t < traj.length(); ++t) out[t] += traj.raw_rewards()[a][t];
  }
  for (double& x : out) x /= static_cast<double>(n);
  return out;
}

void save_weigher(const std::string& path, const WeigherParams& params) {
  const auto& s = params.shape();
  nlohmann::json j;
  j["format"] = "tole-weigher";
  j["version"] = 1;
  j["shape"] = {{"input_dim", s.input_dim}, {"hidden_dim", s.hidden_dim}, {"outputs", s.outputs}};
  j["params"] = std::vector<double>(params.data().begin(), params.data().end());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << j.dump() << '\n';
}

WeigherParams load_weigher(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.at("format") != "tole-weigher" || j.at("version") != 1) {
    throw std::runtime_error(path + ": not a version-1 weigher checkpoint");
  }
  const auto& js = j.at("shape");
  WeigherParams p(WeigherShape{js.at("input_dim").get<std::size_t>(), js.at("hidden_dim").get<std::size_t>(),
                               js.at("outputs").get<std::size_t>()});
  auto values = j.at("params").get<std::vector<double>>();
  if (values.size() != p.size()) throw std::runtime_error(path + ": parameter count mismatch");
  std::copy(values.begin(), values.end(), p.data().begin());
  return p;
}

}  // namespace tole
