#include "tole/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "tole/optim.hpp"

namespace tole {

std::size_t PolicyShape::parameter_count() const {
  return vocab_size * embed_dim + hidden_dim * input_dim() + hidden_dim + vocab_size * hidden_dim +
         vocab_size;
}

PolicyParams::PolicyParams(PolicyShape shape) : shape_(shape) {
  if (shape_.vocab_size < 2 || shape_.context_window == 0 || shape_.embed_dim == 0 ||
      shape_.hidden_dim == 0) {
    throw std::invalid_argument("policy shape has a zero dimension");
  }
  if (shape_.bos < 0 || static_cast<std::size_t>(shape_.bos) >= shape_.vocab_size) {
    throw std::invalid_argument("policy bos id outside vocabulary");
  }
  data_.assign(shape_.parameter_count(), 0.0);
}

PolicyParams PolicyParams::random(PolicyShape shape, std::uint64_t seed, double stddev) {
  PolicyParams p(shape);
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, stddev);
  for (double& x : p.data_) x = gauss(rng);
  return p;
}

std::vector<TokenId> context_window(const PolicyShape& shape, std::span<const TokenId> history) {
  const std::size_t k = shape.context_window;
  std::vector<TokenId> w(k, shape.bos);
  const std::size_t take = std::min(k, history.size());
  std::copy(history.end() - static_cast<std::ptrdiff_t>(take), history.end(), w.end() - static_cast<std::ptrdiff_t>(take));
  return w;
}

Activation forward(const PolicyParams& params, std::span<const TokenId> window) {
  const auto& s = params.shape();
  if (window.size() != s.context_window) {
    throw std::invalid_argument("forward: context must hold exactly k tokens");
  }
  Activation act;
  act.window.assign(window.begin(), window.end());
  act.input.resize(s.input_dim());
  auto embed = params.embed();
  for (std::size_t j = 0; j < window.size(); ++j) {
    TokenId t = window[j];
    if (t < 0 || static_cast<std::size_t>(t) >= s.vocab_size) {
      throw std::out_of_range("forward: token id outside vocabulary");
    }
    std::copy_n(embed.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(t) * s.embed_dim),
                s.embed_dim, act.input.begin() + static_cast<std::ptrdiff_t>(j * s.embed_dim));
  }

  auto hw = params.hidden_w();
  auto hb = params.hidden_b();
  act.hidden.resize(s.hidden_dim);
  const std::size_t in = s.input_dim();
  for (std::size_t r = 0; r < s.hidden_dim; ++r) {
    double acc = hb[r];
    const double* row = hw.data() + r * in;
    for (std::size_t c = 0; c < in; ++c) acc += row[c] * act.input[c];
    act.hidden[r] = std::tanh(acc);
  }

  auto ow = params.out_w();
  auto ob = params.out_b();
  act.logits.resize(s.vocab_size);
  for (std::size_t v = 0; v < s.vocab_size; ++v) {
    double acc = ob[v];
    const double* row = ow.data() + v * s.hidden_dim;
    for (std::size_t r = 0; r < s.hidden_dim; ++r) acc += row[r] * act.hidden[r];
    act.logits[v] = acc;
  }
  return act;
}

Activation forward_history(const PolicyParams& params, std::span<const TokenId> history) {
  auto w = context_window(params.shape(), history);
  return forward(params, w);
}

std::vector<double> softmax(std::span<const double> logits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += (p[i] = std::exp(logits[i] - mx));
  for (double& x : p) x /= z;
  return p;
}

ActionDistribution action_distribution(const PolicyShape& shape, std::span<const double> logits) {
  const std::size_t V = logits.size();
  const auto bos = static_cast<std::size_t>(shape.bos);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < V; ++v) {
    if (v != bos) mx = std::max(mx, logits[v]);
  }
  double z = 0;
  for (std::size_t v = 0; v < V; ++v) {
    if (v != bos) z += std::exp(logits[v] - mx);
  }
  const double lse = mx + std::log(z);
  ActionDistribution d;
  d.prob.resize(V);
  d.log_prob.resize(V);
  for (std::size_t v = 0; v < V; ++v) {
    if (v == bos) {
      d.prob[v] = 0.0;
      d.log_prob[v] = -std::numeric_limits<double>::infinity();
    } else {
      d.log_prob[v] = logits[v] - lse;
      d.prob[v] = std::exp(d.log_prob[v]);
    }
  }
  return d;
}

void backward(const PolicyParams& params, const Activation& act, std::span<const double> dlogits,
              std::span<double> grad) {
  const auto& s = params.shape();
  if (grad.size() != params.size()) throw std::invalid_argument("backward: gradient size mismatch");
  const std::size_t d = s.hidden_dim;
  const std::size_t in = s.input_dim();

  auto ow = params.out_w();
  double* g_ow = grad.data() + params.out_w_offset();
  double* g_ob = grad.data() + params.out_b_offset();
  std::vector<double> dh(d, 0.0);
  for (std::size_t v = 0; v < s.vocab_size; ++v) {
    const double g = dlogits[v];
    if (g == 0.0) continue;
    g_ob[v] += g;
    double* grow = g_ow + v * d;
    const double* wrow = ow.data() + v * d;
    for (std::size_t r = 0; r < d; ++r) {
      grow[r] += g * act.hidden[r];
      dh[r] += g * wrow[r];
    }
  }

  auto hw = params.hidden_w();
  double* g_hw = grad.data() + params.embed_size();
  double* g_hb = grad.data() + params.hidden_b_offset();
  std::vector<double> dx(in, 0.0);
  for (std::size_t r = 0; r < d; ++r) {
    const double dpre = dh[r] * (1.0 - act.hidden[r] * act.hidden[r]);
    if (dpre == 0.0) continue;
    g_hb[r] += dpre;
    double* grow = g_hw + r * in;
    const double* wrow = hw.data() + r * in;
    for (std::size_t c = 0; c < in; ++c) {
      grow[c] += dpre * act.input[c];
      dx[c] += dpre * wrow[c];
    }
  }

  for (std::size_t j = 0; j < act.window.size(); ++j) {
    double* g_e = grad.data() + static_cast<std::size_t>(act.window[j]) * s.embed_dim;
    for (std::size_t c = 0; c < s.embed_dim; ++c) g_e[c] += dx[j * s.embed_dim + c];
  }
}

void add_log_prob_logit_grad(const ActionDistribution& dist, TokenId action, double scale,
                             std::span<double> dlogits) {
  for (std::size_t v = 0; v < dist.prob.size(); ++v) dlogits[v] -= scale * dist.prob[v];
  dlogits[static_cast<std::size_t>(action)] += scale;
}

double entropy_of(const ActionDistribution& dist) {
  double h = 0;
  for (std::size_t v = 0; v < dist.prob.size(); ++v) {
    if (dist.prob[v] > 0) h -= dist.prob[v] * dist.log_prob[v];
  }
  return h;
}

double kl_of(const ActionDistribution& dist, const ActionDistribution& ref) {
  double kl = 0;
  for (std::size_t v = 0; v < dist.prob.size(); ++v) {
    if (dist.prob[v] > 0) kl += dist.prob[v] * (dist.log_prob[v] - ref.log_prob[v]);
  }
  return kl;
}

double add_entropy_logit_grad(const ActionDistribution& dist, double scale, std::span<double> dlogits) {
  const double h = entropy_of(dist);
  for (std::size_t v = 0; v < dist.prob.size(); ++v) {
    if (dist.prob[v] > 0) dlogits[v] -= scale * dist.prob[v] * (dist.log_prob[v] + h);
  }
  return h;
}

double add_kl_logit_grad(const ActionDistribution& dist, const ActionDistribution& ref, double scale,
                         std::span<double> dlogits) {
  const double kl = kl_of(dist, ref);
  for (std::size_t v = 0; v < dist.prob.size(); ++v) {
    if (dist.prob[v] > 0) {
      dlogits[v] += scale * dist.prob[v] * (dist.log_prob[v] - ref.log_prob[v] - kl);
    }
  }
  return kl;
}

namespace {

void check_action(const PolicyShape& s, TokenId action) {
  if (action < 0 || static_cast<std::size_t>(action) >= s.vocab_size) {
    throw std::out_of_range("action outside vocabulary");
  }
  if (action == s.bos) throw std::invalid_argument("BOS is not a sampleable action");
}

}  // namespace

ValueGrad log_prob(const PolicyParams& params, std::span<const TokenId> history, TokenId action) {
  check_action(params.shape(), action);
  auto act = forward_history(params, history);
  auto dist = action_distribution(params.shape(), act.logits);
  std::vector<double> dlogits(act.logits.size(), 0.0);
  add_log_prob_logit_grad(dist, action, 1.0, dlogits);
  ValueGrad out{dist.log_prob[static_cast<std::size_t>(action)], std::vector<double>(params.size(), 0.0)};
  backward(params, act, dlogits, out.grad);
  return out;
}

ValueGrad entropy(const PolicyParams& params, std::span<const TokenId> history) {
  auto act = forward_history(params, history);
  auto dist = action_distribution(params.shape(), act.logits);
  std::vector<double> dlogits(act.logits.size(), 0.0);
  ValueGrad out{add_entropy_logit_grad(dist, 1.0, dlogits), std::vector<double>(params.size(), 0.0)};
  backward(params, act, dlogits, out.grad);
  return out;
}

ValueGrad kl_to_reference(const PolicyParams& params, const ReferencePolicy& ref,
                          std::span<const TokenId> history) {
  if (!(params.shape() == ref.params().shape())) {
    throw std::invalid_argument("kl_to_reference: policy and reference shapes differ");
  }
  auto act = forward_history(params, history);
  auto dist = action_distribution(params.shape(), act.logits);
  auto ref_act = forward_history(ref.params(), history);
  auto ref_dist = action_distribution(params.shape(), ref_act.logits);
  std::vector<double> dlogits(act.logits.size(), 0.0);
  ValueGrad out{add_kl_logit_grad(dist, ref_dist, 1.0, dlogits), std::vector<double>(params.size(), 0.0)};
  backward(params, act, dlogits, out.grad);
  return out;
}

TokenId sample_from(const ActionDistribution& dist, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double cum = 0;
  std::size_t last = 0;
  for (std::size_t v = 0; v < dist.prob.size(); ++v) {
    if (dist.prob[v] <= 0) continue;
    cum += dist.prob[v];
    last = v;
    if (u < cum) return static_cast<TokenId>(v);
  }
  return static_cast<TokenId>(last);
}

TokenId sample_token(const PolicyParams& params, std::span<const TokenId> history, Rng& rng) {
  auto act = forward_history(params, history);
  return sample_from(action_distribution(params.shape(), act.logits), rng);
}

Trajectory rollout(const PolicyParams& params, const Vocabulary& vocab, std::vector<TokenId> prefix,
                   std::size_t length, Rng& rng, const ScorerList& scorers) {
  if (vocab.size() != params.shape().vocab_size) {
    throw std::invalid_argument("rollout: vocabulary and policy sizes differ");
  }
  if (length == 0) throw std::invalid_argument("rollout: length must be at least 1");
  std::vector<TokenId> history = prefix;
  Trajectory traj = new_trajectory(vocab, std::move(prefix), scorers);
  auto act = forward_history(params, history);
  for (std::size_t t = 0; t < length; ++t) {
    TokenId tok = sample_from(action_distribution(params.shape(), act.logits), rng);
    history.push_back(tok);
    act = forward_history(params, history);
    traj.append(tok, act.hidden, scorers);
  }
  return traj;
}

std::vector<std::vector<double>> hidden_states(const PolicyParams& params, const Sequence& seq) {
  std::vector<TokenId> history = seq.prefix;
  std::vector<std::vector<double>> out;
  out.reserve(seq.generated.size());
  for (TokenId tok : seq.generated) {
    history.push_back(tok);
    out.push_back(forward_history(params, history).hidden);
  }
  return out;
}

namespace {

/// Mean log-likelihood over every generated token of `corpus`; adds the
/// gradient of that mean into `grad` when non-empty.
double corpus_log_likelihood(const PolicyParams& params, const std::vector<Sequence>& corpus,
                             std::span<double> grad) {
  std::size_t count = 0;
  for (const auto& s : corpus) count += s.generated.size();
  if (count == 0) throw std::invalid_argument("corpus has no generated tokens");
  const double inv = 1.0 / static_cast<double>(count);
  double total = 0;
  std::vector<double> dlogits(params.shape().vocab_size);
  for (const auto& s : corpus) {
    std::vector<TokenId> history = s.prefix;
    for (TokenId tok : s.generated) {
      check_action(params.shape(), tok);
      auto act = forward_history(params, history);
      auto dist = action_distribution(params.shape(), act.logits);
      total += dist.log_prob[static_cast<std::size_t>(tok)];
      if (!grad.empty()) {
        std::fill(dlogits.begin(), dlogits.end(), 0.0);
        add_log_prob_logit_grad(dist, tok, inv, dlogits);
        backward(params, act, dlogits, grad);
      }
      history.push_back(tok);
    }
  }
  return total * inv;
}

}  // namespace

double mean_log_likelihood(const PolicyParams& params, const std::vector<Sequence>& corpus) {
  return corpus_log_likelihood(params, corpus, {});
}

WarmupResult mle_warmup(PolicyParams params, const std::vector<Sequence>& corpus, std::size_t steps,
                        double lr) {
  if (corpus.empty()) throw std::invalid_argument("mle_warmup: empty corpus");
  WarmupResult out{params, {}};
  Optimizer opt(OptimizerKind::adam, lr, out.params.size());
  std::vector<double> grad(out.params.size());
  for (std::size_t step = 0; step < steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    out.log_likelihood.push_back(corpus_log_likelihood(out.params, corpus, grad));
    opt.step(out.params.data(), grad);
  }
  out.log_likelihood.push_back(mean_log_likelihood(out.params, corpus));
  return out;
}

void save_policy(const std::string& path, const PolicyParams& params) {
  const auto& s = params.shape();
  nlohmann::json j;
  j["format"] = "tole-policy";
  j["version"] = 1;
  j["shape"] = {{"vocab_size", s.vocab_size},
                {"bos", s.bos},
                {"context_window", s.context_window},
                {"embed_dim", s.embed_dim},
                {"hidden_dim", s.hidden_dim}};
  j["params"] = std::vector<double>(params.data().begin(), params.data().end());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << j.dump() << '\n';
}

PolicyParams load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.at("format") != "tole-policy" || j.at("version") != 1) {
    throw std::runtime_error(path + ": not a version-1 policy checkpoint");
  }
  const auto& js = j.at("shape");
  PolicyShape s{js.at("vocab_size").get<std::size_t>(), js.at("bos").get<TokenId>(),
                js.at("context_window").get<std::size_t>(), js.at("embed_dim").get<std::size_t>(),
                js.at("hidden_dim").get<std::size_t>()};
  PolicyParams p(s);
  auto values = j.at("params").get<std::vector<double>>();
  if (values.size() != p.size()) throw std::runtime_error(path + ": parameter count mismatch");
  std::copy(values.begin(), values.end(), p.data().begin());
  return p;
}

}  // namespace tole
