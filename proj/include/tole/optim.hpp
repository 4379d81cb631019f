#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace tole {

enum class OptimizerKind { sgd, adam };

OptimizerKind parse_optimizer(std::string_view s);
std::string_view to_string(OptimizerKind k);

/// Gradient *ascent* optimiser over a flat parameter vector.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr, std::size_t size, double beta1 = 0.9,
            double beta2 = 0.999, double eps = 1e-8);

  /// params += lr * update(grad). Throws std::invalid_argument on a size mismatch.
  void step(std::span<double> params, std::span<const double> grad);

  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return lr_; }
  std::size_t steps_taken() const { return t_; }

 private:
  OptimizerKind kind_;
  double lr_;
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<double> m_, v_;
};

/// One-shot form; a fresh Adam state each call (first-step behaviour).
void optimizer_step(std::span<double> params, std::span<const double> grad, double lr,
                    OptimizerKind kind);

}  // namespace tole
