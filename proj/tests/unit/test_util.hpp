#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tole/core.hpp"

namespace tole::testing {

// Central differences, written independently of the library's oracle.
inline std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                            std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

inline double max_rel_error(std::span<const double> a, std::span<const double> n, double floor = 1e-3) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(n[i]), floor});
    worst = std::max(worst, std::abs(a[i] - n[i]) / denom);
  }
  return worst;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

class ConstantScorer final : public AttributeScorer {
 public:
  ConstantScorer(std::string name, double value) : name_(std::move(name)), value_(value) {}
  const std::string& name() const override { return name_; }
  double score(std::span<const TokenId>) const override { return value_; }

 private:
  std::string name_;
  double value_;
};

}  // namespace tole::testing
