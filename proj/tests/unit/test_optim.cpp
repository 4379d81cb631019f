#include <gtest/gtest.h>

#include "tole/optim.hpp"

using namespace tole;

TEST(Optimizer, ZeroGradientLeavesParametersUnchanged) {
  for (auto kind : {OptimizerKind::sgd, OptimizerKind::adam}) {
    std::vector<double> p{0.3, -1.2, 4.0};
    const auto before = p;
    std::vector<double> g(3, 0.0);
    Optimizer opt(kind, 0.1, p.size());
    for (int i = 0; i < 5; ++i) opt.step(p, g);
    EXPECT_EQ(p, before);
  }
}

TEST(Optimizer, SgdAscentWithUnitRate) {
  std::vector<double> p{0.0, 0.0}, g{1.0, -2.0};
  optimizer_step(p, g, 1.0, OptimizerKind::sgd);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
}

TEST(Optimizer, AdamFirstStepMovesByLrTimesSign) {
  std::vector<double> p{0.0, 0.0, 0.0}, g{3.0, -0.01, 250.0};
  optimizer_step(p, g, 1e-2, OptimizerKind::adam);
  EXPECT_NEAR(p[0], 1e-2, 1e-8);
  EXPECT_NEAR(p[1], -1e-2, 1e-7);
  EXPECT_NEAR(p[2], 1e-2, 1e-8);
}

TEST(Optimizer, AdamKeepsMomentAcrossSteps) {
  std::vector<double> p{0.0};
  Optimizer opt(OptimizerKind::adam, 0.1, 1);
  std::vector<double> g{1.0};
  opt.step(p, g);
  opt.step(p, g);
  EXPECT_EQ(opt.steps_taken(), 2u);
  EXPECT_NEAR(p[0], 0.2, 1e-6);  // constant gradient keeps the update at lr per step
}

TEST(Optimizer, InvalidUseThrows) {
  std::vector<double> p(3), g(2);
  EXPECT_THROW(optimizer_step(p, g, 0.1, OptimizerKind::sgd), std::invalid_argument);
  EXPECT_THROW(Optimizer(OptimizerKind::adam, 0.0, 3), std::invalid_argument);
  Optimizer opt(OptimizerKind::adam, 0.1, 4);
  std::vector<double> g3(3);
  EXPECT_THROW(opt.step(p, g3), std::invalid_argument);
  EXPECT_EQ(parse_optimizer("adam"), OptimizerKind::adam);
  EXPECT_EQ(to_string(OptimizerKind::sgd), "sgd");
  EXPECT_THROW(parse_optimizer("rmsprop"), std::invalid_argument);
}
