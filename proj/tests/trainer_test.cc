/* Copyright 2026 The TSA Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "tsa/trainer.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.h"

namespace tsa {
namespace {

using testing::Mlp3;
using testing::ToMatrix;

TEST(SgdStepTest, Examples) {
  Tensor w({1}, {1.0}), v({1}, {0.0});
  SgdStep(w, v, Tensor({1}, {2.0}), 0.1, 0.0, 0.0);
  EXPECT_NEAR(w[0], 0.8, 1e-15);
  Tensor u({2}, {3.0, -4.0}), uv({2}, 0.0);
  SgdStep(u, uv, Tensor({2}, 0.0), 0.1, 0.9, 0.0);
  EXPECT_EQ(u, Tensor({2}, {3.0, -4.0}));
}

TEST(SgdStepTest, MomentumAndWeightDecay) {
  Tensor w({1}, {1.0}), v({1}, {1.0});
  SgdStep(w, v, Tensor({1}, {1.0}), 0.5, 0.9, 0.1);
  EXPECT_NEAR(v[0], 0.9 + 1.0 + 0.1, 1e-15);
  EXPECT_NEAR(w[0], 1.0 - 0.5 * 2.0, 1e-15);
}

TEST(LrAtTest, StepSchedule) {
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.lr0 = 0.1;
  EXPECT_DOUBLE_EQ(LrAt(10, cfg), 0.1);
  EXPECT_DOUBLE_EQ(LrAt(149, cfg), 0.1);
  EXPECT_NEAR(LrAt(150, cfg), 0.01, 1e-15);
  EXPECT_NEAR(LrAt(225, cfg), 0.001, 1e-15);
  EXPECT_NEAR(LrAt(299, cfg), 0.001, 1e-15);
  cfg.lr_drops.clear();
  EXPECT_EQ(LrAt(299, cfg), 0.1);
}

TEST(TrainConfigTest, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.Validate());
  cfg.momentum = 1.0;
  EXPECT_THROW(cfg.Validate(), std::invalid_argument);
  cfg = {};
  cfg.lr_drops = {{0.75, 0.1}, {0.5, 0.1}};
  EXPECT_THROW(cfg.Validate(), std::invalid_argument);
  cfg = {};
  cfg.weight_decay = -1;
  EXPECT_THROW(cfg.Validate(), std::invalid_argument);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.Validate(), std::invalid_argument);
}

TEST(AccuracyTest, ArgmaxTieBreakAndExamples) {
  const double row[] = {0.2, 0.5, 0.5};
  EXPECT_EQ(ArgmaxRow(row), 1u);
  const Tensor onehot({3, 3}, {1, 0, 0, 0, 0, 1, 0, 1, 0});
  EXPECT_EQ(Accuracy(onehot, {0, 2, 1}), 1.0);
  const Tensor uniform({8, 4}, 0.25);
  EXPECT_EQ(Accuracy(uniform, {0, 1, 2, 3, 0, 1, 2, 3}), 0.25);
  EXPECT_EQ(Accuracy(uniform, {1, 1, 2, 3, 2, 1, 2, 3}), 0.0);
}

struct Fixture {
  Dataset train = GenSpirals(40, 3, 0.1, 1);
  Dataset test = GenSpirals(20, 3, 0.1, 2);
};

TEST(TrainTest, ZeroEpochsIsANoOp) {
  Fixture f;
  TreeNetwork net = Instantiate(BuildBalanced(Mlp3(2, 8, 3), 2, 3), 0);
  const TreeNetwork before = net;
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_TRUE(Train(net, f.train, f.test, cfg).empty());
  for (std::size_t n = 0; n < net.params.size(); ++n)
    for (std::size_t l = 0; l < net.params[n].size(); ++l)
      EXPECT_EQ(net.params[n][l].weight, before.params[n][l].weight);
}

TEST(TrainTest, DeterministicMetrics) {
  Fixture f;
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.seed = 5;
  auto run = [&] {
    TreeNetwork net = Instantiate(BuildBalanced(Mlp3(2, 8, 3), 2, 3), cfg.seed);
    return Train(net, f.train, f.test, cfg);
  };
  const Metrics a = run();
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a, run());
  EXPECT_EQ(MetricsToJsonLines(a), MetricsToJsonLines(run()));
  for (const auto& m : a) {
    EXPECT_EQ(m.branch_accuracy.size(), 4u);
    for (double acc : m.branch_accuracy) {
      EXPECT_GE(acc, 0.0);
      EXPECT_LE(acc, 1.0);
    }
  }
  cfg.seed = 6;
  EXPECT_NE(MetricsToJsonLines(a), MetricsToJsonLines(run()));
}

TEST(TrainTest, CallbackSeesEveryEpoch) {
  Fixture f;
  TrainConfig cfg;
  cfg.epochs = 2;
  TreeNetwork net = Instantiate(BuildBalanced(Mlp3(2, 4, 3), 1, 3), 0);
  std::vector<std::size_t> seen;
  Train(net, f.train, f.test, cfg, [&](const EpochMetrics& m) { seen.push_back(m.epoch); });
  EXPECT_EQ(seen, (std::vector<std::size_t>{1, 2}));
}

TEST(TrainTest, SingleBranchMatchesStandaloneOracle) {
  Fixture f;
  const NetworkSpec spec = Mlp3(2, 8, 3);
  for (std::size_t epochs : {1u, 4u}) {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = epochs == 1 ? f.train.size() : 16;
    cfg.distill.alpha = 0.0;
    cfg.seed = 3;
    TreeNetwork net = Instantiate(BuildBalanced(spec, 1, 3), cfg.seed);
    std::vector<BlockParams> oracle = net.params;
    Train(net, f.train, f.test, cfg);
    testing::OracleSgd(spec, oracle, f.train, cfg);
    EXPECT_LT(testing::MaxParamDiff(net.params, oracle), 1e-10) << epochs;
    EXPECT_GT(testing::MaxParamDiff(net.params, Instantiate(BuildBalanced(spec, 1, 3), 3).params), 1e-4);
  }
}

TEST(TrainTest, SharedBlocksStayOneStorage) {
  Fixture f;
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 32;
  TreeNetwork net = Instantiate(BuildBalanced(Mlp3(2, 8, 3), 2, 3), 0);
  Train(net, f.train, f.test, cfg, [&](const EpochMetrics&) {
    const Network a = PruneToBranch(net, net.leaf_order[0]);
    const Network b = PruneToBranch(net, net.leaf_order[3]);
    EXPECT_EQ(a.blocks[0][0].weight, b.blocks[0][0].weight);
    EXPECT_FALSE(a.blocks[1][0].weight == b.blocks[1][0].weight);
  });
}

TEST(EvaluateTest, PrunedAccuracyEqualsInTreeAccuracy) {
  Fixture f;
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  TreeNetwork net = Instantiate(BuildBalanced(Mlp3(2, 8, 3), 2, 3), 0);
  Train(net, f.train, f.test, cfg);
  const Evaluation ev = Evaluate(net, f.test, EnsembleMode::kProbabilities, 3.0);
  for (std::size_t k = 0; k < net.num_leaves(); ++k) {
    Network pruned = PruneToBranch(net, net.leaf_order[k]);
    EXPECT_EQ(Evaluate(pruned, f.test), ev.branch_accuracy[k]);
  }
  std::vector<Tensor> leaves = TreeLogits(net, WholeSet(f.test).features);
  EXPECT_DOUBLE_EQ(ev.mean_pairwise_kl, MeanPairwiseKl(leaves, 3.0));
  EXPECT_EQ(ev.ensemble_accuracy,
            Accuracy(EnsembleFromLogits(leaves), WholeSet(f.test).labels));
}

TEST(TrainTest, NonFiniteLossRaisesDivergence) {
  Fixture f;
  TrainConfig cfg;
  cfg.epochs = 1;
  TreeNetwork net = Instantiate(BuildBalanced(Mlp3(2, 4, 3), 1, 3), 0);
  net.params[0][0].weight[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(Train(net, f.train, f.test, cfg), DivergenceError);
}

TEST(TrainTest, RejectsMismatchedData) {
  Fixture f;
  TrainConfig cfg;
  TreeNetwork net = Instantiate(BuildBalanced(Mlp3(3, 4, 3), 1, 3), 0);
  EXPECT_THROW(Train(net, f.train, f.test, cfg), ShapeError);
}

TEST(MetricsTest, JsonLinesAndSummary) {
  Fixture f;
  TrainConfig cfg;
  cfg.epochs = 2;
  TreeNetwork net = Instantiate(BuildBalanced(Mlp3(2, 4, 3), 2, 3), 0);
  const Metrics m = Train(net, f.train, f.test, cfg);
  const std::string jl = MetricsToJsonLines(m);
  EXPECT_EQ(std::count(jl.begin(), jl.end(), '\n'), 2);
  EXPECT_EQ(jl.rfind("{\"epoch\":1,\"lr\":", 0), 0u);
  const std::string csv = SummaryCsv(net, m);
  EXPECT_EQ(csv.rfind("branch,path,test_accuracy\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
}

}  // namespace
}  // namespace tsa
