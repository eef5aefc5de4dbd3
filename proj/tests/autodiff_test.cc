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

#include "tsa/autodiff.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.h"
#include "tsa/distill.h"

namespace tsa {
namespace {

using testing::RandomTensor;

TEST(AutodiffTest, ReluForward) {
  Graph g;
  Var y = Relu(g.Constant(Tensor({3}, {-1, 0, 2})));
  EXPECT_EQ(y.value(), Tensor({3}, {0, 0, 2}));
}

TEST(AutodiffTest, MatmulIdentity) {
  std::mt19937_64 rng(1);
  Graph g;
  Tensor eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tensor a = RandomTensor({3, 3}, rng);
  EXPECT_EQ(Matmul(g.Constant(eye), g.Constant(a)).value(), a);
}

TEST(AutodiffTest, Conv2dMatchesSlidingWindow) {
  std::mt19937_64 rng(2);
  Tensor x = RandomTensor({1, 1, 4, 4}, rng);
  Tensor k = RandomTensor({1, 1, 3, 3}, rng);
  Graph g;
  Var y = Conv2d(g.Constant(x), g.Constant(k), 1, 0);
  Shape shape;
  const auto expected = testing::Conv2dRef(x, k, 1, 0, &shape);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(y.value()[i], expected[i], 1e-14);
}

TEST(AutodiffTest, Conv2dStridePaddingMultiChannel) {
  std::mt19937_64 rng(3);
  Tensor x = RandomTensor({2, 3, 5, 6}, rng);
  Tensor k = RandomTensor({4, 3, 3, 3}, rng);
  Graph g;
  Var y = Conv2d(g.Constant(x), g.Constant(k), 2, 1);
  Shape shape;
  const auto expected = testing::Conv2dRef(x, k, 2, 1, &shape);
  ASSERT_EQ(y.shape(), shape);
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(y.value()[i], expected[i], 1e-13);
}

TEST(AutodiffTest, MaxPoolPicksWindowMaximum) {
  Graph g;
  Tensor x({1, 1, 2, 4}, {1, 5, 2, 0, 3, 4, 8, 7});
  EXPECT_EQ(MaxPool2d(g.Constant(x), 2).value(), Tensor({1, 1, 1, 2}, {5, 8}));
}

TEST(AutodiffTest, ConcatAlongAxes) {
  Graph g;
  Var a = g.Constant(Tensor({2, 1}, {1, 2}));
  Var b = g.Constant(Tensor({2, 2}, {3, 4, 5, 6}));
  const Var cols[] = {a, b};
  EXPECT_EQ(Concat(cols, 1).value(), Tensor({2, 3}, {1, 3, 4, 2, 5, 6}));
  const Var rows[] = {b, b};
  EXPECT_EQ(Concat(rows, 0).value(), Tensor({4, 2}, {3, 4, 5, 6, 3, 4, 5, 6}));
}

TEST(AutodiffTest, AddBroadcastsOverLeadingAxis) {
  Graph g;
  Var y = Add(g.Constant(Tensor({2, 2}, {1, 2, 3, 4})), g.Constant(Tensor({2}, {10, 20})));
  EXPECT_EQ(y.value(), Tensor({2, 2}, {11, 22, 13, 24}));
}

TEST(AutodiffTest, ShapeErrorsNameOpAndExtents) {
  Graph g;
  Var a = g.Constant(Tensor({2, 3}));
  Var b = g.Constant(Tensor({2, 3}));
  try {
    Matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("matmul"), std::string::npos);
    EXPECT_NE(msg.find("[2x3]"), std::string::npos);
  }
  EXPECT_THROW(Add(a, g.Constant(Tensor({2}))), ShapeError);
  EXPECT_THROW(Mul(a, g.Constant(Tensor({3, 2}))), ShapeError);
  EXPECT_THROW(Reshape(a, {4}), ShapeError);
  EXPECT_THROW(Conv2d(g.Constant(Tensor({1, 2, 4, 4})), g.Constant(Tensor({1, 3, 3, 3})), 1, 0),
               ShapeError);
  EXPECT_THROW(MaxPool2d(g.Constant(Tensor({1, 1, 1, 1})), 2), ShapeError);
  EXPECT_THROW(Nll(g.Constant(Tensor({1, 3})), {3}), ShapeError);
}

TEST(AutodiffTest, BackwardOfSumIsOnes) {
  Graph g;
  Tensor x({3}, {4, -5, 6});
  Var px = g.Param(x);
  const Gradients grads = g.Backward(Sum(px));
  EXPECT_EQ(grads.of(px), Tensor({3}, {1, 1, 1}));
}

TEST(AutodiffTest, BackwardThroughReluGate) {
  Graph g;
  Tensor x({2}, {-1, 2});
  Var px = g.Param(x);
  EXPECT_EQ(g.Backward(Sum(Relu(px))).of(px), Tensor({2}, {0, 1}));
}

TEST(AutodiffTest, BackwardRejectsNonScalarLoss) {
  Graph g;
  Tensor x({2}, {1, 2});
  EXPECT_THROW(g.Backward(g.Param(x)), ShapeError);
}

TEST(AutodiffTest, UnreachableParameterGetsExactZero) {
  Graph g;
  Tensor used({2}, {1, 2});
  Tensor unused({3}, {7, 8, 9});
  Var pu = g.Param(used);
  Var pn = g.Param(unused);
  Exp(pn);  // on the tape, but not on the loss path
  const Gradients grads = g.Backward(Sum(Mul(pu, pu)));
  EXPECT_EQ(grads.of(pn), Tensor({3}, 0.0));
  EXPECT_EQ(grads.of(pu), Tensor({2}, {2, 4}));
}

TEST(AutodiffTest, DetachBlocksGradient) {
  Graph g;
  Tensor x({2}, {1, 2});
  Var px = g.Param(x);
  const Gradients grads = g.Backward(Sum(Mul(px, Detach(px))));
  EXPECT_EQ(grads.of(px), Tensor({2}, {1, 2}));
}

TEST(AutodiffTest, SameStorageRegistersOnce) {
  Graph g;
  Tensor x({1}, {3});
  EXPECT_EQ(g.Param(x).id(), g.Param(x).id());
  EXPECT_EQ(g.params().size(), 1u);
}

TEST(AutodiffTest, ForwardIsBitwiseDeterministic) {
  std::mt19937_64 rng(4);
  Tensor x = RandomTensor({4, 5}, rng);
  Tensor w = RandomTensor({5, 3}, rng);
  auto run = [&] {
    Graph g;
    return LogSoftmax(Matmul(g.Constant(x), g.Constant(w)), 2.0).value();
  };
  EXPECT_EQ(run(), run());
}

TEST(FiniteDiffCheckTest, Square) {
  Tensor w({1}, {3.0});
  Tensor* params[] = {&w};
  const double err = FiniteDiffCheck(
      [&](Graph& g) {
        Var p = g.Param(w);
        return Sum(Mul(p, p));
      },
      params, 1e-5);
  EXPECT_LT(err, 1e-10);
}

TEST(FiniteDiffCheckTest, SumOfSoftmaxHasVanishingGradient) {
  Tensor w({1, 4}, {0.3, -1.2, 2.0, 0.7});
  Graph g;
  Var p = g.Param(w);
  const Gradients grads = g.Backward(Sum(SoftmaxTemp(p, 3.0)));
  for (double v : grads.of(p).values()) EXPECT_NEAR(v, 0.0, 1e-15);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double saved = w[i];
    w[i] = saved + 1e-5;
    const double up = SoftmaxTemp(w, 3.0).buffer()[0] + SoftmaxTemp(w, 3.0).buffer()[1] +
                      SoftmaxTemp(w, 3.0).buffer()[2] + SoftmaxTemp(w, 3.0).buffer()[3];
    w[i] = saved - 1e-5;
    const double down = SoftmaxTemp(w, 3.0).buffer()[0] + SoftmaxTemp(w, 3.0).buffer()[1] +
                        SoftmaxTemp(w, 3.0).buffer()[2] + SoftmaxTemp(w, 3.0).buffer()[3];
    w[i] = saved;
    EXPECT_NEAR((up - down) / 2e-5, 0.0, 1e-9);
  }
}

TEST(FiniteDiffCheckTest, NonFiniteLossReportsInfinity) {
  Tensor w({1}, {-1.0});
  Tensor* params[] = {&w};
  const double err = FiniteDiffCheck([&](Graph& g) { return Sum(Log(g.Param(w))); }, params, 1e-5);
  EXPECT_TRUE(std::isinf(err));
}

TEST(FiniteDiffCheckTest, TwoLayerPerceptronCrossEntropy) {
  std::mt19937_64 rng(5);
  Tensor x = RandomTensor({6, 4}, rng);
  Tensor w1 = RandomTensor({4, 5}, rng), b1 = RandomTensor({5}, rng);
  Tensor w2 = RandomTensor({5, 3}, rng), b2 = RandomTensor({3}, rng);
  const std::vector<std::size_t> y = {0, 1, 2, 2, 1, 0};
  Tensor* params[] = {&w1, &b1, &w2, &b2};
  const double err = FiniteDiffCheck(
      [&](Graph& g) {
        Var h = Relu(Add(Matmul(g.Constant(x), g.Param(w1)), g.Param(b1)));
        return CrossEntropy(Add(Matmul(h, g.Param(w2)), g.Param(b2)), y);
      },
      params, 1e-5);
  EXPECT_LT(err, 1e-5);
}

// Property: every op's analytic gradient matches central differences on
// randomized inputs. The loss projects the op output onto a random tensor.
struct OpCase {
  const char* name;
  std::vector<Shape> shapes;
  double lo, hi;
  std::function<Var(Graph&, std::vector<Var>&)> build;
};

class OpGradientTest : public ::testing::TestWithParam<int> {};

std::vector<OpCase> OpCases() {
  const std::vector<std::size_t> labels = {2, 0, 1};
  return {
      {"matmul", {{3, 4}, {4, 2}}, -1, 1, [](Graph&, auto& v) { return Matmul(v[0], v[1]); }},
      {"add", {{3, 4}, {4}}, -1, 1, [](Graph&, auto& v) { return Add(v[0], v[1]); }},
      {"mul", {{3, 4}, {3, 4}}, -1, 1, [](Graph&, auto& v) { return Mul(v[0], v[1]); }},
      {"relu", {{3, 4}}, 0.1, 1, [](Graph& g, auto& v) {
         return Relu(Add(v[0], g.Constant(Tensor({4}, {-0.5, 0.6, -2, 2}))));
       }},
      {"exp", {{3, 4}}, -1, 1, [](Graph&, auto& v) { return Exp(v[0]); }},
      {"log", {{3, 4}}, 0.5, 2, [](Graph&, auto& v) { return Log(v[0]); }},
      {"sum", {{3, 4}}, -1, 1, [](Graph&, auto& v) { return Scale(Sum(v[0]), 0.7); }},
      {"mean", {{3, 4}}, -1, 1, [](Graph&, auto& v) { return Scale(Mean(v[0]), 1.3); }},
      {"reshape", {{3, 4}}, -1, 1, [](Graph&, auto& v) { return Reshape(v[0], {2, 6}); }},
      {"concat", {{3, 2}, {3, 4}}, -1, 1, [](Graph&, auto& v) {
         const Var parts[] = {v[0], v[1]};
         return Concat(parts, 1);
       }},
      {"conv2d", {{2, 2, 5, 5}, {3, 2, 3, 3}, {3}}, -1, 1,
       [](Graph&, auto& v) { return Conv2d(v[0], v[1], v[2], 2, 1); }},
      {"maxpool2d", {{2, 2, 4, 4}}, -1, 1, [](Graph&, auto& v) { return MaxPool2d(v[0], 2); }},
      {"scale", {{3, 4}}, -1, 1, [](Graph&, auto& v) { return Scale(v[0], -2.5); }},
      {"softmax", {{3, 4}}, -2, 2, [](Graph&, auto& v) { return Softmax(v[0], 3.0); }},
      {"log_softmax", {{3, 4}}, -2, 2, [](Graph&, auto& v) { return LogSoftmax(v[0], 0.7); }},
      {"kl_div", {{3, 4}, {3, 4}}, -2, 2, [](Graph&, auto& v) {
         return KlDiv(Softmax(v[0], 1.0), Softmax(v[1], 2.0));
       }},
      {"nll", {{3, 4}}, -2, 2, [labels](Graph&, auto& v) {
         return Nll(LogSoftmax(v[0], 1.0), labels);
       }},
  };
}

TEST_P(OpGradientTest, MatchesCentralDifferences) {
  const OpCase c = OpCases()[GetParam()];
  for (int trial = 0; trial < 5; ++trial) {
    std::mt19937_64 rng(100 * GetParam() + trial);
    std::vector<Tensor> inputs;
    for (const Shape& s : c.shapes) inputs.push_back(RandomTensor(s, rng, c.lo, c.hi));
    std::vector<Tensor*> ptrs;
    for (Tensor& t : inputs) ptrs.push_back(&t);
    Tensor projection;
    const double err = FiniteDiffCheck(
        [&](Graph& g) {
          std::vector<Var> vars;
          for (Tensor& t : inputs) vars.push_back(g.Param(t));
          Var out = c.build(g, vars);
          if (projection.empty()) projection = RandomTensor(out.shape(), rng);
          return Sum(Mul(out, g.Constant(projection)));
        },
        ptrs, 1e-5);
    EXPECT_LT(err, 1e-5) << c.name << " trial " << trial;
  }
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradientTest, ::testing::Range(0, 17),
                         [](const auto& info) { return std::string(OpCases()[info.param].name); });

}  // namespace
}  // namespace tsa
