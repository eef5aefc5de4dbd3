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

// Tape-based reverse-mode differentiation. Every op evaluates eagerly and
// appends a record to its Graph; Backward() replays the tape in reverse.

#ifndef TSA_AUTODIFF_H_
#define TSA_AUTODIFF_H_

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tsa/tensor.h"

namespace tsa {

enum class OpKind {
  kConstant,
  kParam,
  kMatmul,
  kAdd,
  kMul,
  kRelu,
  kExp,
  kLog,
  kSum,
  kMean,
  kReshape,
  kConcat,
  kConv2d,
  kMaxPool2d,
  kScale,
  // Fused, numerically stabilized ops used by the losses.
  kSoftmax,
  kLogSoftmax,
  kKlDiv,
  kNll,
  kDetach,
};

std::string_view OpName(OpKind kind);

struct OpAttrs {
  double scalar = 1.0;       // scale factor; temperature for (log_)softmax
  std::size_t stride = 1;    // conv2d
  std::size_t padding = 0;   // conv2d
  std::size_t window = 2;    // maxpool2d
  std::size_t axis = 0;      // concat
  Shape shape;               // reshape target
  std::vector<std::size_t> labels;  // nll, 0-based class per row
};

using NodeId = std::size_t;

class Graph;

// Lightweight handle to a node of a Graph. The graph must outlive it.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, NodeId id) : graph_(graph), id_(id) {}

  NodeId id() const { return id_; }
  Graph* graph() const { return graph_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Graph* graph_ = nullptr;
  NodeId id_ = 0;
};

// Result of Graph::Backward: d(loss)/d(node) for every node of the graph.
class Gradients {
 public:
  const Tensor& of(Var v) const { return grads_.at(v.id()); }
  const Tensor& of(NodeId id) const { return grads_.at(id); }
  std::size_t size() const { return grads_.size(); }

 private:
  friend class Graph;
  std::vector<Tensor> grads_;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Non-differentiable leaf (inputs, targets).
  Var Constant(Tensor value);
  // Differentiable leaf bound to external storage. Registering the same
  // storage twice returns the same node.
  Var Param(Tensor& storage);

  Var Apply(OpKind kind, std::span<const Var> inputs, const OpAttrs& attrs = {});

  // Loss must be a single-element tensor of this graph.
  Gradients Backward(Var loss) const;

  std::size_t num_nodes() const { return nodes_.size(); }
  const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
  OpKind kind(NodeId id) const { return nodes_.at(id).kind; }
  const std::vector<NodeId>& inputs(NodeId id) const { return nodes_.at(id).inputs; }

  struct ParamBinding {
    Tensor* storage;
    NodeId node;
  };
  const std::vector<ParamBinding>& params() const { return params_; }

 private:
  struct Node {
    OpKind kind;
    std::vector<NodeId> inputs;
    Tensor value;
    OpAttrs attrs;
    std::vector<std::size_t> argmax;  // maxpool2d
  };

  Var Push(Node node);
  void BackwardNode(const Node& node, const Tensor& grad,
                    std::vector<Tensor>& grads,
                    std::vector<bool>& reached) const;

  std::vector<Node> nodes_;
  std::vector<ParamBinding> params_;
  std::unordered_map<const Tensor*, NodeId> param_index_;
};

// Typed wrappers over Graph::Apply.
Var Matmul(Var a, Var b);
Var Add(Var a, Var b);
Var Mul(Var a, Var b);
Var Relu(Var x);
Var Exp(Var x);
Var Log(Var x);
Var Sum(Var x);
Var Mean(Var x);
Var Reshape(Var x, Shape shape);
Var Concat(std::span<const Var> parts, std::size_t axis);
Var Conv2d(Var input, Var kernel, std::size_t stride, std::size_t padding);
Var Conv2d(Var input, Var kernel, Var bias, std::size_t stride,
           std::size_t padding);
Var MaxPool2d(Var x, std::size_t window);
Var Scale(Var x, double factor);
Var Softmax(Var logits, double temperature);
Var LogSoftmax(Var logits, double temperature);
Var KlDiv(Var p, Var q);
Var Nll(Var log_probs, std::vector<std::size_t> labels);
Var Detach(Var x);

// Floor applied to q inside log(q) by KlDiv.
inline constexpr double kProbFloor = 1e-12;

// Central-difference gradient check. `loss_fn` builds a scalar loss in the
// supplied graph, reading parameters through Graph::Param. Returns the max
// over all entries of |analytic - numeric| / max(1e-12, |analytic| + |numeric|),
// or +inf if any evaluation is not finite.
double FiniteDiffCheck(const std::function<Var(Graph&)>& loss_fn,
                       std::span<Tensor* const> params, double epsilon);

}  // namespace tsa

#endif  // TSA_AUTODIFF_H_
