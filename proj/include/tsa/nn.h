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

#ifndef TSA_NN_H_
#define TSA_NN_H_

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "tsa/autodiff.h"
#include "tsa/random.h"
#include "tsa/tensor.h"

namespace tsa {

struct LinearSpec {
  std::size_t in = 0;
  std::size_t out = 0;
  bool operator==(const LinearSpec&) const = default;
};
struct ReluSpec {
  bool operator==(const ReluSpec&) const = default;
};
struct ConvSpec {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;
  bool operator==(const ConvSpec&) const = default;
};
struct MaxPoolSpec {
  std::size_t window = 2;
  bool operator==(const MaxPoolSpec&) const = default;
};
struct FlattenSpec {
  bool operator==(const FlattenSpec&) const = default;
};

using LayerSpec =
    std::variant<LinearSpec, ReluSpec, ConvSpec, MaxPoolSpec, FlattenSpec>;

struct BlockSpec {
  std::vector<LayerSpec> layers;
  bool operator==(const BlockSpec&) const = default;
};

// The network to be trained: an ordered block sequence whose last block
// ends in the classifier (a linear layer producing class logits).
struct NetworkSpec {
  Shape input_shape;  // per sample, e.g. {2} or {3, 8, 8}
  std::vector<BlockSpec> blocks;

  std::size_t depth() const { return blocks.size(); }
  std::size_t num_classes() const;
  bool operator==(const NetworkSpec&) const = default;
};

// Weight/bias of one layer; both empty for parameter-free layers.
struct LayerParams {
  Tensor weight;
  Tensor bias;
};
using BlockParams = std::vector<LayerParams>;

// Per-sample output shape of a layer or block. Throws ShapeError.
Shape LayerOutputShape(const LayerSpec& layer, const Shape& in);
Shape BlockOutputShape(const BlockSpec& block, const Shape& in);

// Throws ShapeError (or std::invalid_argument for structural faults) if the
// network is not a valid chain of at least two blocks ending in a classifier.
void ValidateNetwork(const NetworkSpec& spec);

// Fan-in uniform weights U(-sqrt(6/fan_in), sqrt(6/fan_in)) from a
// counter-based stream keyed by (seed, instance_id, layer index); zero biases.
BlockParams InitParams(const BlockSpec& block, std::uint64_t seed,
                       std::uint64_t instance_id);

Var LayerForward(Graph& graph, LayerParams& params, const LayerSpec& layer,
                 Var input);
Var BlockForward(Graph& graph, BlockParams& params, const BlockSpec& block,
                 Var input);

std::size_t CountParams(const LayerSpec& layer);
std::size_t CountParams(const BlockSpec& block);
std::size_t CountParams(const NetworkSpec& spec);

// A standalone chain network, e.g. one pruned branch of a tree.
struct Network {
  NetworkSpec spec;
  std::vector<BlockParams> blocks;
};

// Block i receives instance id i.
Network InstantiateNetwork(const NetworkSpec& spec, std::uint64_t seed);
Var NetworkForward(Graph& graph, Network& net, Var input);
// Logits for a batch, outside of any caller-visible graph.
Tensor NetworkLogits(Network& net, const Tensor& batch);

// Text form used by config files and snapshots, e.g. "linear 2 32",
// "conv 3 8 3 1 1", "maxpool 2", "relu", "flatten".
std::string FormatLayer(const LayerSpec& layer);
LayerSpec ParseLayer(const std::string& text);
// Comma-separated layer list.
std::string FormatBlock(const BlockSpec& block);
BlockSpec ParseBlock(const std::string& text);

}  // namespace tsa

#endif  // TSA_NN_H_
