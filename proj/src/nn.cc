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

#include "tsa/nn.h"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tsa {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::size_t FanIn(const LayerSpec& layer) {
  return std::visit(Overloaded{
                        [](const LinearSpec& l) { return l.in; },
                        [](const ConvSpec& c) { return c.in_channels * c.kernel * c.kernel; },
                        [](const auto&) { return std::size_t{0}; },
                    },
                    layer);
}

}  // namespace

std::size_t NetworkSpec::num_classes() const {
  if (blocks.empty() || blocks.back().layers.empty()) return 0;
  if (const auto* l = std::get_if<LinearSpec>(&blocks.back().layers.back())) return l->out;
  return 0;
}

Shape LayerOutputShape(const LayerSpec& layer, const Shape& in) {
  return std::visit(
      Overloaded{
          [&](const LinearSpec& l) -> Shape {
            if (l.in == 0 || l.out == 0) throw ShapeError("linear: zero extent");
            if (in != Shape{l.in}) {
              throw ShapeError("linear(" + std::to_string(l.in) + "," +
                               std::to_string(l.out) + "): input " + ShapeString(in));
            }
            return {l.out};
          },
          [&](const ReluSpec&) -> Shape { return in; },
          [&](const ConvSpec& c) -> Shape {
            if (c.in_channels == 0 || c.out_channels == 0 || c.kernel == 0 || c.stride == 0) {
              throw ShapeError("conv: zero extent");
            }
            if (in.size() != 3 || in[0] != c.in_channels) {
              throw ShapeError("conv(" + std::to_string(c.in_channels) +
                               " channels): input " + ShapeString(in));
            }
            if (in[1] + 2 * c.padding < c.kernel || in[2] + 2 * c.padding < c.kernel) {
              throw ShapeError("conv: kernel " + std::to_string(c.kernel) +
                               " larger than padded input " + ShapeString(in));
            }
            return {c.out_channels, (in[1] + 2 * c.padding - c.kernel) / c.stride + 1,
                    (in[2] + 2 * c.padding - c.kernel) / c.stride + 1};
          },
          [&](const MaxPoolSpec& m) -> Shape {
            if (m.window == 0 || in.size() != 3 || in[1] < m.window || in[2] < m.window) {
              throw ShapeError("maxpool(" + std::to_string(m.window) + "): input " +
                               ShapeString(in));
            }
            return {in[0], in[1] / m.window, in[2] / m.window};
          },
          [&](const FlattenSpec&) -> Shape { return {NumElements(in)}; },
      },
      layer);
}

Shape BlockOutputShape(const BlockSpec& block, const Shape& in) {
  if (block.layers.empty()) throw std::invalid_argument("block: no layers");
  Shape s = in;
  for (const auto& l : block.layers) s = LayerOutputShape(l, s);
  return s;
}

void ValidateNetwork(const NetworkSpec& spec) {
  if (spec.blocks.size() < 2) {
    throw std::invalid_argument("network: need at least 2 blocks, got " +
                                std::to_string(spec.blocks.size()));
  }
  if (spec.input_shape.empty()) throw std::invalid_argument("network: no input shape");
  Shape s = spec.input_shape;
  for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
    try {
      s = BlockOutputShape(spec.blocks[b], s);
    } catch (const std::invalid_argument& e) {
      throw ShapeError("block " + std::to_string(b + 1) + ": " + e.what());
    }
  }
  if (spec.num_classes() == 0) {
    throw std::invalid_argument("network: last block must end in a linear classifier");
  }
}

BlockParams InitParams(const BlockSpec& block, std::uint64_t seed,
                       std::uint64_t instance_id) {
  BlockParams out(block.layers.size());
  for (std::size_t i = 0; i < block.layers.size(); ++i) {
    const LayerSpec& layer = block.layers[i];
    Shape wshape;
    std::size_t nbias = 0;
    if (const auto* l = std::get_if<LinearSpec>(&layer)) {
      wshape = {l->in, l->out};
      nbias = l->out;
    } else if (const auto* c = std::get_if<ConvSpec>(&layer)) {
      wshape = {c->out_channels, c->in_channels, c->kernel, c->kernel};
      nbias = c->out_channels;
    } else {
      continue;
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(FanIn(layer)));
    Tensor w(wshape);
    for (std::size_t k = 0; k < w.size(); ++k) {
      w[k] = (2.0 * CounterUniform(seed, instance_id, i, k) - 1.0) * bound;
    }
    out[i].weight = std::move(w);
    out[i].bias = Tensor({nbias}, 0.0);
  }
  return out;
}

Var LayerForward(Graph& graph, LayerParams& params, const LayerSpec& layer,
                 Var input) {
  return std::visit(
      Overloaded{
          [&](const LinearSpec&) {
            return Add(Matmul(input, graph.Param(params.weight)),
                       graph.Param(params.bias));
          },
          [&](const ReluSpec&) { return Relu(input); },
          [&](const ConvSpec& c) {
            return Conv2d(input, graph.Param(params.weight), graph.Param(params.bias),
                          c.stride, c.padding);
          },
          [&](const MaxPoolSpec& m) { return MaxPool2d(input, m.window); },
          [&](const FlattenSpec&) {
            const Shape& s = input.shape();
            return Reshape(input, {s[0], input.value().size() / s[0]});
          },
      },
      layer);
}

Var BlockForward(Graph& graph, BlockParams& params, const BlockSpec& block,
                 Var input) {
  if (params.size() != block.layers.size()) {
    throw std::invalid_argument("block_forward: " + std::to_string(params.size()) +
                                " parameter slots for " +
                                std::to_string(block.layers.size()) + " layers");
  }
  Var x = input;
  for (std::size_t i = 0; i < block.layers.size(); ++i) {
    x = LayerForward(graph, params[i], block.layers[i], x);
  }
  return x;
}

std::size_t CountParams(const LayerSpec& layer) {
  return std::visit(Overloaded{
                        [](const LinearSpec& l) { return l.in * l.out + l.out; },
                        [](const ConvSpec& c) {
                          return c.in_channels * c.out_channels * c.kernel * c.kernel +
                                 c.out_channels;
                        },
                        [](const auto&) { return std::size_t{0}; },
                    },
                    layer);
}

std::size_t CountParams(const BlockSpec& block) {
  std::size_t n = 0;
  for (const auto& l : block.layers) n += CountParams(l);
  return n;
}

std::size_t CountParams(const NetworkSpec& spec) {
  std::size_t n = 0;
  for (const auto& b : spec.blocks) n += CountParams(b);
  return n;
}

Network InstantiateNetwork(const NetworkSpec& spec, std::uint64_t seed) {
  ValidateNetwork(spec);
  Network net{spec, {}};
  for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
    net.blocks.push_back(InitParams(spec.blocks[b], seed, b));
  }
  return net;
}

Var NetworkForward(Graph& graph, Network& net, Var input) {
  Var x = input;
  for (std::size_t b = 0; b < net.spec.blocks.size(); ++b) {
    x = BlockForward(graph, net.blocks[b], net.spec.blocks[b], x);
  }
  return x;
}

Tensor NetworkLogits(Network& net, const Tensor& batch) {
  Graph g;
  return NetworkForward(g, net, g.Constant(batch)).value();
}

std::string FormatLayer(const LayerSpec& layer) {
  return std::visit(
      Overloaded{
          [](const LinearSpec& l) {
            return "linear " + std::to_string(l.in) + " " + std::to_string(l.out);
          },
          [](const ReluSpec&) { return std::string("relu"); },
          [](const ConvSpec& c) {
            return "conv " + std::to_string(c.in_channels) + " " +
                   std::to_string(c.out_channels) + " " + std::to_string(c.kernel) +
                   " " + std::to_string(c.stride) + " " + std::to_string(c.padding);
          },
          [](const MaxPoolSpec& m) { return "maxpool " + std::to_string(m.window); },
          [](const FlattenSpec&) { return std::string("flatten"); },
      },
      layer);
}

LayerSpec ParseLayer(const std::string& text) {
  std::istringstream is(text);
  std::string kind;
  is >> kind;
  std::vector<long long> args;
  std::string tok;
  while (is >> tok) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(tok, &used);
      if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
      args.push_back(v);
    } catch (const std::exception&) {
      throw std::invalid_argument("layer '" + text + "': bad argument '" + tok + "'");
    }
  }
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi) {
      throw std::invalid_argument("layer '" + text + "': wrong number of arguments");
    }
    for (std::size_t i = 0; i < args.size(); ++i) {
      // padding may be zero, everything else must be positive
      if (args[i] == 0 && !(kind == "conv" && i == 4)) {
        throw std::invalid_argument("layer '" + text + "': dimensions must be positive");
      }
    }
  };
  auto u = [&](std::size_t i) { return static_cast<std::size_t>(args[i]); };
  if (kind == "linear") {
    need(2, 2);
    return LinearSpec{u(0), u(1)};
  }
  if (kind == "relu") {
    need(0, 0);
    return ReluSpec{};
  }
  if (kind == "conv") {
    need(3, 5);
    ConvSpec c{u(0), u(1), u(2), 1, 0};
    if (args.size() > 3) c.stride = u(3);
    if (args.size() > 4) c.padding = u(4);
    return c;
  }
  if (kind == "maxpool") {
    need(1, 1);
    return MaxPoolSpec{u(0)};
  }
  if (kind == "flatten") {
    need(0, 0);
    return FlattenSpec{};
  }
  throw std::invalid_argument("unknown layer kind '" + kind + "'");
}

std::string FormatBlock(const BlockSpec& block) {
  std::string out;
  for (std::size_t i = 0; i < block.layers.size(); ++i) {
    if (i) out += ", ";
    out += FormatLayer(block.layers[i]);
  }
  return out;
}

BlockSpec ParseBlock(const std::string& text) {
  BlockSpec block;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) throw std::invalid_argument("block '" + text + "': empty layer");
    block.layers.push_back(ParseLayer(item));
  }
  if (block.layers.empty()) throw std::invalid_argument("block: no layers");
  return block;
}

}  // namespace tsa
