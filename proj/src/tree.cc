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

#include "tsa/tree.h"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace tsa {
namespace {

void Append(TreeSpec& spec, const NestedTree& t, std::optional<std::size_t> parent,
            std::size_t depth) {
  const std::size_t h = spec.base.depth();
  if (depth > h) {
    throw std::invalid_argument("tree: node at depth " + std::to_string(depth) +
                                " exceeds network depth " + std::to_string(h));
  }
  if (t.children.empty() && depth != h) {
    throw std::invalid_argument("tree: leaf at depth " + std::to_string(depth) +
                                " does not reach the classifier at depth " +
                                std::to_string(h));
  }
  const std::size_t id = spec.nodes.size();
  spec.nodes.push_back(TreeNode{parent, depth, {}});
  if (parent) spec.nodes[*parent].children.push_back(id);
  for (const NestedTree& c : t.children) Append(spec, c, id, depth + 1);
}

NestedTree Uniform(const std::vector<std::size_t>& branching, std::size_t depth) {
  NestedTree t;
  if (depth < branching.size()) {
    t.children.assign(branching[depth], Uniform(branching, depth + 1));
  }
  return t;
}

void RequireDepth(const NetworkSpec& base, std::size_t h) {
  ValidateNetwork(base);
  if (base.depth() != h) {
    throw std::invalid_argument("tree: H=" + std::to_string(h) + " but network has " +
                                std::to_string(base.depth()) + " blocks");
  }
}

void FormatNode(const TreeSpec& spec, std::size_t id, std::string& out) {
  out += '(';
  for (std::size_t c : spec.nodes[id].children) FormatNode(spec, c, out);
  out += ')';
}

}  // namespace

TreeSpec BuildExplicit(const NetworkSpec& base, const std::vector<NestedTree>& roots) {
  ValidateNetwork(base);
  if (roots.empty()) throw std::invalid_argument("tree: no root");
  TreeSpec spec{base, {}, {}};
  for (const NestedTree& r : roots) {
    spec.roots.push_back(spec.nodes.size());
    Append(spec, r, std::nullopt, 1);
  }
  return spec;
}

TreeSpec BuildExplicit(const NetworkSpec& base, const std::string& text) {
  return BuildExplicit(base, ParseNested(text));
}

TreeSpec BuildBalanced(const NetworkSpec& base, std::size_t m, std::size_t h) {
  RequireDepth(base, h);
  if (m < 1) throw std::invalid_argument("tree: M must be at least 1");
  std::vector<std::size_t> branching(h, m);
  branching[0] = 1;
  return BuildExplicit(base, {Uniform(branching, 1)});
}

TreeSpec BuildFromBranching(const NetworkSpec& base,
                            const std::vector<std::size_t>& branching) {
  RequireDepth(base, branching.size());
  if (branching[0] != 1) {
    throw std::invalid_argument("tree: branching must start with 1 (single root)");
  }
  for (std::size_t b : branching) {
    if (b < 1) throw std::invalid_argument("tree: branching entries must be >= 1");
  }
  return BuildExplicit(base, {Uniform(branching, 1)});
}

TreeSpec BuildFullDuplication(const NetworkSpec& base, std::size_t copies) {
  if (copies < 1) throw std::invalid_argument("tree: need at least one copy");
  ValidateNetwork(base);
  std::vector<std::size_t> chain(base.depth(), 1);
  return BuildExplicit(base, std::vector<NestedTree>(copies, Uniform(chain, 1)));
}

std::vector<NestedTree> ParseNested(const std::string& text) {
  std::size_t pos = 0;
  auto skip = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  auto fail = [&](const std::string& what) -> void {
    throw std::invalid_argument("tree: " + what + " at offset " + std::to_string(pos) +
                                " in '" + text + "'");
  };
  // Recursive descent: node := '(' node* ')'
  auto parse_node = [&](auto&& self) -> NestedTree {
    skip();
    if (pos >= text.size() || text[pos] != '(') fail("expected '('");
    ++pos;
    NestedTree t;
    for (;;) {
      skip();
      if (pos >= text.size()) fail("unbalanced parentheses");
      if (text[pos] == ')') {
        ++pos;
        return t;
      }
      t.children.push_back(self(self));
    }
  };
  std::vector<NestedTree> roots;
  skip();
  while (pos < text.size()) {
    roots.push_back(parse_node(parse_node));
    skip();
  }
  if (roots.empty()) fail("empty tree");
  return roots;
}

std::string FormatNested(const TreeSpec& spec) {
  std::string out;
  for (std::size_t r : spec.roots) FormatNode(spec, r, out);
  return out;
}

std::vector<std::size_t> LeafNodes(const TreeSpec& spec) {
  std::vector<std::size_t> leaves;
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    if (spec.nodes[i].children.empty()) leaves.push_back(i);
  }
  return leaves;
}

std::size_t LeafCount(const TreeSpec& spec) { return LeafNodes(spec).size(); }

std::size_t ParamCount(const TreeSpec& spec) {
  std::size_t n = 0;
  for (const TreeNode& node : spec.nodes) n += CountParams(spec.base.blocks[node.depth - 1]);
  return n;
}

BranchId BranchOfLeaf(const TreeSpec& spec, std::size_t leaf_index) {
  const auto leaves = LeafNodes(spec);
  std::size_t id = leaves.at(leaf_index);
  BranchId path;
  while (spec.nodes[id].parent) {
    const std::size_t p = *spec.nodes[id].parent;
    const auto& ch = spec.nodes[p].children;
    path.insert(path.begin(), static_cast<std::size_t>(
                                  std::find(ch.begin(), ch.end(), id) - ch.begin()));
    id = p;
  }
  const auto r = std::find(spec.roots.begin(), spec.roots.end(), id) - spec.roots.begin();
  path.insert(path.begin(), static_cast<std::size_t>(r));
  return path;
}

std::vector<std::size_t> PathNodes(const TreeSpec& spec, const BranchId& branch) {
  if (branch.size() != spec.base.depth()) {
    throw std::out_of_range("branch: path length " + std::to_string(branch.size()) +
                            " != depth " + std::to_string(spec.base.depth()));
  }
  if (branch[0] >= spec.roots.size()) throw std::out_of_range("branch: no such root");
  std::vector<std::size_t> nodes{spec.roots[branch[0]]};
  for (std::size_t d = 1; d < branch.size(); ++d) {
    const auto& ch = spec.nodes[nodes.back()].children;
    if (branch[d] >= ch.size()) {
      throw std::out_of_range("branch: child " + std::to_string(branch[d]) +
                              " does not exist at depth " + std::to_string(d + 1));
    }
    nodes.push_back(ch[branch[d]]);
  }
  return nodes;
}

TreeNetwork Instantiate(const TreeSpec& spec, std::uint64_t seed) {
  TreeNetwork net{spec, {}, {}};
  net.params.reserve(spec.nodes.size());
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    net.params.push_back(InitParams(spec.base.blocks[spec.nodes[i].depth - 1], seed, i));
  }
  for (std::size_t k = 0; k < LeafCount(spec); ++k) {
    net.leaf_order.push_back(BranchOfLeaf(spec, k));
  }
  return net;
}

std::size_t ParamCount(const TreeNetwork& net) {
  std::size_t n = 0;
  for (const BlockParams& bp : net.params)
    for (const LayerParams& lp : bp) n += lp.weight.size() + lp.bias.size();
  return n;
}

std::vector<Var> TreeForward(Graph& graph, TreeNetwork& net, Var batch) {
  const Shape& s = batch.shape();
  if (Shape(s.begin() + 1, s.end()) != net.spec.base.input_shape) {
    throw ShapeError("tree_forward: batch " + ShapeString(s) + " vs per-sample input " +
                     ShapeString(net.spec.base.input_shape));
  }
  std::vector<Var> out(net.spec.nodes.size());
  std::vector<Var> leaves;
  for (std::size_t i = 0; i < net.spec.nodes.size(); ++i) {
    const TreeNode& node = net.spec.nodes[i];
    const Var in = node.parent ? out[*node.parent] : batch;
    out[i] = BlockForward(graph, net.params[i], net.spec.base.blocks[node.depth - 1], in);
    if (node.children.empty()) leaves.push_back(out[i]);
  }
  return leaves;
}

std::vector<Tensor> TreeLogits(TreeNetwork& net, const Tensor& batch) {
  Graph g;
  std::vector<Tensor> out;
  for (Var v : TreeForward(g, net, g.Constant(batch))) out.push_back(v.value());
  return out;
}

Network PruneToBranch(const TreeNetwork& net, const BranchId& branch) {
  Network out{net.spec.base, {}};
  for (std::size_t id : PathNodes(net.spec, branch)) out.blocks.push_back(net.params[id]);
  return out;
}

Tensor EnsembleFromLogits(const std::vector<Tensor>& leaf_logits, EnsembleMode mode) {
  if (leaf_logits.empty()) throw std::invalid_argument("ensemble: no leaves");
  Graph g;
  const double k = static_cast<double>(leaf_logits.size());
  if (mode == EnsembleMode::kLogits) {
    Tensor mean(leaf_logits[0].shape(), 0.0);
    for (const Tensor& z : leaf_logits)
      for (std::size_t i = 0; i < z.size(); ++i) mean[i] += z[i] / k;
    return Softmax(g.Constant(mean), 1.0).value();
  }
  Tensor mean(leaf_logits[0].shape(), 0.0);
  for (const Tensor& z : leaf_logits) {
    const Tensor p = Softmax(g.Constant(z), 1.0).value();
    for (std::size_t i = 0; i < p.size(); ++i) mean[i] += p[i] / k;
  }
  return mean;
}

Tensor EnsemblePredict(TreeNetwork& net, const Tensor& batch, EnsembleMode mode) {
  return EnsembleFromLogits(TreeLogits(net, batch), mode);
}

}  // namespace tsa
