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

#ifndef TSA_TREE_H_
#define TSA_TREE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsa/autodiff.h"
#include "tsa/nn.h"

namespace tsa {

// Node of a training-time tree. A node at depth d (1-based) is an instance
// of block d of the base network.
struct TreeNode {
  std::optional<std::size_t> parent;
  std::size_t depth = 1;
  std::vector<std::size_t> children;
  bool operator==(const TreeNode&) const = default;
};

// Nodes are stored in preorder (children ascending), so node ids double as
// init stream ids and leaves appear in canonical order. Usually a single
// root; several roots duplicate the whole network (independent peers).
struct TreeSpec {
  NetworkSpec base;
  std::vector<TreeNode> nodes;
  std::vector<std::size_t> roots;
  bool operator==(const TreeSpec&) const = default;
};

// Child indices from the root list down to a leaf; path[0] picks the root.
using BranchId = std::vector<std::size_t>;

// Nested child lists, the input to BuildExplicit.
struct NestedTree {
  std::vector<NestedTree> children;
};

// Balanced tree with M children per internal node: M^(H-1) leaves.
TreeSpec BuildBalanced(const NetworkSpec& base, std::size_t m, std::size_t h);
// branching[d] children for every node at depth d; branching[0] must be 1.
TreeSpec BuildFromBranching(const NetworkSpec& base,
                            const std::vector<std::size_t>& branching);
// Arbitrary topology, including unbalanced trees. Every leaf must sit at
// depth H.
TreeSpec BuildExplicit(const NetworkSpec& base,
                       const std::vector<NestedTree>& roots);
// `text` uses the parenthesized form, e.g. "((()())(()))".
TreeSpec BuildExplicit(const NetworkSpec& base, const std::string& text);
// K independent copies of the whole network.
TreeSpec BuildFullDuplication(const NetworkSpec& base, std::size_t copies);

std::vector<NestedTree> ParseNested(const std::string& text);
std::string FormatNested(const TreeSpec& spec);

std::size_t LeafCount(const TreeSpec& spec);
std::size_t ParamCount(const TreeSpec& spec);
// Leaf node ids in canonical order.
std::vector<std::size_t> LeafNodes(const TreeSpec& spec);
BranchId BranchOfLeaf(const TreeSpec& spec, std::size_t leaf_index);
// Node ids from root to leaf. Throws std::out_of_range on an invalid path.
std::vector<std::size_t> PathNodes(const TreeSpec& spec, const BranchId& branch);

struct TreeNetwork {
  TreeSpec spec;
  std::vector<BlockParams> params;  // indexed by node id
  std::vector<BranchId> leaf_order;

  std::size_t num_leaves() const { return leaf_order.size(); }
};

// Node n is initialized with InitParams(block, seed, n).
TreeNetwork Instantiate(const TreeSpec& spec, std::uint64_t seed);
std::size_t ParamCount(const TreeNetwork& net);

// Evaluates every node once; children consume the parent's output. Leaf
// logits come back in leaf_order.
std::vector<Var> TreeForward(Graph& graph, TreeNetwork& net, Var batch);
std::vector<Tensor> TreeLogits(TreeNetwork& net, const Tensor& batch);

// Standalone copy of one root-to-leaf branch.
Network PruneToBranch(const TreeNetwork& net, const BranchId& branch);

enum class EnsembleMode { kProbabilities, kLogits };

// Mean of per-leaf softmax (default) or softmax of mean logits.
Tensor EnsemblePredict(TreeNetwork& net, const Tensor& batch,
                       EnsembleMode mode = EnsembleMode::kProbabilities);
Tensor EnsembleFromLogits(const std::vector<Tensor>& leaf_logits,
                          EnsembleMode mode = EnsembleMode::kProbabilities);

}  // namespace tsa

#endif  // TSA_TREE_H_
