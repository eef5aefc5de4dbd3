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

#ifndef TSA_DISTILL_H_
#define TSA_DISTILL_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tsa/autodiff.h"

namespace tsa {

// Whether a peer's soft targets pass gradient back into that peer.
enum class PeerGradient { kDetached, kCoupled };

std::string ToString(PeerGradient mode);
PeerGradient ParsePeerGradient(const std::string& text);

struct DistillConfig {
  double alpha = 0.5;        // weight of the distillation term, in [0, 1]
  double temperature = 3.0;  // softening applied to distillation targets
  PeerGradient peer_gradient = PeerGradient::kDetached;

  // Throws std::invalid_argument on out-of-range values.
  void Validate() const;
};

// softmax(z / T) over the last axis, max-subtracted.
Var SoftmaxTemp(Var logits, double temperature);
Tensor SoftmaxTemp(const Tensor& logits, double temperature);

// Mean over the batch of -log softmax(z)[label]; labels are 0-based.
Var CrossEntropy(Var logits, const std::vector<std::size_t>& labels);

// Mean over the batch of sum_t p_t log(p_t / max(q_t, 1e-12)).
Var KlDivergence(Var p, Var q);
double KlDivergence(const Tensor& p, const Tensor& q);

// (1 / (K-1)) * sum_{j != k} KL(p_k || p_j). With kDetached every p_j acts
// as a constant teacher. Requires K >= 2.
Var PeerDistillLoss(std::size_t k, std::span<const Var> probs,
                    PeerGradient peer_gradient);

struct JointLoss {
  Var total;
  double cross_entropy = 0.0;  // sum over leaves of CE_k
  double distillation = 0.0;   // sum over leaves of the peer term, unscaled
};

// sum_k (1 - alpha) * CE_k + alpha * T^2 * D_k, CE at temperature 1 and the
// peer term at cfg.temperature. D_k is zero when there is a single leaf.
JointLoss ComputeJointLoss(std::span<const Var> leaf_logits,
                           const std::vector<std::size_t>& labels,
                           const DistillConfig& cfg);

// Same, with peer soft targets given as constants (one per leaf, already at
// cfg.temperature). For kDetached this has the gradient of the overload
// above while staying a plain function of the parameters, which is what a
// finite-difference check needs.
JointLoss ComputeJointLoss(std::span<const Var> leaf_logits,
                           const std::vector<std::size_t>& labels,
                           const DistillConfig& cfg,
                           std::span<const Tensor> teacher_probs);

// Mean over ordered leaf pairs (k, t), k != t, of KL(p_k || p_t) at the
// given temperature. Zero for a single leaf.
double MeanPairwiseKl(const std::vector<Tensor>& leaf_logits, double temperature);

}  // namespace tsa

#endif  // TSA_DISTILL_H_
