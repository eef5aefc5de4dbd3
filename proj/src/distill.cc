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

#include "tsa/distill.h"

#include <cmath>
#include <stdexcept>

namespace tsa {

std::string ToString(PeerGradient mode) {
  return mode == PeerGradient::kDetached ? "detached" : "coupled";
}

PeerGradient ParsePeerGradient(const std::string& text) {
  if (text == "detached") return PeerGradient::kDetached;
  if (text == "coupled") return PeerGradient::kCoupled;
  throw std::invalid_argument("peer_gradient must be 'detached' or 'coupled', got '" +
                              text + "'");
}

void DistillConfig::Validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument("temperature must be positive, got " +
                                std::to_string(temperature));
  }
}

Var SoftmaxTemp(Var logits, double temperature) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("softmax_temp: temperature must be positive");
  }
  return Softmax(logits, temperature);
}

Tensor SoftmaxTemp(const Tensor& logits, double temperature) {
  Graph g;
  return SoftmaxTemp(g.Constant(logits), temperature).value();
}

Var CrossEntropy(Var logits, const std::vector<std::size_t>& labels) {
  return Nll(LogSoftmax(logits, 1.0), labels);
}

Var KlDivergence(Var p, Var q) { return KlDiv(p, q); }

double KlDivergence(const Tensor& p, const Tensor& q) {
  Graph g;
  return KlDiv(g.Constant(p), g.Constant(q)).value()[0];
}

Var PeerDistillLoss(std::size_t k, std::span<const Var> probs,
                    PeerGradient peer_gradient) {
  const std::size_t n = probs.size();
  if (n < 2) throw std::invalid_argument("peer_distill_loss: needs at least 2 branches");
  if (k >= n) throw std::out_of_range("peer_distill_loss: branch index out of range");
  Var acc;
  bool first = true;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == k) continue;
    const Var teacher =
        peer_gradient == PeerGradient::kDetached ? Detach(probs[j]) : probs[j];
    const Var term = KlDiv(probs[k], teacher);
    acc = first ? term : Add(acc, term);
    first = false;
  }
  return Scale(acc, 1.0 / static_cast<double>(n - 1));
}

namespace {

JointLoss JointLossImpl(std::span<const Var> leaf_logits,
                        const std::vector<std::size_t>& labels,
                        const DistillConfig& cfg,
                        std::span<const Tensor> teacher_probs) {
  cfg.Validate();
  const std::size_t k_count = leaf_logits.size();
  if (k_count == 0) throw std::invalid_argument("joint_loss: no leaves");
  const bool frozen = !teacher_probs.empty();
  if (frozen && teacher_probs.size() != k_count) {
    throw std::invalid_argument("joint_loss: expected one teacher per leaf");
  }

  std::vector<Var> soft;
  if (k_count >= 2) {
    for (Var z : leaf_logits) soft.push_back(SoftmaxTemp(z, cfg.temperature));
  }
  const double t2 = cfg.temperature * cfg.temperature;

  JointLoss out;
  bool first = true;
  for (std::size_t k = 0; k < k_count; ++k) {
    const Var ce = CrossEntropy(leaf_logits[k], labels);
    out.cross_entropy += ce.value()[0];
    Var term = Scale(ce, 1.0 - cfg.alpha);
    if (k_count >= 2) {
      Var d;
      if (frozen) {
        Graph& g = *soft[k].graph();
        std::vector<Var> probs;
        for (std::size_t j = 0; j < k_count; ++j) {
          probs.push_back(j == k ? soft[k] : g.Constant(teacher_probs[j]));
        }
        d = PeerDistillLoss(k, probs, PeerGradient::kCoupled);
      } else {
        d = PeerDistillLoss(k, soft, cfg.peer_gradient);
      }
      out.distillation += d.value()[0];
      term = Add(term, Scale(d, cfg.alpha * t2));
    }
    out.total = first ? term : Add(out.total, term);
    first = false;
  }
  return out;
}

}  // namespace

JointLoss ComputeJointLoss(std::span<const Var> leaf_logits,
                           const std::vector<std::size_t>& labels,
                           const DistillConfig& cfg) {
  return JointLossImpl(leaf_logits, labels, cfg, {});
}

JointLoss ComputeJointLoss(std::span<const Var> leaf_logits,
                           const std::vector<std::size_t>& labels,
                           const DistillConfig& cfg,
                           std::span<const Tensor> teacher_probs) {
  return JointLossImpl(leaf_logits, labels, cfg, teacher_probs);
}

double MeanPairwiseKl(const std::vector<Tensor>& leaf_logits, double temperature) {
  const std::size_t n = leaf_logits.size();
  if (n < 2) return 0.0;
  std::vector<Tensor> probs;
  for (const Tensor& z : leaf_logits) probs.push_back(SoftmaxTemp(z, temperature));
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t t = 0; t < n; ++t)
      if (k != t) s += KlDivergence(probs[k], probs[t]);
  return s / static_cast<double>(n * (n - 1));
}

}  // namespace tsa
