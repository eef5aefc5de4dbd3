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

#include <cmath>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace tsa {
namespace {

constexpr std::size_t kEvalChunk = 512;

std::string PathString(const BranchId& b) {
  std::string s;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (i) s += '.';
    s += std::to_string(b[i]);
  }
  return s;
}

}  // namespace

void TrainConfig::Validate() const {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (!(lr0 > 0.0)) throw std::invalid_argument("lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
  double prev = 0.0;
  for (const LrDrop& d : lr_drops) {
    if (!(d.fraction > prev && d.fraction < 1.0)) {
      throw std::invalid_argument(
          "lr_drops fractions must lie in (0, 1) and strictly increase");
    }
    if (!(d.factor > 0.0)) throw std::invalid_argument("lr_drops factor must be positive");
    prev = d.fraction;
  }
  distill.Validate();
}

std::uint64_t EpochSeed(std::uint64_t seed, std::size_t epoch) {
  return seed * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL * (epoch + 1);
}

double LrAt(std::size_t epoch, const TrainConfig& cfg) {
  double lr = cfg.lr0;
  for (const LrDrop& d : cfg.lr_drops) {
    if (static_cast<double>(epoch) >= d.fraction * static_cast<double>(cfg.epochs)) {
      lr *= d.factor;
    }
  }
  return lr;
}

void SgdStep(Tensor& param, Tensor& velocity, const Tensor& grad, double lr,
             double momentum, double weight_decay) {
  if (param.shape() != grad.shape() || param.shape() != velocity.shape()) {
    throw ShapeError("sgd_step: param " + ShapeString(param.shape()) + ", grad " +
                     ShapeString(grad.shape()) + ", velocity " +
                     ShapeString(velocity.shape()));
  }
  for (std::size_t i = 0; i < param.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grad[i] + weight_decay * param[i];
    param[i] -= lr * velocity[i];
  }
}

std::size_t ArgmaxRow(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

double Accuracy(const Tensor& scores, const std::vector<std::size_t>& labels) {
  const std::size_t n = scores.dim(0);
  const std::size_t c = scores.size() / n;
  if (labels.size() != n) throw ShapeError("accuracy: label count mismatch");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (ArgmaxRow(scores.values().subspan(i * c, c)) == labels[i]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(n);
}

Evaluation Evaluate(TreeNetwork& net, const Dataset& data, EnsembleMode mode,
                    double kl_temperature) {
  const std::size_t k = net.num_leaves();
  std::vector<std::size_t> branch_hits(k, 0);
  std::size_t ensemble_hits = 0;
  double kl_weighted = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += kEvalChunk) {
    idx.clear();
    for (std::size_t i = start; i < std::min(data.size(), start + kEvalChunk); ++i) {
      idx.push_back(i);
    }
    const Batch b = Gather(data, idx);
    const auto logits = TreeLogits(net, b.features);
    const Tensor ens = EnsembleFromLogits(logits, mode);
    const std::size_t c = ens.dim(1);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t leaf = 0; leaf < k; ++leaf) {
        if (ArgmaxRow(logits[leaf].values().subspan(i * c, c)) == b.labels[i]) {
          ++branch_hits[leaf];
        }
      }
      if (ArgmaxRow(ens.values().subspan(i * c, c)) == b.labels[i]) ++ensemble_hits;
    }
    kl_weighted += MeanPairwiseKl(logits, kl_temperature) * static_cast<double>(idx.size());
  }
  const double n = static_cast<double>(data.size());
  Evaluation ev;
  for (std::size_t h : branch_hits) ev.branch_accuracy.push_back(static_cast<double>(h) / n);
  ev.ensemble_accuracy = static_cast<double>(ensemble_hits) / n;
  ev.mean_pairwise_kl = kl_weighted / n;
  return ev;
}

double Evaluate(Network& net, const Dataset& data) {
  std::size_t hits = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += kEvalChunk) {
    idx.clear();
    for (std::size_t i = start; i < std::min(data.size(), start + kEvalChunk); ++i) {
      idx.push_back(i);
    }
    const Batch b = Gather(data, idx);
    const Tensor logits = NetworkLogits(net, b.features);
    const std::size_t c = logits.dim(1);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (ArgmaxRow(logits.values().subspan(i * c, c)) == b.labels[i]) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

Metrics Train(TreeNetwork& net, const Dataset& train, const Dataset& test,
              const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.Validate();
  if (train.feature_shape != net.spec.base.input_shape ||
      test.feature_shape != net.spec.base.input_shape) {
    throw ShapeError("train: dataset features " + ShapeString(train.feature_shape) +
                     " vs network input " + ShapeString(net.spec.base.input_shape));
  }
  if (train.num_classes > net.spec.base.num_classes() ||
      test.num_classes > net.spec.base.num_classes()) {
    throw std::invalid_argument("train: dataset has more classes than the classifier");
  }

  std::unordered_map<const Tensor*, Tensor> velocity;
  for (BlockParams& bp : net.params)
    for (LayerParams& lp : bp) {
      if (!lp.weight.empty()) velocity.emplace(&lp.weight, Tensor(lp.weight.shape(), 0.0));
      if (!lp.bias.empty()) velocity.emplace(&lp.bias, Tensor(lp.bias.shape(), 0.0));
    }

  const double leaves = static_cast<double>(net.num_leaves());
  Metrics history;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = LrAt(epoch, cfg);
    const std::uint64_t epoch_seed = EpochSeed(cfg.seed, epoch);
    double loss_sum = 0.0, ce_sum = 0.0, distill_sum = 0.0;
    const auto batches = Batches(train.size(), cfg.batch_size, epoch_seed);
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      Batch b = Gather(train, batches[bi]);
      if (!cfg.augment.empty()) {
        b.features = Augment(b.features, cfg.augment, epoch_seed + 7919 * (bi + 1));
      }
      Graph g;
      const auto logits = TreeForward(g, net, g.Constant(std::move(b.features)));
      const JointLoss loss = ComputeJointLoss(logits, b.labels, cfg.distill);
      const double value = loss.total.value()[0];
      if (!std::isfinite(value)) {
        throw DivergenceError("loss diverged (" + std::to_string(value) + ") at epoch " +
                              std::to_string(epoch + 1) + ", batch " +
                              std::to_string(bi + 1));
      }
      const Gradients grads = g.Backward(loss.total);
      for (const auto& p : g.params()) {
        SgdStep(*p.storage, velocity.at(p.storage), grads.of(p.node), lr, cfg.momentum,
                cfg.weight_decay);
      }
      const double w = static_cast<double>(b.labels.size());
      loss_sum += value * w;
      ce_sum += loss.cross_entropy / leaves * w;
      distill_sum += loss.distillation / leaves * w;
    }

    const double n = static_cast<double>(train.size());
    const Evaluation ev = Evaluate(net, test, cfg.ensemble, cfg.distill.temperature);
    EpochMetrics m;
    m.epoch = epoch + 1;
    m.lr = lr;
    m.train_loss = loss_sum / n;
    m.train_ce = ce_sum / n;
    m.train_distill = distill_sum / n;
    m.mean_pairwise_kl = ev.mean_pairwise_kl;
    m.branch_accuracy = ev.branch_accuracy;
    m.ensemble_accuracy = ev.ensemble_accuracy;
    history.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return history;
}

std::string MetricsToJsonLines(const Metrics& metrics) {
  std::string out;
  for (const EpochMetrics& m : metrics) {
    nlohmann::ordered_json j;
    j["epoch"] = m.epoch;
    j["lr"] = m.lr;
    j["train_loss"] = m.train_loss;
    j["train_ce"] = m.train_ce;
    j["train_distill"] = m.train_distill;
    j["mean_pairwise_kl"] = m.mean_pairwise_kl;
    j["branch_accuracy"] = m.branch_accuracy;
    j["ensemble_accuracy"] = m.ensemble_accuracy;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string SummaryCsv(const TreeNetwork& net, const Metrics& metrics) {
  std::ostringstream os;
  os.precision(17);
  os << "branch,path,test_accuracy\n";
  if (metrics.empty()) return os.str();
  const EpochMetrics& last = metrics.back();
  for (std::size_t k = 0; k < last.branch_accuracy.size(); ++k) {
    os << k + 1 << ',' << PathString(net.leaf_order.at(k)) << ','
       << last.branch_accuracy[k] << '\n';
  }
  os << "ensemble,," << last.ensemble_accuracy << '\n';
  return os.str();
}

}  // namespace tsa
