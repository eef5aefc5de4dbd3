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

#ifndef TSA_TRAINER_H_
#define TSA_TRAINER_H_

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsa/data.h"
#include "tsa/distill.h"
#include "tsa/nn.h"
#include "tsa/tree.h"

namespace tsa {

// Multiply the learning rate by `factor` once `fraction` of training is done.
struct LrDrop {
  double fraction = 0.5;
  double factor = 0.1;
  bool operator==(const LrDrop&) const = default;
};

struct TrainConfig {
  std::size_t epochs = 1;
  std::size_t batch_size = 128;
  double lr0 = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::vector<LrDrop> lr_drops = {{0.5, 0.1}, {0.75, 0.1}};
  std::uint64_t seed = 0;
  DistillConfig distill;
  AugmentPolicy augment;
  EnsembleMode ensemble = EnsembleMode::kProbabilities;

  // Throws std::invalid_argument. epochs == 0 is accepted (a no-op run).
  void Validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;
  double train_loss = 0.0;           // joint objective, sample-weighted mean
  double train_ce = 0.0;             // per-leaf mean cross-entropy
  double train_distill = 0.0;        // per-leaf mean peer KL, unscaled
  double mean_pairwise_kl = 0.0;     // on the test set at the distill temperature
  std::vector<double> branch_accuracy;  // test set, leaf order
  double ensemble_accuracy = 0.0;
  bool operator==(const EpochMetrics&) const = default;
};
using Metrics = std::vector<EpochMetrics>;

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// lr0 times every factor whose drop point (fraction * epochs) has been
// reached. `epoch` is 0-based.
double LrAt(std::size_t epoch, const TrainConfig& cfg);

// Shuffle seed for one epoch; `epoch` is 0-based.
std::uint64_t EpochSeed(std::uint64_t seed, std::size_t epoch);

// v <- momentum * v + grad + weight_decay * param;  param <- param - lr * v.
void SgdStep(Tensor& param, Tensor& velocity, const Tensor& grad, double lr,
             double momentum, double weight_decay);

// Row argmax with ties resolved toward the lowest class index.
std::size_t ArgmaxRow(std::span<const double> row);
double Accuracy(const Tensor& scores, const std::vector<std::size_t>& labels);

struct Evaluation {
  std::vector<double> branch_accuracy;
  double ensemble_accuracy = 0.0;
  double mean_pairwise_kl = 0.0;
};
Evaluation Evaluate(TreeNetwork& net, const Dataset& data, EnsembleMode mode,
                    double kl_temperature = 1.0);
double Evaluate(Network& net, const Dataset& data);

using EpochCallback = std::function<void(const EpochMetrics&)>;

// Seeded minibatch SGD on the joint objective. Throws DivergenceError when
// the loss stops being finite.
Metrics Train(TreeNetwork& net, const Dataset& train, const Dataset& test,
              const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// One JSON object per line per epoch.
std::string MetricsToJsonLines(const Metrics& metrics);
// Final-epoch accuracies per branch plus the ensemble.
std::string SummaryCsv(const TreeNetwork& net, const Metrics& metrics);

}  // namespace tsa

#endif  // TSA_TRAINER_H_
