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

// Deterministic random sources. Everything here is specified bit-for-bit so
// runs reproduce across standard library implementations.

#ifndef TSA_RANDOM_H_
#define TSA_RANDOM_H_

#include <cstdint>
#include <random>

namespace tsa {

// Uniform double in [0, 1) at position `counter` of the stream keyed by
// (seed, stream, substream). Pure function.
double CounterUniform(std::uint64_t seed, std::uint64_t stream,
                      std::uint64_t substream, std::uint64_t counter);

// Sequential generator over std::mt19937_64 with portable derived
// distributions (the std:: distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double Uniform();                      // [0, 1)
  std::uint64_t Below(std::uint64_t n);  // [0, n), unbiased
  double Normal();                       // N(0, 1), Box-Muller

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tsa

#endif  // TSA_RANDOM_H_
