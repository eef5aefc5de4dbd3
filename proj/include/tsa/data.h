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

#ifndef TSA_DATA_H_
#define TSA_DATA_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsa/tensor.h"

namespace tsa {

// Labels are held 0-based in memory; both file formats store them 1-based.
struct Dataset {
  Shape feature_shape;
  std::vector<double> features;
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;
  std::string split;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_size() const { return NumElements(feature_shape); }
  // Throws DataError(kLabelRange / kMalformed) on a broken invariant.
  void Validate() const;
  bool operator==(const Dataset&) const = default;
};

class DataError : public std::runtime_error {
 public:
  enum class Kind { kIo, kMalformedHeader, kLabelRange, kTruncated };
  DataError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Interleaved 2-D spirals. Class c, point i sits at radius s = (i+1)/n and
// angle 2*pi*(c/classes + turns*s), plus isotropic Gaussian noise.
// Coordinates are rounded to float32 so files round-trip exactly.
Dataset GenSpirals(std::size_t n_per_class, std::size_t classes, double noise_std,
                   std::uint64_t seed, double turns = 1.0);

// Unit-variance Gaussian clusters centered at +separation * e_c for c < dim
// and -separation * e_{c-dim} for the next dim classes.
Dataset GenBlobs(std::size_t n_per_class, std::size_t classes, std::size_t dim,
                 double separation, std::uint64_t seed);
std::vector<double> BlobCenter(std::size_t cls, std::size_t dim, double separation);

// CSV: header "label,f1,...,fD", then one row per sample.
Dataset LoadCsv(const std::string& path);
void SaveCsv(const Dataset& ds, const std::string& path);

// Little-endian: "TSAD", u32 N, u32 T, u32 rank, u32 dims[rank],
// f32 features[N * prod(dims)], u32 labels[N].
Dataset LoadRaw(const std::string& path);
void SaveRaw(const Dataset& ds, const std::string& path);
std::vector<std::uint8_t> EncodeRaw(const Dataset& ds);
Dataset DecodeRaw(std::span<const std::uint8_t> bytes);

// Picks the loader from the file's leading bytes.
Dataset LoadDataset(const std::string& path);

struct AugmentPolicy {
  bool hflip = false;
  std::size_t shift = 0;  // max translation in pixels, zero-padded
  bool empty() const { return !hflip && shift == 0; }
};

// Per-sample random decision.
struct AugmentDraw {
  bool flip = false;
  long dy = 0;
  long dx = 0;
};

AugmentDraw DrawAugment(const AugmentPolicy& policy, std::uint64_t seed,
                        std::size_t sample);
// image is C x H x W; the shift moves content by (dy, dx).
void ApplyAugment(std::span<double> image, const Shape& chw, const AugmentDraw& draw);
// batch is N x C x H x W. Empty policy returns the batch unchanged.
Tensor Augment(const Tensor& batch, const AugmentPolicy& policy, std::uint64_t seed);

// Seeded permutation of [0, n) cut into contiguous chunks; last may be short.
std::vector<std::vector<std::size_t>> Batches(std::size_t n, std::size_t batch_size,
                                              std::uint64_t epoch_seed);

struct Batch {
  Tensor features;  // N x feature_shape
  std::vector<std::size_t> labels;
};
Batch Gather(const Dataset& ds, std::span<const std::size_t> indices);
Batch WholeSet(const Dataset& ds);

}  // namespace tsa

#endif  // TSA_DATA_H_
