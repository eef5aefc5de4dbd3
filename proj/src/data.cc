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

#include "tsa/data.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

#include "tsa/random.h"

namespace tsa {
namespace {

constexpr char kRawMagic[4] = {'T', 'S', 'A', 'D'};

double ToF32(double v) { return static_cast<double>(static_cast<float>(v)); }

void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t GetU32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

std::uint32_t Checked32(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw DataError(DataError::Kind::kMalformedHeader, std::string(what) + " exceeds u32");
  return static_cast<std::uint32_t>(v);
}

std::vector<std::uint8_t> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataError::Kind::kIo, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteFile(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(DataError::Kind::kIo, "cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError(DataError::Kind::kIo, "write failed for '" + path + "'");
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> SplitComma(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string cell;
  while (std::getline(is, cell, ',')) out.push_back(Trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void Dataset::Validate() const {
  using K = DataError::Kind;
  if (labels.empty()) throw DataError(K::kMalformedHeader, "dataset: no samples");
  if (feature_shape.empty() || feature_size() == 0) {
    throw DataError(K::kMalformedHeader, "dataset: empty feature shape");
  }
  if (features.size() != labels.size() * feature_size()) {
    throw DataError(K::kTruncated, "dataset: " + std::to_string(features.size()) +
                                       " feature values for " +
                                       std::to_string(labels.size()) + " samples of " +
                                       ShapeString(feature_shape));
  }
  if (num_classes == 0) throw DataError(K::kMalformedHeader, "dataset: zero classes");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) {
      throw DataError(K::kLabelRange, "dataset: row " + std::to_string(i + 1) +
                                          " label " + std::to_string(labels[i] + 1) +
                                          " outside 1.." + std::to_string(num_classes));
    }
  }
}

Dataset GenSpirals(std::size_t n_per_class, std::size_t classes, double noise_std,
                   std::uint64_t seed, double turns) {
  if (n_per_class == 0 || classes == 0) throw std::invalid_argument("spirals: empty");
  if (noise_std < 0.0) throw std::invalid_argument("spirals: negative noise");
  Rng rng(seed);
  Dataset ds{{2}, {}, {}, classes, "spirals"};
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      const double s = static_cast<double>(i + 1) / static_cast<double>(n_per_class);
      const double angle = 2.0 * std::numbers::pi *
                           (static_cast<double>(c) / static_cast<double>(classes) + turns * s);
      const double nx = rng.Normal();
      const double ny = rng.Normal();
      ds.features.push_back(ToF32(s * std::cos(angle) + noise_std * nx));
      ds.features.push_back(ToF32(s * std::sin(angle) + noise_std * ny));
      ds.labels.push_back(c);
    }
  }
  return ds;
}

std::vector<double> BlobCenter(std::size_t cls, std::size_t dim, double separation) {
  if (cls >= 2 * dim) throw std::invalid_argument("blobs: at most 2*dim classes");
  std::vector<double> c(dim, 0.0);
  c[cls % dim] = cls < dim ? separation : -separation;
  return c;
}

Dataset GenBlobs(std::size_t n_per_class, std::size_t classes, std::size_t dim,
                 double separation, std::uint64_t seed) {
  if (n_per_class == 0 || classes == 0 || dim == 0) throw std::invalid_argument("blobs: empty");
  Rng rng(seed);
  Dataset ds{{dim}, {}, {}, classes, "blobs"};
  for (std::size_t c = 0; c < classes; ++c) {
    const auto center = BlobCenter(c, dim, separation);
    for (std::size_t i = 0; i < n_per_class; ++i) {
      for (std::size_t d = 0; d < dim; ++d) ds.features.push_back(ToF32(center[d] + rng.Normal()));
      ds.labels.push_back(c);
    }
  }
  return ds;
}

Dataset LoadCsv(const std::string& path) {
  using K = DataError::Kind;
  std::ifstream in(path);
  if (!in) throw DataError(K::kIo, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(K::kMalformedHeader, path + ": empty file");
  const auto header = SplitComma(Trim(line));
  if (header.size() < 2 || header[0] != "label") {
    throw DataError(K::kMalformedHeader,
                    path + ": header must be 'label,f1,...,fD', got '" + Trim(line) + "'");
  }
  const std::size_t dim = header.size() - 1;
  Dataset ds{{dim}, {}, {}, 0, "csv"};
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (Trim(line).empty()) continue;
    ++row;
    const auto cells = SplitComma(Trim(line));
    if (cells.size() != header.size()) {
      throw DataError(K::kTruncated, path + ": row " + std::to_string(row) + " has " +
                                         std::to_string(cells.size()) + " cells, expected " +
                                         std::to_string(header.size()));
    }
    long long label = 0;
    const auto& lc = cells[0];
    auto [lp, lec] = std::from_chars(lc.data(), lc.data() + lc.size(), label);
    if (lec != std::errc() || lp != lc.data() + lc.size()) {
      throw DataError(K::kLabelRange, path + ": row " + std::to_string(row) +
                                          " label '" + lc + "' is not an integer");
    }
    if (label < 1) {
      throw DataError(K::kLabelRange, path + ": row " + std::to_string(row) + " label " +
                                          std::to_string(label) + " below 1");
    }
    ds.labels.push_back(static_cast<std::size_t>(label - 1));
    ds.num_classes = std::max(ds.num_classes, static_cast<std::size_t>(label));
    for (std::size_t d = 1; d < cells.size(); ++d) {
      double v = 0.0;
      const auto& c = cells[d];
      auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc() || p != c.data() + c.size()) {
        throw DataError(K::kTruncated, path + ": row " + std::to_string(row) +
                                           " column " + std::to_string(d + 1) +
                                           " value '" + c + "' is not a number");
      }
      ds.features.push_back(v);
    }
  }
  if (ds.labels.empty()) throw DataError(K::kTruncated, path + ": no data rows");
  ds.Validate();
  return ds;
}

void SaveCsv(const Dataset& ds, const std::string& path) {
  ds.Validate();
  std::ostringstream os;
  os.precision(17);
  os << "label";
  for (std::size_t d = 0; d < ds.feature_size(); ++d) os << ",f" << d + 1;
  os << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    os << ds.labels[i] + 1;
    for (std::size_t d = 0; d < ds.feature_size(); ++d) {
      os << ',' << ds.features[i * ds.feature_size() + d];
    }
    os << '\n';
  }
  const std::string s = os.str();
  WriteFile(path, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

std::vector<std::uint8_t> EncodeRaw(const Dataset& ds) {
  ds.Validate();
  std::vector<std::uint8_t> out(std::begin(kRawMagic), std::end(kRawMagic));
  PutU32(out, Checked32(ds.size(), "N"));
  PutU32(out, Checked32(ds.num_classes, "T"));
  PutU32(out, Checked32(ds.feature_shape.size(), "rank"));
  for (std::size_t d : ds.feature_shape) PutU32(out, Checked32(d, "dim"));
  for (double v : ds.features) PutU32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  for (std::size_t l : ds.labels) PutU32(out, static_cast<std::uint32_t>(l + 1));
  return out;
}

Dataset DecodeRaw(std::span<const std::uint8_t> b) {
  using K = DataError::Kind;
  if (b.size() < 16 || std::memcmp(b.data(), kRawMagic, 4) != 0) {
    throw DataError(K::kMalformedHeader, "raw: missing TSAD magic or short header");
  }
  const std::uint32_t n = GetU32(b, 4);
  const std::uint32_t t = GetU32(b, 8);
  const std::uint32_t rank = GetU32(b, 12);
  if (n == 0 || t == 0 || rank == 0 || rank > 8) {
    throw DataError(K::kMalformedHeader, "raw: invalid header (N=" + std::to_string(n) +
                                             ", T=" + std::to_string(t) +
                                             ", rank=" + std::to_string(rank) + ")");
  }
  const std::size_t dims_end = 16 + 4 * static_cast<std::size_t>(rank);
  if (b.size() < dims_end) throw DataError(K::kMalformedHeader, "raw: header truncated in dims");
  Dataset ds{{}, {}, {}, t, "raw"};
  for (std::uint32_t r = 0; r < rank; ++r) {
    const std::uint32_t d = GetU32(b, 16 + 4 * r);
    if (d == 0) throw DataError(K::kMalformedHeader, "raw: zero dimension");
    ds.feature_shape.push_back(d);
  }
  const std::size_t nfeat = static_cast<std::size_t>(n) * ds.feature_size();
  const std::size_t expected = dims_end + 4 * nfeat + 4 * static_cast<std::size_t>(n);
  if (b.size() < expected) {
    throw DataError(K::kTruncated, "raw: payload truncated (" + std::to_string(b.size()) +
                                       " bytes, expected " + std::to_string(expected) + ")");
  }
  if (b.size() > expected) {
    throw DataError(K::kMalformedHeader, "raw: " + std::to_string(b.size() - expected) +
                                             " trailing bytes after payload");
  }
  ds.features.reserve(nfeat);
  for (std::size_t i = 0; i < nfeat; ++i) {
    ds.features.push_back(std::bit_cast<float>(GetU32(b, dims_end + 4 * i)));
  }
  const std::size_t lab = dims_end + 4 * nfeat;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t l = GetU32(b, lab + 4 * i);
    if (l < 1 || l > t) {
      throw DataError(K::kLabelRange, "raw: row " + std::to_string(i + 1) + " label " +
                                          std::to_string(l) + " outside 1.." +
                                          std::to_string(t));
    }
    ds.labels.push_back(l - 1);
  }
  return ds;
}

Dataset LoadRaw(const std::string& path) { return DecodeRaw(ReadFile(path)); }

void SaveRaw(const Dataset& ds, const std::string& path) { WriteFile(path, EncodeRaw(ds)); }

Dataset LoadDataset(const std::string& path) {
  const auto bytes = ReadFile(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kRawMagic, 4) == 0) {
    return DecodeRaw(bytes);
  }
  return LoadCsv(path);
}

AugmentDraw DrawAugment(const AugmentPolicy& policy, std::uint64_t seed,
                        std::size_t sample) {
  AugmentDraw d;
  if (policy.hflip) d.flip = CounterUniform(seed, sample, 0, 0) < 0.5;
  if (policy.shift > 0) {
    const double span = static_cast<double>(2 * policy.shift + 1);
    const long k = static_cast<long>(policy.shift);
    d.dy = static_cast<long>(CounterUniform(seed, sample, 1, 0) * span) - k;
    d.dx = static_cast<long>(CounterUniform(seed, sample, 2, 0) * span) - k;
  }
  return d;
}

void ApplyAugment(std::span<double> image, const Shape& chw, const AugmentDraw& draw) {
  if (chw.size() != 3 || image.size() != NumElements(chw)) {
    throw ShapeError("augment: expected C x H x W image, got " + ShapeString(chw));
  }
  const std::size_t c = chw[0], h = chw[1], w = chw[2];
  std::vector<double> src(image.begin(), image.end());
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const long sy = static_cast<long>(y) - draw.dy;
        long sx = static_cast<long>(x) - draw.dx;
        double v = 0.0;
        if (sy >= 0 && sy < static_cast<long>(h) && sx >= 0 && sx < static_cast<long>(w)) {
          if (draw.flip) sx = static_cast<long>(w) - 1 - sx;
          v = src[(ch * h + static_cast<std::size_t>(sy)) * w + static_cast<std::size_t>(sx)];
        }
        image[(ch * h + y) * w + x] = v;
      }
}

Tensor Augment(const Tensor& batch, const AugmentPolicy& policy, std::uint64_t seed) {
  if (policy.empty()) return batch;
  if (batch.rank() != 4) {
    throw ShapeError("augment: flip/shift need N x C x H x W, got " + ShapeString(batch.shape()));
  }
  Tensor out = batch;
  const Shape chw(batch.shape().begin() + 1, batch.shape().end());
  const std::size_t per = NumElements(chw);
  for (std::size_t n = 0; n < batch.dim(0); ++n) {
    ApplyAugment(out.values().subspan(n * per, per), chw, DrawAugment(policy, seed, n));
  }
  return out;
}

std::vector<std::vector<std::size_t>> Batches(std::size_t n, std::size_t batch_size,
                                              std::uint64_t epoch_seed) {
  if (batch_size == 0) throw std::invalid_argument("batches: batch_size must be positive");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(epoch_seed);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.Below(i)]);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < n; s += batch_size) {
    out.emplace_back(perm.begin() + s, perm.begin() + std::min(n, s + batch_size));
  }
  return out;
}

Batch Gather(const Dataset& ds, std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("gather: empty index set");
  const std::size_t per = ds.feature_size();
  Shape shape{indices.size()};
  shape.insert(shape.end(), ds.feature_shape.begin(), ds.feature_shape.end());
  std::vector<double> values;
  values.reserve(indices.size() * per);
  Batch b;
  for (std::size_t i : indices) {
    values.insert(values.end(), ds.features.begin() + i * per,
                  ds.features.begin() + (i + 1) * per);
    b.labels.push_back(ds.labels.at(i));
  }
  b.features = Tensor(std::move(shape), std::move(values));
  return b;
}

Batch WholeSet(const Dataset& ds) {
  std::vector<std::size_t> all(ds.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return Gather(ds, all);
}

}  // namespace tsa
