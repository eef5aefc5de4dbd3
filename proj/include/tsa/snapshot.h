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

// Model snapshot container. Little-endian layout:
//
//   char[4]  magic "TSAM"
//   u32      format version (currently 1)
//   u64      init seed
//   u32      architecture text length L, then L bytes: the [network] and
//            [tree] config sections (tree in explicit form)
//   u32      node count
//   per node, per layer of its block:
//     u32    tensor count (0 or 2: weight then bias)
//     per tensor: u32 rank, u32 dims[rank], f64 values[prod(dims)]

#ifndef TSA_SNAPSHOT_H_
#define TSA_SNAPSHOT_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsa/tree.h"

namespace tsa {

inline constexpr std::uint32_t kSnapshotVersion = 1;

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Snapshot {
  TreeNetwork net;
  std::uint64_t seed = 0;
};

std::vector<std::uint8_t> EncodeSnapshot(const TreeNetwork& net, std::uint64_t seed);
Snapshot DecodeSnapshot(std::span<const std::uint8_t> bytes);

void SaveSnapshot(const TreeNetwork& net, std::uint64_t seed, const std::string& path);
Snapshot LoadSnapshot(const std::string& path);

}  // namespace tsa

#endif  // TSA_SNAPSHOT_H_
