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

#include "tsa/snapshot.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tsa/config.h"

namespace tsa {
namespace {

constexpr char kMagic[4] = {'T', 'S', 'A', 'M'};

class Writer {
 public:
  void Bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  void U32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void U64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }

  std::vector<std::uint8_t> out;
};

class Cursor {
 public:
  explicit Cursor(std::span<const std::uint8_t> b) : b_(b) {}

  void Need(std::size_t n, const char* what) const {
    if (b_.size() - pos_ < n) {
      throw SnapshotError(std::string("snapshot truncated while reading ") + what);
    }
  }
  std::uint32_t U32(const char* what) {
    Need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t U64(const char* what) {
    Need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double F64(const char* what) { return std::bit_cast<double>(U64(what)); }
  std::string Text(std::size_t n) {
    Need(n, "architecture text");
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

void WriteTensor(Writer& w, const Tensor& t) {
  w.U32(static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) w.U32(static_cast<std::uint32_t>(d));
  for (double v : t.values()) w.F64(v);
}

void ReadTensorInto(Cursor& c, Tensor& expected) {
  const std::uint32_t rank = c.U32("tensor rank");
  Shape shape;
  for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(c.U32("tensor dims"));
  if (shape != expected.shape()) {
    throw SnapshotError("snapshot tensor " + ShapeString(shape) +
                        " does not match architecture " + ShapeString(expected.shape()));
  }
  for (double& v : expected.values()) v = c.F64("tensor values");
}

}  // namespace

std::vector<std::uint8_t> EncodeSnapshot(const TreeNetwork& net, std::uint64_t seed) {
  Writer w;
  w.Bytes(kMagic, 4);
  w.U32(kSnapshotVersion);
  w.U64(seed);
  const std::string arch = FormatArchitecture(net.spec);
  w.U32(static_cast<std::uint32_t>(arch.size()));
  w.Bytes(arch.data(), arch.size());
  w.U32(static_cast<std::uint32_t>(net.params.size()));
  for (const BlockParams& bp : net.params)
    for (const LayerParams& lp : bp) {
      if (lp.weight.empty()) {
        w.U32(0);
        continue;
      }
      w.U32(2);
      WriteTensor(w, lp.weight);
      WriteTensor(w, lp.bias);
    }
  return std::move(w.out);
}

Snapshot DecodeSnapshot(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw SnapshotError("not a model snapshot (missing TSAM magic)");
  }
  Cursor c(bytes.subspan(4));
  const std::uint32_t version = c.U32("version");
  if (version != kSnapshotVersion) {
    throw SnapshotError("unsupported snapshot version " + std::to_string(version));
  }
  Snapshot s;
  s.seed = c.U64("seed");
  const std::string arch = c.Text(c.U32("architecture length"));
  TreeSpec spec;
  try {
    const ConfigEntries e = ParseConfigText(arch, "snapshot");
    const RunConfig rc = BuildRunConfig(e);
    spec = BuildTopology(rc.network, rc.tree);
  } catch (const std::exception& e) {
    throw SnapshotError(std::string("snapshot architecture: ") + e.what());
  }
  // Instantiate for shapes, then overwrite every value from the file.
  s.net = Instantiate(spec, s.seed);
  const std::uint32_t nodes = c.U32("node count");
  if (nodes != s.net.params.size()) {
    throw SnapshotError("snapshot has " + std::to_string(nodes) + " nodes, architecture has " +
                        std::to_string(s.net.params.size()));
  }
  for (BlockParams& bp : s.net.params)
    for (LayerParams& lp : bp) {
      const std::uint32_t count = c.U32("tensor count");
      if (count != (lp.weight.empty() ? 0u : 2u)) {
        throw SnapshotError("snapshot layer tensor count " + std::to_string(count) +
                            " does not match architecture");
      }
      if (count) {
        ReadTensorInto(c, lp.weight);
        ReadTensorInto(c, lp.bias);
      }
    }
  if (!c.done()) throw SnapshotError("trailing bytes after snapshot payload");
  return s;
}

void SaveSnapshot(const TreeNetwork& net, std::uint64_t seed, const std::string& path) {
  const auto bytes = EncodeSnapshot(net, seed);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SnapshotError("cannot write snapshot '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw SnapshotError("write failed for '" + path + "'");
}

Snapshot LoadSnapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotError("cannot open snapshot '" + path + "'");
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  return DecodeSnapshot(bytes);
}

}  // namespace tsa
