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

#include "tsa/config.h"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace tsa {
namespace {

namespace fs = std::filesystem;

constexpr ConfigKey kKeys[] = {
    {"network", "input", "", "per-sample input shape, e.g. '2' or '3 8 8'"},
    {"network", "block", "", "comma-separated layers of one block; repeat once per block", true},
    {"tree", "tree", "balanced 2 3",
     "topology: 'balanced M H' | 'branching b1,b2,...' | 'explicit (...)'"},
    {"tree", "ensemble", "probs", "ensemble averaging: probs | logits"},
    {"distill", "alpha", "0.5", "weight of the peer distillation term in [0,1]"},
    {"distill", "temperature", "3", "softmax temperature for distillation targets"},
    {"distill", "peer_gradient", "detached", "detached | coupled"},
    {"train", "epochs", "60", "number of epochs (>= 1)"},
    {"train", "batch_size", "128", "minibatch size"},
    {"train", "lr", "0.1", "initial learning rate"},
    {"train", "momentum", "0.9", "SGD momentum in [0,1)"},
    {"train", "weight_decay", "0.0005", "L2 weight decay"},
    {"train", "lr_drops", "0.5:0.1, 0.75:0.1", "fraction:factor list, or 'none'"},
    {"train", "seed", "0", "initialization and shuffling seed"},
    {"train", "augment", "none", "none | hflip | shift:K | hflip,shift:K (images only)"},
    {"data", "source", "spirals", "spirals | blobs | file"},
    {"data", "classes", "3", "number of classes (generators)"},
    {"data", "train_per_class", "500", "training points per class (generators)"},
    {"data", "test_per_class", "100", "test points per class (generators)"},
    {"data", "noise", "0.1", "spiral coordinate noise std"},
    {"data", "turns", "1", "spiral turns"},
    {"data", "dim", "2", "blob dimensionality"},
    {"data", "separation", "3", "blob center distance from origin"},
    {"data", "generator_seed", "0", "seed of the synthetic data generator"},
    {"data", "train_path", "", "training set file (CSV or TSAD raw) for source=file"},
    {"data", "test_path", "", "test set file (CSV or TSAD raw) for source=file"},
    {"output", "metrics", "metrics.jsonl", "per-epoch metrics, one JSON object per line"},
    {"output", "summary", "summary.csv", "final accuracy summary"},
    {"output", "snapshot", "model.tsam", "trained model snapshot"},
};

const ConfigKey* FindKey(const std::string& section, const std::string& key) {
  for (const ConfigKey& k : kKeys) {
    if (section == k.section && key == k.key) return &k;
  }
  return nullptr;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string Full(const ConfigKey& k) { return std::string(k.section) + "." + k.key; }

class Reader {
 public:
  explicit Reader(const ConfigEntries& e) : entries_(e) {}

  std::string Str(const char* full) const {
    if (auto it = entries_.find(full); it != entries_.end()) return it->second.back();
    const std::string f(full);
    const auto dot = f.find('.');
    return FindKey(f.substr(0, dot), f.substr(dot + 1))->default_value;
  }

  std::vector<std::string> List(const char* full) const {
    if (auto it = entries_.find(full); it != entries_.end()) return it->second;
    return {};
  }

  template <typename T>
  T Num(const char* full) const {
    const std::string s = Str(full);
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw ConfigError(std::string("config key '") + full + "': '" + s +
                        "' is not a valid number");
    }
    return v;
  }

 private:
  const ConfigEntries& entries_;
};

std::vector<std::string> Split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, sep)) out.push_back(Trim(item));
  return out;
}

std::size_t ParseCount(const std::string& s, const std::string& what) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError(what + ": '" + s + "' is not a non-negative integer");
  }
  return v;
}

std::vector<LrDrop> ParseDrops(const std::string& s) {
  std::vector<LrDrop> drops;
  if (s == "none" || s.empty()) return drops;
  for (const std::string& item : Split(s, ',')) {
    const auto colon = item.find(':');
    LrDrop d;
    if (colon == std::string::npos) {
      throw ConfigError("config key 'train.lr_drops': expected fraction:factor, got '" +
                        item + "'");
    }
    const std::string a = Trim(item.substr(0, colon)), b = Trim(item.substr(colon + 1));
    auto [p1, e1] = std::from_chars(a.data(), a.data() + a.size(), d.fraction);
    auto [p2, e2] = std::from_chars(b.data(), b.data() + b.size(), d.factor);
    if (e1 != std::errc() || e2 != std::errc() || p1 != a.data() + a.size() ||
        p2 != b.data() + b.size()) {
      throw ConfigError("config key 'train.lr_drops': bad entry '" + item + "'");
    }
    drops.push_back(d);
  }
  return drops;
}

AugmentPolicy ParseAugment(const std::string& s) {
  AugmentPolicy p;
  if (s == "none" || s.empty()) return p;
  for (const std::string& item : Split(s, ',')) {
    if (item == "hflip") {
      p.hflip = true;
    } else if (item.rfind("shift:", 0) == 0) {
      p.shift = ParseCount(item.substr(6), "config key 'train.augment'");
    } else {
      throw ConfigError("config key 'train.augment': unknown policy '" + item + "'");
    }
  }
  return p;
}

}  // namespace

std::span<const ConfigKey> ConfigKeys() { return kKeys; }

std::string ConfigKeyHelp() {
  std::ostringstream os;
  os << "Config keys ([section] key = value; override with --set section.key=value):\n";
  for (const ConfigKey& k : kKeys) {
    os << "  " << Full(k);
    if (*k.default_value) os << " (default: " << k.default_value << ")";
    os << "\n      " << k.help << '\n';
  }
  return os.str();
}

ConfigEntries ParseConfigText(const std::string& text, const std::string& origin) {
  ConfigEntries entries;
  std::istringstream is(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = Trim(line.substr(1, line.size() - 2));
      const bool known = std::any_of(std::begin(kKeys), std::end(kKeys),
                                     [&](const ConfigKey& k) { return section == k.section; });
      if (!known) throw ConfigError(where + ": unknown section '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(where + ": key '" + key + "' outside a section");
    const ConfigKey* k = FindKey(section, key);
    if (!k) throw ConfigError(where + ": unknown key '" + key + "' in [" + section + "]");
    auto& slot = entries[Full(*k)];
    if (!slot.empty() && !k->repeatable) {
      throw ConfigError(where + ": duplicate key '" + Full(*k) + "'");
    }
    slot.push_back(value);
  }
  return entries;
}

void ApplyOverrides(ConfigEntries& entries, std::span<const std::string> overrides) {
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "': expected key=value");
    const std::string name = Trim(o.substr(0, eq));
    const std::string value = Trim(o.substr(eq + 1));
    const ConfigKey* match = nullptr;
    if (const auto dot = name.find('.'); dot != std::string::npos) {
      match = FindKey(name.substr(0, dot), name.substr(dot + 1));
    } else {
      for (const ConfigKey& k : kKeys) {
        if (name != k.key) continue;
        if (match) {
          throw ConfigError("override key '" + name + "' is ambiguous; qualify it as section.key");
        }
        match = &k;
      }
    }
    if (!match) throw ConfigError("unknown override key '" + name + "'");
    if (match->repeatable) {
      throw ConfigError("override key '" + Full(*match) + "' is repeatable; edit the file instead");
    }
    entries[Full(*match)] = {value};
  }
}

RunConfig BuildRunConfig(const ConfigEntries& entries, const std::string& base_dir) {
  const Reader r(entries);
  RunConfig c;
  try {
    for (const std::string& d : Split(r.Str("network.input"), ' ')) {
      if (d.empty()) continue;
      c.network.input_shape.push_back(ParseCount(d, "config key 'network.input'"));
    }
    for (const std::string& b : r.List("network.block")) c.network.blocks.push_back(ParseBlock(b));
    ValidateNetwork(c.network);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("[network]: ") + e.what());
  }

  c.tree = r.Str("tree.tree");
  try {
    BuildTopology(c.network, c.tree);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config key 'tree.tree': ") + e.what());
  }
  const std::string ens = r.Str("tree.ensemble");
  if (ens == "probs") {
    c.train.ensemble = EnsembleMode::kProbabilities;
  } else if (ens == "logits") {
    c.train.ensemble = EnsembleMode::kLogits;
  } else {
    throw ConfigError("config key 'tree.ensemble': expected probs or logits, got '" + ens + "'");
  }

  c.train.distill.alpha = r.Num<double>("distill.alpha");
  c.train.distill.temperature = r.Num<double>("distill.temperature");
  try {
    c.train.distill.peer_gradient = ParsePeerGradient(r.Str("distill.peer_gradient"));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config key 'distill.peer_gradient': ") + e.what());
  }

  c.train.epochs = r.Num<std::size_t>("train.epochs");
  if (c.train.epochs < 1) throw ConfigError("config key 'train.epochs': must be >= 1");
  c.train.batch_size = r.Num<std::size_t>("train.batch_size");
  c.train.lr0 = r.Num<double>("train.lr");
  c.train.momentum = r.Num<double>("train.momentum");
  c.train.weight_decay = r.Num<double>("train.weight_decay");
  c.train.lr_drops = ParseDrops(r.Str("train.lr_drops"));
  c.train.seed = r.Num<std::uint64_t>("train.seed");
  c.train.augment = ParseAugment(r.Str("train.augment"));
  try {
    c.train.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[train]/[distill]: ") + e.what());
  }

  DataSource& d = c.data;
  d.kind = r.Str("data.source");
  d.classes = r.Num<std::size_t>("data.classes");
  d.train_per_class = r.Num<std::size_t>("data.train_per_class");
  d.test_per_class = r.Num<std::size_t>("data.test_per_class");
  d.noise = r.Num<double>("data.noise");
  d.turns = r.Num<double>("data.turns");
  d.dim = r.Num<std::size_t>("data.dim");
  d.separation = r.Num<double>("data.separation");
  d.generator_seed = r.Num<std::uint64_t>("data.generator_seed");
  if (d.kind == "file") {
    for (auto [key, slot] : {std::pair{"data.train_path", &d.train_path},
                             std::pair{"data.test_path", &d.test_path}}) {
      const std::string p = r.Str(key);
      if (p.empty()) throw ConfigError(std::string("config key '") + key + "' is required for source=file");
      const fs::path full = fs::path(p).is_absolute() ? fs::path(p) : fs::path(base_dir) / p;
      if (!fs::exists(full)) {
        throw ConfigError(std::string("config key '") + key + "': file '" + full.string() +
                          "' does not exist");
      }
      *slot = full.string();
    }
  } else if (d.kind != "spirals" && d.kind != "blobs") {
    throw ConfigError("config key 'data.source': expected spirals, blobs or file, got '" +
                      d.kind + "'");
  } else if (d.classes == 0 || d.train_per_class == 0 || d.test_per_class == 0) {
    throw ConfigError("[data]: classes and per-class counts must be positive");
  }

  c.metrics_path = r.Str("output.metrics");
  c.summary_path = r.Str("output.summary");
  c.snapshot_path = r.Str("output.snapshot");
  return c;
}

RunConfig LoadRunConfig(const std::string& path, std::span<const std::string> overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  ConfigEntries entries = ParseConfigText(ss.str(), path);
  ApplyOverrides(entries, overrides);
  const fs::path dir = fs::path(path).parent_path();
  return BuildRunConfig(entries, dir.empty() ? "." : dir.string());
}

TreeSpec BuildTopology(const NetworkSpec& base, const std::string& tree) {
  const std::string t = Trim(tree);
  const auto sp = t.find_first_of(" \t");
  const std::string kind = t.substr(0, sp);
  const std::string rest = sp == std::string::npos ? "" : Trim(t.substr(sp));
  if (kind == "balanced") {
    const auto parts = Split(rest, ' ');
    std::vector<std::size_t> nums;
    for (const auto& p : parts) {
      if (!p.empty()) nums.push_back(ParseCount(p, "balanced tree"));
    }
    if (nums.size() != 2) throw std::invalid_argument("expected 'balanced M H'");
    return BuildBalanced(base, nums[0], nums[1]);
  }
  if (kind == "branching") {
    std::vector<std::size_t> b;
    for (const auto& p : Split(rest, ',')) b.push_back(ParseCount(p, "branching vector"));
    if (b.empty()) throw std::invalid_argument("empty branching vector");
    return BuildFromBranching(base, b);
  }
  if (kind == "explicit") return BuildExplicit(base, rest);
  throw std::invalid_argument("unknown topology '" + kind +
                              "' (expected balanced, branching or explicit)");
}

std::pair<Dataset, Dataset> LoadData(const DataSource& src) {
  if (src.kind == "file") {
    Dataset train = LoadDataset(src.train_path);
    Dataset test = LoadDataset(src.test_path);
    train.split = "train";
    test.split = "test";
    return {std::move(train), std::move(test)};
  }
  // Test points come from an independent generator stream.
  const std::uint64_t test_seed = src.generator_seed ^ 0x7e57da7a5eedULL;
  Dataset train, test;
  if (src.kind == "spirals") {
    train = GenSpirals(src.train_per_class, src.classes, src.noise, src.generator_seed, src.turns);
    test = GenSpirals(src.test_per_class, src.classes, src.noise, test_seed, src.turns);
  } else {
    train = GenBlobs(src.train_per_class, src.classes, src.dim, src.separation, src.generator_seed);
    test = GenBlobs(src.test_per_class, src.classes, src.dim, src.separation, test_seed);
  }
  train.split = "train";
  test.split = "test";
  return {std::move(train), std::move(test)};
}

std::string FormatArchitecture(const TreeSpec& spec) {
  std::ostringstream os;
  os << "[network]\ninput =";
  for (std::size_t d : spec.base.input_shape) os << ' ' << d;
  os << '\n';
  for (const BlockSpec& b : spec.base.blocks) os << "block = " << FormatBlock(b) << '\n';
  os << "[tree]\ntree = explicit " << FormatNested(spec) << '\n';
  return os.str();
}

}  // namespace tsa
