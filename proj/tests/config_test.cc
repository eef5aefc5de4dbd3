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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>

#include "tsa/config.h"
#include "tsa/snapshot.h"

namespace tsa {
namespace {

namespace fs = std::filesystem;

const std::string kConfigDir = TSA_CONFIG_DIR;

const char* kMinimal = R"(
[network]
input = 2
block = linear 2 4, relu   # trailing comment
block = linear 4 3
[tree]
tree = balanced 2 2
)";

TEST(ConfigParseTest, DefaultsAndRepeatableBlocks) {
  const RunConfig rc = BuildRunConfig(ParseConfigText(kMinimal));
  EXPECT_EQ(rc.network.blocks.size(), 2u);
  EXPECT_EQ(rc.network.blocks[0], ParseBlock("linear 2 4, relu"));
  EXPECT_EQ(rc.train.epochs, 60u);
  EXPECT_EQ(rc.train.batch_size, 128u);
  EXPECT_EQ(rc.train.distill.alpha, 0.5);
  EXPECT_EQ(rc.train.distill.temperature, 3.0);
  EXPECT_EQ(rc.train.lr_drops, (std::vector<LrDrop>{{0.5, 0.1}, {0.75, 0.1}}));
  EXPECT_EQ(rc.data.kind, "spirals");
}

TEST(ConfigParseTest, UnknownKeyNamesTheKey) {
  try {
    ParseConfigText("[distill]\nalhpa = 0.5\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("alhpa"), std::string::npos);
  }
  EXPECT_THROW(ParseConfigText("[nope]\n"), ConfigError);
  EXPECT_THROW(ParseConfigText("[train]\nepochs = 1\nepochs = 2\n"), ConfigError);
  EXPECT_THROW(ParseConfigText("epochs = 1\n"), ConfigError);
  EXPECT_THROW(ParseConfigText("[train]\nepochs\n"), ConfigError);
}

TEST(ConfigParseTest, BadValues) {
  auto build = [](const std::string& extra) {
    return BuildRunConfig(ParseConfigText(std::string(kMinimal) + extra));
  };
  EXPECT_THROW(build("[train]\nepochs = 0\n"), ConfigError);
  EXPECT_THROW(build("[train]\nepochs = ten\n"), ConfigError);
  EXPECT_THROW(build("[distill]\nalpha = 2\n"), ConfigError);
  EXPECT_THROW(build("[distill]\npeer_gradient = maybe\n"), ConfigError);
  EXPECT_THROW(build("[train]\nlr_drops = 0.5\n"), ConfigError);
  EXPECT_THROW(build("[data]\nsource = file\n"), ConfigError);
  ConfigEntries ring = ParseConfigText(kMinimal);
  const std::string ring_tree[] = {"tree=ring 2 2"};
  ApplyOverrides(ring, ring_tree);
  EXPECT_THROW(BuildRunConfig(ring), ConfigError);
  EXPECT_NO_THROW(build("[train]\nlr_drops = none\n"));
}

TEST(ConfigParseTest, OverridesWin) {
  ConfigEntries e = ParseConfigText(kMinimal);
  const std::string overrides[] = {"seed=7", "distill.alpha=0", "temperature = 2"};
  ApplyOverrides(e, overrides);
  const RunConfig rc = BuildRunConfig(e);
  EXPECT_EQ(rc.train.seed, 7u);
  EXPECT_EQ(rc.train.distill.alpha, 0.0);
  EXPECT_EQ(rc.train.distill.temperature, 2.0);
  const std::string bad[] = {"alhpa=1"};
  EXPECT_THROW(ApplyOverrides(e, bad), ConfigError);
  const std::string malformed[] = {"seed"};
  EXPECT_THROW(ApplyOverrides(e, malformed), ConfigError);
}

TEST(ConfigParseTest, ShippedConfigsLoad) {
  const RunConfig tsa = LoadRunConfig(kConfigDir + "/spiral_tsa23.cfg");
  EXPECT_EQ(LeafCount(BuildTopology(tsa.network, tsa.tree)), 4u);
  EXPECT_EQ(tsa.train.epochs, 60u);
  const RunConfig utsa = LoadRunConfig(kConfigDir + "/utsa.cfg");
  const TreeSpec u = BuildTopology(utsa.network, utsa.tree);
  EXPECT_EQ(LeafCount(u), 4u);
  std::size_t leaves = 0;
  std::function<void(std::size_t)> walk = [&](std::size_t n) {
    if (u.nodes[n].children.empty()) ++leaves;
    for (std::size_t c : u.nodes[n].children) walk(c);
  };
  walk(u.roots[0]);
  EXPECT_EQ(leaves, 4u);
  EXPECT_NE(u.nodes[1].children.size(), u.nodes[u.nodes[0].children[1]].children.size());
  const auto& b = utsa.network.blocks;
  EXPECT_EQ(ParamCount(u), CountParams(b[0]) + 2 * CountParams(b[1]) + 4 * CountParams(b[2]));
}

TEST(ConfigParseTest, KeyRegistryIsComplete) {
  const std::string help = ConfigKeyHelp();
  std::size_t n = 0;
  for (const ConfigKey& k : ConfigKeys()) {
    EXPECT_NE(help.find(std::string(k.section) + "." + k.key), std::string::npos) << k.key;
    ++n;
  }
  EXPECT_GT(n, 25u);
}

TEST(TopologyTextTest, Forms) {
  const NetworkSpec base = BuildRunConfig(ParseConfigText(kMinimal)).network;
  EXPECT_EQ(LeafCount(BuildTopology(base, "balanced 3 2")), 3u);
  EXPECT_EQ(BuildTopology(base, "branching 1,2"), BuildBalanced(base, 2, 2));
  EXPECT_EQ(LeafCount(BuildTopology(base, "explicit (()()())")), 3u);
  EXPECT_THROW(BuildTopology(base, "balanced 2"), std::invalid_argument);
  EXPECT_THROW(BuildTopology(base, "ring 2 2"), std::invalid_argument);
}

TEST(LoadDataTest, TrainAndTestDiffer) {
  DataSource src;
  src.train_per_class = 20;
  src.test_per_class = 10;
  const auto [train, test] = LoadData(src);
  EXPECT_EQ(train.size(), 60u);
  EXPECT_EQ(test.size(), 30u);
  EXPECT_NE(std::vector<double>(train.features.begin(), train.features.begin() + 4),
            std::vector<double>(test.features.begin(), test.features.begin() + 4));
  EXPECT_EQ(LoadData(src).first, train);
}

TEST(SnapshotTest, RoundTripIsExact) {
  const NetworkSpec base = BuildRunConfig(ParseConfigText(kMinimal)).network;
  for (const char* tree : {"balanced 2 2", "explicit (()()())", "explicit (())(())"}) {
    const TreeNetwork net = Instantiate(BuildTopology(base, tree), 11);
    const auto bytes = EncodeSnapshot(net, 11);
    ASSERT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "TSAM");
    const Snapshot back = DecodeSnapshot(bytes);
    EXPECT_EQ(back.seed, 11u);
    EXPECT_EQ(back.net.spec, net.spec);
    EXPECT_EQ(back.net.leaf_order, net.leaf_order);
    for (std::size_t n = 0; n < net.params.size(); ++n)
      for (std::size_t l = 0; l < net.params[n].size(); ++l) {
        EXPECT_EQ(back.net.params[n][l].weight, net.params[n][l].weight);
        EXPECT_EQ(back.net.params[n][l].bias, net.params[n][l].bias);
      }
    EXPECT_EQ(EncodeSnapshot(back.net, 11), bytes);
  }
}

TEST(SnapshotTest, RejectsCorruption) {
  const NetworkSpec base = BuildRunConfig(ParseConfigText(kMinimal)).network;
  const auto bytes = EncodeSnapshot(Instantiate(BuildBalanced(base, 2, 2), 0), 0);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(DecodeSnapshot(bad), SnapshotError);
  bad = bytes;
  bad[4] = 9;
  EXPECT_THROW(DecodeSnapshot(bad), SnapshotError);
  EXPECT_THROW(DecodeSnapshot(std::span(bytes).first(bytes.size() - 3)), SnapshotError);
  bad = bytes;
  bad.push_back(0);
  EXPECT_THROW(DecodeSnapshot(bad), SnapshotError);
  EXPECT_THROW(LoadSnapshot((fs::temp_directory_path() / "tsa_missing.tsam").string()),
               SnapshotError);
}

}  // namespace
}  // namespace tsa
