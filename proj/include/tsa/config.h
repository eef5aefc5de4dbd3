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

// Run configuration: a plain-text file of `key = value` lines grouped under
// [section] headers, with command-line `section.key=value` overrides.

#ifndef TSA_CONFIG_H_
#define TSA_CONFIG_H_

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsa/data.h"
#include "tsa/nn.h"
#include "tsa/trainer.h"
#include "tsa/tree.h"

namespace tsa {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigKey {
  const char* section;
  const char* key;
  const char* default_value;  // empty when required or list-valued
  const char* help;
  bool repeatable = false;
};

// Every key the parser accepts, in documentation order.
std::span<const ConfigKey> ConfigKeys();
// One line per key, used by --help.
std::string ConfigKeyHelp();

struct DataSource {
  std::string kind = "spirals";  // spirals | blobs | file
  std::size_t classes = 3;
  std::size_t train_per_class = 500;
  std::size_t test_per_class = 100;
  double noise = 0.1;
  double turns = 1.0;
  std::size_t dim = 2;
  double separation = 3.0;
  std::uint64_t generator_seed = 0;
  std::string train_path;
  std::string test_path;
};

struct RunConfig {
  NetworkSpec network;
  std::string tree = "balanced 2 3";
  TrainConfig train;
  DataSource data;
  std::string metrics_path;
  std::string summary_path;
  std::string snapshot_path;
};

// Raw key/value view: "section.key" -> values (several for repeatable keys).
using ConfigEntries = std::map<std::string, std::vector<std::string>>;

ConfigEntries ParseConfigText(const std::string& text, const std::string& origin = "<text>");
// Applies "key=value" overrides. An unqualified key must name exactly one
// registered key.
void ApplyOverrides(ConfigEntries& entries, std::span<const std::string> overrides);
RunConfig BuildRunConfig(const ConfigEntries& entries, const std::string& base_dir = ".");

// Reads, overrides, validates. Relative data paths resolve against the
// config file's directory. Throws ConfigError.
RunConfig LoadRunConfig(const std::string& path,
                        std::span<const std::string> overrides = {});

// "balanced M H" | "branching b1,b2,..." | "explicit (...)".
TreeSpec BuildTopology(const NetworkSpec& base, const std::string& tree);

// Train/test datasets described by the data section.
std::pair<Dataset, Dataset> LoadData(const DataSource& src);

// [network] and [tree] sections describing `spec`, parseable by ParseConfigText.
std::string FormatArchitecture(const TreeSpec& spec);

}  // namespace tsa

#endif  // TSA_CONFIG_H_
