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

#ifndef TSA_CLI_H_
#define TSA_CLI_H_

#include <ostream>
#include <string>
#include <vector>

#include "tsa/config.h"
#include "tsa/tree.h"

namespace tsa {

// Process exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitNumeric = 3 };

// Training-time topologies compared by `compare` and `params`.
struct MethodTopology {
  std::string name;
  TreeSpec spec;
};

// Known names: baseline, tsa, one_style, full_dup. `tsa` is the configured
// tree; one_style and full_dup use the same leaf count K.
std::vector<MethodTopology> MethodTopologies(const NetworkSpec& base,
                                             const std::string& tsa_tree,
                                             const std::vector<std::string>& methods);

// Entry point behind the `tsa` executable; args exclude the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tsa

#endif  // TSA_CLI_H_
