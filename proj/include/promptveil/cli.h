// Copyright 2026 The Promptveil Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line driver. Each subcommand loads a RunConfig, applies flag
// overrides and writes line-delimited records into the output directory.

#ifndef PROMPTVEIL_CLI_H_
#define PROMPTVEIL_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace promptveil {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
// Some items failed and --strict was given.
inline constexpr int kExitItemFailures = 3;

// `args` excludes the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace promptveil

#endif  // PROMPTVEIL_CLI_H_
