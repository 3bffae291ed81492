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

// Wall-clock timing of the pipeline against prompt length.

#ifndef PROMPTVEIL_BENCHMARK_H_
#define PROMPTVEIL_BENCHMARK_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "promptveil/obfuscator.h"

namespace promptveil {

// News-style text cut to exactly `tokens` tokens.
std::string SyntheticPrompt(std::size_t tokens, std::uint64_t seed);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Ordinary least squares of ys on xs. Needs at least two distinct xs.
LinearFit FitLine(std::span<const double> xs, std::span<const double> ys);

struct BenchmarkRow {
  std::size_t tokens = 0;
  // Median over the repeats.
  double seconds = 0.0;
  std::size_t replacements = 0;
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  LinearFit fit;
};

// Desensitizes one synthetic prompt per size `repeats` times. `sizes` must be
// non-empty; the fit is left at zero with fewer than two distinct sizes.
BenchmarkReport RunBenchmark(std::span<const std::size_t> sizes, const ObfuscationConfig& config,
                             const Providers& providers, int repeats = 3);

}  // namespace promptveil

#endif  // PROMPTVEIL_BENCHMARK_H_
