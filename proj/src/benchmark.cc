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

#include "promptveil/benchmark.h"

#include <algorithm>
#include <chrono>
#include <set>

#include "promptveil/datasets.h"

namespace promptveil {

std::string SyntheticPrompt(std::size_t tokens, std::uint64_t seed) {
  if (tokens == 0) return "";
  std::string text;
  std::size_t batch = 8;
  std::uint64_t round = 0;
  while (true) {
    for (const auto& ex : SyntheticNews(seed + round++, batch)) {
      if (!text.empty()) text += ' ';
      text += ex.text;
    }
    const TokenizedPrompt prompt = Tokenize(text);
    if (prompt.size() >= tokens) return text.substr(0, prompt.spans[tokens - 1].end);
  }
}

LinearFit FitLine(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "fit needs at least two paired points");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0) throw Error(ErrorCode::kInvalidArgument, "fit needs two distinct x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

BenchmarkReport RunBenchmark(std::span<const std::size_t> sizes, const ObfuscationConfig& config,
                             const Providers& providers, int repeats) {
  if (sizes.empty()) throw Error(ErrorCode::kInvalidArgument, "benchmark needs at least one size");
  if (repeats < 1) throw Error(ErrorCode::kInvalidArgument, "repeats must be >= 1");
  BenchmarkReport report;
  for (std::size_t size : sizes) {
    const std::string prompt = SyntheticPrompt(size, config.seed);
    std::vector<double> times;
    BenchmarkRow row;
    row.tokens = Tokenize(prompt).size();
    for (int r = 0; r < repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      const ObfuscationResult result = Desensitize(prompt, config, providers);
      times.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      row.replacements = result.replacements.size();
    }
    std::sort(times.begin(), times.end());
    row.seconds = times[times.size() / 2];
    report.rows.push_back(row);
  }
  std::set<std::size_t> distinct(sizes.begin(), sizes.end());
  if (distinct.size() >= 2) {
    std::vector<double> xs, ys;
    for (const BenchmarkRow& row : report.rows) {
      xs.push_back(static_cast<double>(row.tokens));
      ys.push_back(row.seconds);
    }
    report.fit = FitLine(xs, ys);
  }
  return report;
}

}  // namespace promptveil
