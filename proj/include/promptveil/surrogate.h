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

// Gradient-guided candidate selection with a white-box surrogate model.

#ifndef PROMPTVEIL_SURROGATE_H_
#define PROMPTVEIL_SURROGATE_H_

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "promptveil/candidate_generation.h"
#include "promptveil/core.h"

namespace promptveil {

struct TaskTarget {
  enum class Kind { kClassLabel, kReferenceText };

  Kind kind = Kind::kClassLabel;
  int label = 0;
  std::string text;

  static TaskTarget ClassLabel(int label) { return {Kind::kClassLabel, label, {}}; }
  static TaskTarget Reference(std::string text) {
    return {Kind::kReferenceText, 0, std::move(text)};
  }
};

class SurrogateModel {
 public:
  virtual ~SurrogateModel() = default;

  virtual std::string model_id() const = 0;
  virtual SurrogateKind kind() const = 0;

  virtual double Loss(std::string_view prompt, const TaskTarget& target) const = 0;
  // dLoss/d(input embeddings), one row per word token of Tokenize(prompt).
  virtual Eigen::MatrixXd InputGradient(std::string_view prompt,
                                        const TaskTarget& target) const = 0;
  // The model's own prediction on `prompt`, used as the target when no gold
  // output is available.
  virtual TaskTarget Predict(std::string_view prompt) const = 0;
  virtual bool concurrent_safe() const { return true; }
};

// ||dL/dx'|| over the whole input (Frobenius), or only over the row of word
// token `position` when scope is kPositionOnly.
double GradientNorm(const SurrogateModel& surrogate, std::string_view prompt,
                    const TaskTarget& target, GradientScope scope = GradientScope::kFullInput,
                    std::size_t position = 0);

// Splices each filtered candidate at `position` (on top of `applied`) and
// returns the one with the smallest gradient norm; equal norms keep the
// better-ranked candidate. Candidates whose scoring throws are skipped; when
// all of them fail the rank-1 candidate is returned flagged.
Replacement SelectReplacement(const TokenizedPrompt& prompt, std::span<const Replacement> applied,
                              std::size_t position, const CandidateSet& filtered,
                              const SurrogateModel& surrogate, const TaskTarget& target,
                              TieBreak tie_break = TieBreak::kByCandidateRank,
                              GradientScope scope = GradientScope::kFullInput);

}  // namespace promptveil

#endif  // PROMPTVEIL_SURROGATE_H_
