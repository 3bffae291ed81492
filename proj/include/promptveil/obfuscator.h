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

// The end-to-end desensitization pipeline: detect, plan, predict, filter,
// gradient-select and fill positions left to right.

#ifndef PROMPTVEIL_OBFUSCATOR_H_
#define PROMPTVEIL_OBFUSCATOR_H_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "promptveil/candidate_generation.h"
#include "promptveil/core.h"
#include "promptveil/privacy_detection.h"
#include "promptveil/surrogate.h"

namespace promptveil {

struct Providers {
  const NerProvider* ner = nullptr;
  const MlmProvider* mlm = nullptr;
  const SurrogateModel* surrogate = nullptr;
  const TfidfModel* tfidf = nullptr;

  bool concurrent_safe() const;
};

struct ObfuscationResult {
  std::string original_text;
  std::string desensitized_text;
  std::vector<Replacement> replacements;
  MaskPlan plan;
  // Entity spans (token ranges over the original) found by the NER pass.
  std::vector<EntitySpan> entities;
  // Wall-clock seconds per stage: tokenize, detect, plan, target, predict,
  // filter, select.
  std::map<std::string, double> timing;
};

// Throws StageError naming the failing stage; never returns a partially
// sanitized prompt.
ObfuscationResult Desensitize(const std::string& text, const ObfuscationConfig& config,
                              const Providers& providers,
                              const std::optional<TaskTarget>& target = std::nullopt);

struct BatchItem {
  std::optional<ObfuscationResult> result;
  std::string error;
  std::string stage;

  bool ok() const { return result.has_value(); }
};

// Order-preserving; a failing item is recorded and does not stop the batch.
// `targets` is either empty or one per text.
std::vector<BatchItem> DesensitizeBatch(std::span<const std::string> texts,
                                        const ObfuscationConfig& config, const Providers& providers,
                                        std::span<const std::optional<TaskTarget>> targets = {});

}  // namespace promptveil

#endif  // PROMPTVEIL_OBFUSCATOR_H_
