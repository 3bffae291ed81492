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

#include "promptveil/obfuscator.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>
#include <unordered_set>

namespace promptveil {
namespace {

class StageClock {
 public:
  explicit StageClock(std::map<std::string, double>& timing) : timing_(timing) {}

  // Runs `fn` under `stage`, adding its wall-clock time and attributing any
  // failure to the stage.
  template <typename Fn>
  auto Run(const std::string& stage, Fn&& fn) -> decltype(fn()) {
    const auto start = std::chrono::steady_clock::now();
    struct Accumulate {
      std::map<std::string, double>& timing;
      const std::string& stage;
      std::chrono::steady_clock::time_point start;
      ~Accumulate() {
        timing[stage] +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      }
    } accumulate{timing_, stage, start};
    try {
      return fn();
    } catch (const StageError&) {
      throw;
    } catch (const Error& e) {
      throw StageError(stage, e);
    } catch (const std::exception& e) {
      throw StageError(stage, Error(ErrorCode::kProviderFailure, e.what()));
    }
  }

 private:
  std::map<std::string, double>& timing_;
};

ReplacementFlag FlagFor(CandidateSetFlag flag) {
  switch (flag) {
    case CandidateSetFlag::kMaxDistanceFallback:
      return ReplacementFlag::kMaxDistanceFallback;
    case CandidateSetFlag::kPlaceholderFallback:
      return ReplacementFlag::kPlaceholderFallback;
    case CandidateSetFlag::kNone:
      break;
  }
  return ReplacementFlag::kNone;
}

}  // namespace

bool Providers::concurrent_safe() const {
  return (ner == nullptr || ner->concurrent_safe()) && (mlm == nullptr || mlm->concurrent_safe()) &&
         (surrogate == nullptr || surrogate->concurrent_safe());
}

ObfuscationResult Desensitize(const std::string& text, const ObfuscationConfig& config,
                              const Providers& providers, const std::optional<TaskTarget>& target) {
  ObfuscationResult result;
  StageClock clock(result.timing);
  clock.Run("config", [&] {
    config.Validate();
    if (providers.ner == nullptr || providers.mlm == nullptr || providers.surrogate == nullptr ||
        providers.tfidf == nullptr) {
      throw Error(ErrorCode::kConfigError, "all four providers must be set");
    }
  });
  result.timing.erase("config");
  result.original_text = text;

  const TokenizedPrompt prompt = clock.Run("tokenize", [&] { return Tokenize(text); });
  result.entities = clock.Run("detect", [&] {
    const auto spans = DetectExplicitSpans(prompt, *providers.ner);
    return PropagateEntityMentions(prompt, spans);
  });
  result.plan = clock.Run(
      "plan", [&] { return BuildMaskPlan(prompt, result.entities, *providers.tfidf, config); });

  if (result.plan.entries.empty()) {
    result.desensitized_text = text;
  } else {
    const TaskTarget goal = clock.Run("target", [&] {
      if (target) return *target;
      try {
        return providers.surrogate->Predict(text);
      } catch (const std::exception& e) {
        throw Error(ErrorCode::kSurrogateFailure,
                    "surrogate could not predict a self-target: " + std::string(e.what()));
      }
    });

    // Entity words may not reappear anywhere as a replacement.
    std::vector<std::string> protected_words;
    for (const MaskedPosition& e : result.plan.entries) {
      if (e.reason == MaskReason::kExplicit) protected_words.push_back(ToLower(e.original));
    }

    std::vector<Replacement> applied;
    applied.reserve(result.plan.entries.size());
    for (const MaskedPosition& entry : result.plan.entries) {
      const CandidateSet predicted = clock.Run("predict", [&] {
        return PredictCandidates(prompt, applied, entry.index, result.plan, *providers.mlm,
                                 config.lambda, protected_words);
      });
      const CandidateSet filtered = clock.Run("filter", [&] {
        return FilterCandidates(predicted, *providers.mlm, config.theta_dist, config.fallback,
                                entry.label);
      });
      Replacement chosen = clock.Run("select", [&] {
        return SelectReplacement(prompt, applied, entry.index, filtered, *providers.surrogate, goal,
                                 config.tie_break, config.gradient_scope);
      });
      if (chosen.flag == ReplacementFlag::kNone) chosen.flag = FlagFor(filtered.flag);
      applied.push_back(std::move(chosen));
    }

    std::vector<Span> spans;
    result.desensitized_text = Detokenize(prompt, applied, &spans);
    for (std::size_t i = 0; i < applied.size(); ++i) applied[i].output_span = spans[i];
    result.replacements = std::move(applied);
  }

  if (!config.retain_originals) {
    result.original_text.clear();
    for (Replacement& r : result.replacements) r.original.clear();
    for (MaskedPosition& e : result.plan.entries) e.original.clear();
  }
  return result;
}

std::vector<BatchItem> DesensitizeBatch(std::span<const std::string> texts,
                                        const ObfuscationConfig& config, const Providers& providers,
                                        std::span<const std::optional<TaskTarget>> targets) {
  if (!targets.empty() && targets.size() != texts.size()) {
    throw Error(ErrorCode::kInvalidArgument, "targets must be empty or match the number of texts");
  }
  std::vector<BatchItem> items(texts.size());
  auto run_one = [&](std::size_t i) {
    try {
      items[i].result =
          Desensitize(texts[i], config, providers, targets.empty() ? std::nullopt : targets[i]);
    } catch (const StageError& e) {
      items[i].error = e.what();
      items[i].stage = e.stage();
    } catch (const std::exception& e) {
      items[i].error = e.what();
    }
  };

  const auto workers =
      static_cast<std::size_t>(providers.concurrent_safe() ? std::max(1, config.max_parallel) : 1);
  if (workers <= 1 || texts.size() <= 1) {
    for (std::size_t i = 0; i < texts.size(); ++i) run_one(i);
    return items;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < std::min(workers, texts.size()); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < texts.size(); i = next++) run_one(i);
    });
  }
  pool.clear();
  return items;
}

}  // namespace promptveil
