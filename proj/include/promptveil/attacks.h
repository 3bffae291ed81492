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

// Adversary harness: embedding inference, mask-token inference and PII
// inference against desensitized prompts, plus the random-perturbation
// baseline.

#ifndef PROMPTVEIL_ATTACKS_H_
#define PROMPTVEIL_ATTACKS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "promptveil/candidate_generation.h"
#include "promptveil/evaluation.h"
#include "promptveil/obfuscator.h"
#include "promptveil/privacy_detection.h"

namespace promptveil {

enum class AttackKind { kEmbeddingInference, kMaskTokenInference, kPiiInference };

std::string_view AttackKindName(AttackKind kind);  // "ei", "mti", "pii"
AttackKind ParseAttackKind(std::string_view name);

// One attacked position (EI/MTI) or one attacked example (PII).
struct AttackHit {
  std::size_t example = 0;
  std::size_t position = 0;
  // 1-based rank of the original among the attacker's guesses; nullopt when
  // it was not recovered within the largest k (or the example failed).
  std::optional<std::size_t> rank;
  bool success = false;
  std::string note;
};

struct AttackReport {
  AttackKind attack = AttackKind::kEmbeddingInference;
  std::map<int, double> topk_accuracy;
  double success_rate = 0.0;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;
  // Set when there was nothing to attack and rates are reported as zero.
  bool undefined = false;
  std::vector<AttackHit> per_example;
};

// Fraction of positions whose rank is within k, for each k.
std::map<int, double> TopKAccuracy(std::span<const std::optional<std::size_t>> ranks,
                                   std::span<const int> k_values);

// For every replacement, ranks the attacker's vocabulary by Euclidean
// distance to the replacement's embedding (nearest first, ties by vocabulary
// order, the replacement itself excluded) and records where the original
// lands. Out-of-vocabulary words count as misses.
AttackReport EmbeddingInferenceAttack(std::span<const ObfuscationResult> results,
                                      const MlmProvider& embeddings, std::span<const int> k_values);

// Masks each replaced word in the desensitized text and asks the attacker
// MLM to fill it; a hit at k when the original is among its top k.
AttackReport MaskTokenInferenceAttack(std::span<const ObfuscationResult> results,
                                      const MlmProvider& attacker, std::span<const int> k_values);

// Infers a named attribute (occupation, location, ...) from text.
class AttributeJudge {
 public:
  virtual ~AttributeJudge() = default;
  virtual std::string InferAttribute(const std::string& text, const std::string& attribute) = 0;
};

// Judge backed by a chat endpoint.
class ChatAttributeJudge : public AttributeJudge {
 public:
  explicit ChatAttributeJudge(ChatClient& client) : client_(client) {}

  static TaskTemplate Template();
  std::string InferAttribute(const std::string& text, const std::string& attribute) override;

 private:
  ChatClient& client_;
};

// Lowercase, punctuation stripped, whitespace collapsed.
std::string NormalizeAttribute(std::string_view value);

// True when the token sequence of `needle` occurs in `haystack`
// (case-insensitive, on word boundaries).
bool ContainsPhrase(const TokenizedPrompt& haystack, std::string_view needle);

// Explicit mode: entities are re-detected on each original text; an example
// is a success when any entity surface form survives in its desensitized
// text. Examples without entities are excluded. Requires retained originals.
AttackReport ExplicitPiiAttack(std::span<const ObfuscationResult> results, const NerProvider& ner);

// Implicit mode: the judge guesses `attribute` from the desensitized text and
// succeeds when it matches the label after normalization. Judge failures are
// excluded and flagged.
AttackReport ImplicitPiiAttack(std::span<const ObfuscationResult> results,
                               std::span<const std::string> labels, const std::string& attribute,
                               AttributeJudge& judge);

// Replaces ceil(ratio * m) uniformly chosen content tokens with uniformly
// drawn vocabulary words.
std::string RandomPerturbation(const std::string& text, double ratio, std::uint64_t seed,
                               std::span<const std::string> vocabulary);

}  // namespace promptveil

#endif  // PROMPTVEIL_ATTACKS_H_
