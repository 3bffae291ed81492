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

// Shared domain types, word-level tokenization and pipeline configuration.

#ifndef PROMPTVEIL_CORE_H_
#define PROMPTVEIL_CORE_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptveil/error.h"

namespace promptveil {

// Half-open character range [begin, end) into a prompt's text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const Span&, const Span&) = default;
};

// A prompt segmented into word-level tokens. `tokens[i]` is always the
// substring of `text` covered by `spans[i]`; spans are non-overlapping and
// strictly increasing.
struct TokenizedPrompt {
  std::string text;
  std::vector<std::string> tokens;
  std::vector<Span> spans;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
};

// Segments on whitespace and punctuation; each punctuation character becomes
// its own token. An apostrophe between two word characters stays inside the
// word ("I'm"). Bytes >= 0x80 count as word characters so UTF-8 text is never
// split inside a code point.
TokenizedPrompt Tokenize(std::string_view text);

// True when the token has no word characters. Punctuation is never maskable.
bool IsPunctuationToken(std::string_view token);

std::string ToLower(std::string_view s);
bool EqualsIgnoreCase(std::string_view a, std::string_view b);

enum class MaskReason { kExplicit, kImplicit };

struct MaskedPosition {
  std::size_t index = 0;
  MaskReason reason = MaskReason::kImplicit;
  std::string original;
  // Entity label for explicit positions (PERSON, LOCATION, ...); empty for
  // implicit ones.
  std::string label;
};

// Positions to obfuscate, unique and ascending.
struct MaskPlan {
  std::vector<MaskedPosition> entries;

  std::vector<std::size_t> positions() const;
  const MaskedPosition* find(std::size_t index) const;
  std::size_t count(MaskReason reason) const;
};

struct Candidate {
  std::string token;
  double mlm_score = 0.0;
  // Euclidean distance to the original word; filled in by FilterCandidates.
  double distance = 0.0;
};

// How a replacement was arrived at when the normal path could not be used.
enum class ReplacementFlag {
  kNone,
  kMaxDistanceFallback,
  kPlaceholderFallback,
  kSurrogateFallback,
};

std::string_view ReplacementFlagName(ReplacementFlag flag);
ReplacementFlag ParseReplacementFlag(std::string_view name);

struct Replacement {
  std::size_t position = 0;
  std::string original;
  std::string chosen;
  double gradient_norm = 0.0;
  std::size_t candidates_considered = 0;
  ReplacementFlag flag = ReplacementFlag::kNone;
  // Where `chosen` sits in the desensitized text.
  Span output_span;
};

// Splices each replacement's `chosen` over its token's span. Positions must
// be unique and in range. When `output_spans` is given it receives the span
// of every replacement in the returned text, in the order of `replacements`.
std::string Detokenize(const TokenizedPrompt& prompt, std::span<const Replacement> replacements,
                       std::vector<Span>* output_spans = nullptr);

enum class SurrogateKind { kTaskSpecific, kGeneral };
enum class TieBreak { kByCandidateRank };
enum class FallbackPolicy { kMaxDistanceCandidate, kGenericPlaceholder };
enum class GradientScope { kFullInput, kPositionOnly };

std::string_view SurrogateKindName(SurrogateKind kind);
SurrogateKind ParseSurrogateKind(std::string_view name);
std::string_view FallbackPolicyName(FallbackPolicy policy);
FallbackPolicy ParseFallbackPolicy(std::string_view name);
std::string_view GradientScopeName(GradientScope scope);
GradientScope ParseGradientScope(std::string_view name);

struct ObfuscationConfig {
  int lambda = 10;
  double k = 0.1;
  double theta_dist = 0.95;
  std::string desensitization_model_id;
  std::string surrogate_model_id;
  SurrogateKind surrogate_kind = SurrogateKind::kGeneral;
  TieBreak tie_break = TieBreak::kByCandidateRank;
  FallbackPolicy fallback = FallbackPolicy::kMaxDistanceCandidate;
  GradientScope gradient_scope = GradientScope::kFullInput;
  std::uint64_t seed = 0;
  // When false, results drop original words and text after processing.
  bool retain_originals = true;
  // Batch fan-out; only honoured when every provider is concurrent-safe.
  int max_parallel = 1;

  // Throws Error(kConfigError) when an invariant is violated.
  void Validate() const;
};

}  // namespace promptveil

#endif  // PROMPTVEIL_CORE_H_
