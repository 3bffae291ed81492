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

// Masked-LM candidate prediction and embedding-distance filtering.

#ifndef PROMPTVEIL_CANDIDATE_GENERATION_H_
#define PROMPTVEIL_CANDIDATE_GENERATION_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptveil/core.h"

namespace promptveil {

struct ScoredToken {
  std::string token;
  double score = 0.0;
  // Subword continuation piece; never a whole-word candidate.
  bool fragment = false;
};

class MlmProvider {
 public:
  virtual ~MlmProvider() = default;

  virtual std::string model_id() const = 0;
  // Marker that FillMask expects exactly once in its context.
  virtual std::string mask_token() const = 0;
  // Ranked predictions for the masked slot, best first, at most `top_n`.
  // Returning fewer than `top_n` means the vocabulary is exhausted.
  virtual std::vector<ScoredToken> FillMask(std::string_view context, std::size_t top_n) const = 0;
  // Input embedding of a whole-word token; nullopt when out of vocabulary.
  virtual std::optional<std::vector<double>> Embedding(std::string_view token) const = 0;
  virtual std::size_t embedding_dim() const = 0;
  // Whole-word vocabulary (used by the embedding-inference attack and the
  // random-perturbation baseline).
  virtual std::vector<std::string> Vocabulary() const = 0;
  virtual bool concurrent_safe() const { return true; }
};

enum class CandidateSetFlag { kNone, kMaxDistanceFallback, kPlaceholderFallback };

struct CandidateSet {
  std::size_t position = 0;
  std::string original;
  std::vector<Candidate> candidates;
  CandidateSetFlag flag = CandidateSetFlag::kNone;
};

// Candidates for one masked position. The context sent to the provider is the
// prompt with `applied` spliced in and the target word replaced by the mask
// marker. Predictions equal to the original (case-insensitive), punctuation,
// fragments, duplicates and anything in `excluded` are dropped; deeper ranks
// back-fill until `lambda` candidates or the vocabulary runs out.
CandidateSet PredictCandidates(const TokenizedPrompt& prompt, std::span<const Replacement> applied,
                               std::size_t position, const MaskPlan& plan,
                               const MlmProvider& provider, int lambda,
                               std::span<const std::string> excluded = {});

// Euclidean distance between the provider's embeddings of `a` and `b`.
// Throws Error(kOutOfVocabulary) when either is unknown.
double EmbeddingDistance(const MlmProvider& provider, std::string_view a, std::string_view b);

// Neutral stand-in used by the generic_placeholder fallback.
std::string PlaceholderFor(std::string_view label, std::string_view original);

// Keeps candidates with distance to the original strictly above
// `theta_dist`, preserving rank order. A candidate (or original) without an
// embedding is kept with distance +inf. An empty result is resolved by the
// fallback policy so the returned set is never empty.
CandidateSet FilterCandidates(const CandidateSet& set, const MlmProvider& provider,
                              double theta_dist, FallbackPolicy fallback,
                              std::string_view label = {});

}  // namespace promptveil

#endif  // PROMPTVEIL_CANDIDATE_GENERATION_H_
