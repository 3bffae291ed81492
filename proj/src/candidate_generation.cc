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

#include "promptveil/candidate_generation.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "promptveil/privacy_detection.h"

namespace promptveil {

CandidateSet PredictCandidates(const TokenizedPrompt& prompt, std::span<const Replacement> applied,
                               std::size_t position, const MaskPlan& plan,
                               const MlmProvider& provider, int lambda,
                               std::span<const std::string> excluded) {
  if (position >= prompt.size()) {
    throw Error(ErrorCode::kPositionOutOfRange,
                "position " + std::to_string(position) + " out of range");
  }
  if (plan.find(position) == nullptr) {
    throw Error(ErrorCode::kPositionNotMasked,
                "position " + std::to_string(position) + " is not in the mask plan");
  }
  if (lambda < 1) {
    throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 1");
  }

  std::vector<Replacement> context_edits;
  for (const Replacement& r : applied) {
    if (r.position != position) context_edits.push_back(r);
  }
  Replacement mask;
  mask.position = position;
  mask.chosen = provider.mask_token();
  context_edits.push_back(mask);
  const std::string context = Detokenize(prompt, context_edits);

  std::unordered_set<std::string> blocked;
  blocked.insert(ToLower(prompt.tokens[position]));
  for (const std::string& e : excluded) blocked.insert(ToLower(e));

  const auto wanted = static_cast<std::size_t>(lambda);
  std::size_t top_n = wanted;
  std::vector<ScoredToken> kept;
  while (true) {
    std::vector<ScoredToken> ranked;
    try {
      ranked = provider.FillMask(context, top_n);
    } catch (const Error& e) {
      throw Error(ErrorCode::kProviderFailure,
                  "MLM provider '" + provider.model_id() + "' failed: " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kProviderFailure,
                  "MLM provider '" + provider.model_id() + "' failed: " + e.what());
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const ScoredToken& a, const ScoredToken& b) { return a.score > b.score; });
    kept.clear();
    std::unordered_set<std::string> seen;
    for (const ScoredToken& st : ranked) {
      if (st.fragment || st.token.empty() || IsPunctuationToken(st.token)) continue;
      if (!std::isfinite(st.score)) continue;
      const std::string key = ToLower(st.token);
      if (blocked.contains(key) || !seen.insert(key).second) continue;
      kept.push_back(st);
      if (kept.size() == wanted) break;
    }
    if (kept.size() == wanted || ranked.size() < top_n) break;
    top_n *= 2;
  }

  CandidateSet set;
  set.position = position;
  set.original = prompt.tokens[position];
  for (ScoredToken& st : kept) {
    set.candidates.push_back({std::move(st.token), st.score, 0.0});
  }
  return set;
}

double EmbeddingDistance(const MlmProvider& provider, std::string_view a, std::string_view b) {
  const auto va = provider.Embedding(a);
  if (!va) {
    throw Error(ErrorCode::kOutOfVocabulary,
                "'" + std::string(a) + "' is not in the vocabulary of " + provider.model_id());
  }
  const auto vb = provider.Embedding(b);
  if (!vb) {
    throw Error(ErrorCode::kOutOfVocabulary,
                "'" + std::string(b) + "' is not in the vocabulary of " + provider.model_id());
  }
  if (va->size() != vb->size()) {
    throw Error(ErrorCode::kProviderFailure, "embedding dimensions disagree");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < va->size(); ++i) {
    const double d = (*va)[i] - (*vb)[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

std::string PlaceholderFor(std::string_view label, std::string_view original) {
  std::string choice = "something";
  if (label == labels::kPerson) choice = "someone";
  if (label == labels::kLocation) choice = "somewhere";
  if (EqualsIgnoreCase(choice, original)) {
    choice = EqualsIgnoreCase(original, "something") ? "anything" : "something";
  }
  return choice;
}

CandidateSet FilterCandidates(const CandidateSet& set, const MlmProvider& provider,
                              double theta_dist, FallbackPolicy fallback, std::string_view label) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const auto original_vec = provider.Embedding(set.original);

  auto distance_to = [&](std::string_view token) {
    if (!original_vec) return kInf;
    const auto v = provider.Embedding(token);
    if (!v) return kInf;
    double sum = 0.0;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const double d = (*original_vec)[i] - (*v)[i];
      sum += d * d;
    }
    return std::sqrt(sum);
  };

  CandidateSet scored = set;
  scored.flag = CandidateSetFlag::kNone;
  for (Candidate& c : scored.candidates) c.distance = distance_to(c.token);

  CandidateSet out;
  out.position = set.position;
  out.original = set.original;
  for (const Candidate& c : scored.candidates) {
    if (c.distance > theta_dist) out.candidates.push_back(c);
  }
  if (!out.candidates.empty()) return out;

  if (fallback == FallbackPolicy::kMaxDistanceCandidate && !scored.candidates.empty()) {
    auto best = std::max_element(
        scored.candidates.begin(), scored.candidates.end(),
        [](const Candidate& a, const Candidate& b) { return a.distance < b.distance; });
    out.candidates.push_back(*best);
    out.flag = CandidateSetFlag::kMaxDistanceFallback;
    return out;
  }
  const std::string placeholder = PlaceholderFor(label, set.original);
  out.candidates.push_back({placeholder, 0.0, distance_to(placeholder)});
  out.flag = CandidateSetFlag::kPlaceholderFallback;
  return out;
}

}  // namespace promptveil
