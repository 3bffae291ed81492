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

#include "promptveil/surrogate.h"

#include <cmath>
#include <limits>
#include <vector>

namespace promptveil {
namespace {

// Index of the word token that starts at `offset` in `text`.
std::size_t TokenStartingAt(std::string_view text, std::size_t offset) {
  const TokenizedPrompt tp = Tokenize(text);
  for (std::size_t i = 0; i < tp.size(); ++i) {
    if (tp.spans[i].begin >= offset) return i;
  }
  throw Error(ErrorCode::kPositionOutOfRange, "no token at spliced offset");
}

}  // namespace

double GradientNorm(const SurrogateModel& surrogate, std::string_view prompt,
                    const TaskTarget& target, GradientScope scope, std::size_t position) {
  if (prompt.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "gradient of an empty prompt");
  }
  Eigen::MatrixXd grad;
  try {
    grad = surrogate.InputGradient(prompt, target);
  } catch (const Error& e) {
    throw Error(ErrorCode::kSurrogateFailure,
                "surrogate '" + surrogate.model_id() + "' failed: " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kSurrogateFailure,
                "surrogate '" + surrogate.model_id() + "' failed: " + e.what());
  }
  double norm = 0.0;
  if (scope == GradientScope::kFullInput) {
    norm = grad.norm();
  } else {
    if (position >= static_cast<std::size_t>(grad.rows())) {
      throw Error(ErrorCode::kPositionOutOfRange,
                  "gradient row " + std::to_string(position) + " out of range");
    }
    norm = grad.row(static_cast<Eigen::Index>(position)).norm();
  }
  if (!std::isfinite(norm)) {
    throw Error(ErrorCode::kSurrogateFailure,
                "surrogate '" + surrogate.model_id() + "' produced a non-finite gradient");
  }
  return norm;
}

Replacement SelectReplacement(const TokenizedPrompt& prompt, std::span<const Replacement> applied,
                              std::size_t position, const CandidateSet& filtered,
                              const SurrogateModel& surrogate, const TaskTarget& target,
                              TieBreak /*tie_break*/, GradientScope scope) {
  if (filtered.candidates.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no candidates to select from");
  }
  if (position >= prompt.size()) {
    throw Error(ErrorCode::kPositionOutOfRange,
                "position " + std::to_string(position) + " out of range");
  }

  std::vector<Replacement> edits;
  for (const Replacement& r : applied) {
    if (r.position != position) edits.push_back(r);
  }
  edits.emplace_back();
  edits.back().position = position;

  Replacement best;
  best.position = position;
  best.original = prompt.tokens[position];
  best.candidates_considered = filtered.candidates.size();
  double best_norm = std::numeric_limits<double>::infinity();
  bool found = false;

  for (const Candidate& c : filtered.candidates) {
    edits.back().chosen = c.token;
    std::vector<Span> spans;
    const std::string text = Detokenize(prompt, edits, &spans);
    double norm = 0.0;
    try {
      const std::size_t row =
          scope == GradientScope::kPositionOnly ? TokenStartingAt(text, spans.back().begin) : 0;
      norm = GradientNorm(surrogate, text, target, scope, row);
    } catch (const Error&) {
      continue;
    }
    // Strict comparison keeps the better-ranked candidate on ties.
    if (norm < best_norm) {
      best_norm = norm;
      best.chosen = c.token;
      found = true;
    }
  }

  if (!found) {
    best.chosen = filtered.candidates.front().token;
    best.gradient_norm = 0.0;
    best.flag = ReplacementFlag::kSurrogateFallback;
    return best;
  }
  best.gradient_norm = best_norm;
  return best;
}

}  // namespace promptveil
