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

#include "promptveil/core.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace promptveil {
namespace {

bool IsWordByte(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

bool IsSpaceByte(unsigned char c) { return std::isspace(c) != 0; }

}  // namespace

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "InvalidArgument";
    case ErrorCode::kPositionOutOfRange:
      return "PositionOutOfRange";
    case ErrorCode::kPositionNotMasked:
      return "PositionNotMasked";
    case ErrorCode::kEmptyCorpus:
      return "EmptyCorpus";
    case ErrorCode::kNerProviderFailure:
      return "NerProviderFailure";
    case ErrorCode::kProviderFailure:
      return "ProviderFailure";
    case ErrorCode::kOutOfVocabulary:
      return "OutOfVocabulary";
    case ErrorCode::kSurrogateFailure:
      return "SurrogateFailure";
    case ErrorCode::kEmptyResults:
      return "EmptyResults";
    case ErrorCode::kJudgeFailure:
      return "JudgeFailure";
    case ErrorCode::kUnparseableJudgment:
      return "UnparseableJudgment";
    case ErrorCode::kParseError:
      return "ParseError";
    case ErrorCode::kConfigError:
      return "ConfigError";
    case ErrorCode::kTransportError:
      return "TransportError";
    case ErrorCode::kUnboundPlaceholder:
      return "UnboundPlaceholder";
    case ErrorCode::kIoError:
      return "IoError";
  }
  return "Unknown";
}

TokenizedPrompt Tokenize(std::string_view text) {
  TokenizedPrompt out;
  out.text = std::string(text);
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (IsSpaceByte(c)) {
      ++i;
      continue;
    }
    if (!IsWordByte(c)) {
      out.spans.push_back({i, i + 1});
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n) {
      const auto cj = static_cast<unsigned char>(text[j]);
      if (IsWordByte(cj)) {
        ++j;
      } else if (cj == '\'' && j + 1 < n && IsWordByte(static_cast<unsigned char>(text[j + 1]))) {
        j += 2;
      } else {
        break;
      }
    }
    out.spans.push_back({i, j});
    i = j;
  }
  out.tokens.reserve(out.spans.size());
  for (const Span& s : out.spans) {
    out.tokens.emplace_back(text.substr(s.begin, s.size()));
  }
  return out;
}

bool IsPunctuationToken(std::string_view token) {
  return std::none_of(token.begin(), token.end(),
                      [](char c) { return IsWordByte(static_cast<unsigned char>(c)); });
}

std::string ToLower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

bool EqualsIgnoreCase(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::vector<std::size_t> MaskPlan::positions() const {
  std::vector<std::size_t> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.index);
  return out;
}

const MaskedPosition* MaskPlan::find(std::size_t index) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), index,
                             [](const MaskedPosition& e, std::size_t i) { return e.index < i; });
  if (it == entries.end() || it->index != index) return nullptr;
  return &*it;
}

std::size_t MaskPlan::count(MaskReason reason) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(),
                    [reason](const MaskedPosition& e) { return e.reason == reason; }));
}

std::string_view ReplacementFlagName(ReplacementFlag flag) {
  switch (flag) {
    case ReplacementFlag::kNone:
      return "none";
    case ReplacementFlag::kMaxDistanceFallback:
      return "max_distance_fallback";
    case ReplacementFlag::kPlaceholderFallback:
      return "placeholder_fallback";
    case ReplacementFlag::kSurrogateFallback:
      return "surrogate_fallback";
  }
  return "none";
}

ReplacementFlag ParseReplacementFlag(std::string_view name) {
  for (auto f : {ReplacementFlag::kNone, ReplacementFlag::kMaxDistanceFallback,
                 ReplacementFlag::kPlaceholderFallback, ReplacementFlag::kSurrogateFallback}) {
    if (ReplacementFlagName(f) == name) return f;
  }
  throw Error(ErrorCode::kParseError, "unknown replacement flag '" + std::string(name) + "'");
}

std::string Detokenize(const TokenizedPrompt& prompt, std::span<const Replacement> replacements,
                       std::vector<Span>* output_spans) {
  std::vector<std::size_t> order(replacements.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (const Replacement& r : replacements) {
    if (r.position >= prompt.size()) {
      throw Error(ErrorCode::kPositionOutOfRange,
                  "replacement position " + std::to_string(r.position) + " out of range for " +
                      std::to_string(prompt.size()) + " tokens");
    }
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return replacements[a].position < replacements[b].position;
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (replacements[order[i]].position == replacements[order[i - 1]].position) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate replacement position " +
                                                   std::to_string(replacements[order[i]].position));
    }
  }

  if (output_spans != nullptr) output_spans->assign(replacements.size(), Span{});
  std::string out;
  out.reserve(prompt.text.size());
  std::size_t cursor = 0;
  for (std::size_t idx : order) {
    const Replacement& r = replacements[idx];
    const Span& s = prompt.spans[r.position];
    out.append(prompt.text, cursor, s.begin - cursor);
    const std::size_t begin = out.size();
    out += r.chosen;
    if (output_spans != nullptr) (*output_spans)[idx] = {begin, out.size()};
    cursor = s.end;
  }
  out.append(prompt.text, cursor, std::string::npos);
  return out;
}

std::string_view SurrogateKindName(SurrogateKind kind) {
  return kind == SurrogateKind::kTaskSpecific ? "task_specific" : "general";
}

SurrogateKind ParseSurrogateKind(std::string_view name) {
  if (name == "task_specific") return SurrogateKind::kTaskSpecific;
  if (name == "general") return SurrogateKind::kGeneral;
  throw Error(ErrorCode::kConfigError,
              "surrogate_kind must be task_specific or general, got '" + std::string(name) + "'");
}

std::string_view FallbackPolicyName(FallbackPolicy policy) {
  return policy == FallbackPolicy::kMaxDistanceCandidate ? "max_distance_candidate"
                                                         : "generic_placeholder";
}

FallbackPolicy ParseFallbackPolicy(std::string_view name) {
  if (name == "max_distance_candidate") return FallbackPolicy::kMaxDistanceCandidate;
  if (name == "generic_placeholder") return FallbackPolicy::kGenericPlaceholder;
  throw Error(ErrorCode::kConfigError,
              "fallback must be max_distance_candidate or generic_placeholder, "
              "got '" +
                  std::string(name) + "'");
}

std::string_view GradientScopeName(GradientScope scope) {
  return scope == GradientScope::kFullInput ? "full_input" : "position_only";
}

GradientScope ParseGradientScope(std::string_view name) {
  if (name == "full_input") return GradientScope::kFullInput;
  if (name == "position_only") return GradientScope::kPositionOnly;
  throw Error(ErrorCode::kConfigError, "gradient_scope must be full_input or position_only, got '" +
                                           std::string(name) + "'");
}

void ObfuscationConfig::Validate() const {
  if (lambda < 1) {
    throw Error(ErrorCode::kConfigError, "lambda must be >= 1");
  }
  if (!(k >= 0.0 && k <= 1.0)) {
    throw Error(ErrorCode::kConfigError, "k must lie in [0, 1]");
  }
  if (!(theta_dist > 0.0) || !std::isfinite(theta_dist)) {
    throw Error(ErrorCode::kConfigError, "theta_dist must be positive");
  }
  if (max_parallel < 1) {
    throw Error(ErrorCode::kConfigError, "max_parallel must be >= 1");
  }
}

}  // namespace promptveil
