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

#include "promptveil/attacks.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>

namespace promptveil {
namespace {

int MaxK(std::span<const int> k_values) {
  if (k_values.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "at least one k value is required");
  }
  for (int k : k_values) {
    if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k values must be >= 1");
  }
  return *std::max_element(k_values.begin(), k_values.end());
}

void RequireResults(std::span<const ObfuscationResult> results) {
  if (results.empty()) throw Error(ErrorCode::kEmptyResults, "no results to attack");
}

void RequireOriginals(const ObfuscationResult& r) {
  for (const Replacement& rep : r.replacements) {
    if (rep.original.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "results were produced without retained originals");
    }
  }
}

void FinishTopK(AttackReport& report, std::span<const int> k_values) {
  std::vector<std::optional<std::size_t>> ranks;
  for (const AttackHit& h : report.per_example) ranks.push_back(h.rank);
  report.evaluated = ranks.size();
  report.undefined = ranks.empty();
  report.topk_accuracy = TopKAccuracy(ranks, k_values);
}

}  // namespace

std::string_view AttackKindName(AttackKind kind) {
  switch (kind) {
    case AttackKind::kEmbeddingInference:
      return "ei";
    case AttackKind::kMaskTokenInference:
      return "mti";
    case AttackKind::kPiiInference:
      return "pii";
  }
  return "ei";
}

AttackKind ParseAttackKind(std::string_view name) {
  for (auto k : {AttackKind::kEmbeddingInference, AttackKind::kMaskTokenInference,
                 AttackKind::kPiiInference}) {
    if (AttackKindName(k) == name) return k;
  }
  throw Error(ErrorCode::kConfigError,
              "unknown attack '" + std::string(name) + "' (expected ei, mti or pii)");
}

std::map<int, double> TopKAccuracy(std::span<const std::optional<std::size_t>> ranks,
                                   std::span<const int> k_values) {
  MaxK(k_values);
  std::map<int, double> out;
  for (int k : k_values) {
    const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](const auto& r) {
      return r.has_value() && *r <= static_cast<std::size_t>(k);
    });
    out[k] = ranks.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(ranks.size());
  }
  return out;
}

AttackReport EmbeddingInferenceAttack(std::span<const ObfuscationResult> results,
                                      const MlmProvider& embeddings,
                                      std::span<const int> k_values) {
  RequireResults(results);
  MaxK(k_values);
  const std::vector<std::string> vocab = embeddings.Vocabulary();
  std::unordered_map<std::string, std::size_t> index;
  Eigen::MatrixXd table(static_cast<Eigen::Index>(vocab.size()),
                        static_cast<Eigen::Index>(embeddings.embedding_dim()));
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    index.emplace(ToLower(vocab[i]), i);
    const auto v = embeddings.Embedding(vocab[i]);
    if (!v) throw Error(ErrorCode::kProviderFailure, "vocabulary word without embedding");
    table.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(v->data(), static_cast<Eigen::Index>(v->size()));
  }

  AttackReport report;
  report.attack = AttackKind::kEmbeddingInference;
  for (std::size_t e = 0; e < results.size(); ++e) {
    RequireOriginals(results[e]);
    for (const Replacement& rep : results[e].replacements) {
      AttackHit hit{e, rep.position, std::nullopt, false, {}};
      const auto chosen = embeddings.Embedding(rep.chosen);
      const auto orig_it = index.find(ToLower(rep.original));
      if (!chosen) {
        hit.note = "replacement out of vocabulary";
      } else if (orig_it == index.end()) {
        hit.note = "original out of vocabulary";
      } else {
        const Eigen::Map<const Eigen::RowVectorXd> query(chosen->data(),
                                                         static_cast<Eigen::Index>(chosen->size()));
        const Eigen::VectorXd dist = (table.rowwise() - query).rowwise().norm();
        const auto chosen_it = index.find(ToLower(rep.chosen));
        const std::size_t skip = chosen_it == index.end() ? vocab.size() : chosen_it->second;
        const std::size_t target = orig_it->second;
        const double d_target = dist(static_cast<Eigen::Index>(target));
        std::size_t rank = 1;
        for (std::size_t i = 0; i < vocab.size(); ++i) {
          if (i == skip || i == target) continue;
          const double d = dist(static_cast<Eigen::Index>(i));
          if (d < d_target || (d == d_target && i < target)) ++rank;
        }
        hit.rank = rank;
        hit.success = rank == 1;
      }
      report.per_example.push_back(std::move(hit));
    }
  }
  FinishTopK(report, k_values);
  return report;
}

AttackReport MaskTokenInferenceAttack(std::span<const ObfuscationResult> results,
                                      const MlmProvider& attacker, std::span<const int> k_values) {
  RequireResults(results);
  const int k_max = MaxK(k_values);
  AttackReport report;
  report.attack = AttackKind::kMaskTokenInference;
  for (std::size_t e = 0; e < results.size(); ++e) {
    const ObfuscationResult& r = results[e];
    RequireOriginals(r);
    for (const Replacement& rep : r.replacements) {
      const Span& s = rep.output_span;
      if (s.end > r.desensitized_text.size() || s.begin > s.end) {
        throw Error(ErrorCode::kInvalidArgument, "replacement span outside the text");
      }
      std::string context = r.desensitized_text;
      context.replace(s.begin, s.size(), attacker.mask_token());
      std::vector<ScoredToken> guesses;
      try {
        guesses = attacker.FillMask(context, static_cast<std::size_t>(k_max));
      } catch (const std::exception& ex) {
        throw Error(ErrorCode::kProviderFailure,
                    "attacker '" + attacker.model_id() + "' failed: " + ex.what());
      }
      AttackHit hit{e, rep.position, std::nullopt, false, {}};
      for (std::size_t i = 0; i < guesses.size() && i < static_cast<std::size_t>(k_max); ++i) {
        if (EqualsIgnoreCase(guesses[i].token, rep.original)) {
          hit.rank = i + 1;
          hit.success = i == 0;
          break;
        }
      }
      report.per_example.push_back(std::move(hit));
    }
  }
  FinishTopK(report, k_values);
  return report;
}

TaskTemplate ChatAttributeJudge::Template() {
  TaskTemplate t;
  t.task = TaskKind::kQa;
  t.system_prompt =
      "You are an expert investigator with years of experience in online profiling and "
      "text analysis.";
  t.user_template =
      "<<<{TEXT}>>>\n\nBased on the text above, infer the {ATTRIBUTE} of its author. "
      "Give only the value without any other preamble text.";
  return t;
}

std::string ChatAttributeJudge::InferAttribute(const std::string& text,
                                               const std::string& attribute) {
  const std::string reply =
      client_.Complete(Template().Render({{"TEXT", text}, {"ATTRIBUTE", attribute}}));
  const std::size_t start = reply.find_first_not_of(" \t\r\n");
  if (start == std::string::npos) {
    throw Error(ErrorCode::kJudgeFailure, "judge returned an empty answer");
  }
  const std::size_t end = reply.find('\n', start);
  return reply.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

std::string NormalizeAttribute(std::string_view value) {
  std::string out;
  bool space = false;
  for (char c : value) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || u >= 0x80) {
      if (space && !out.empty()) out += ' ';
      out += static_cast<char>(std::tolower(u));
      space = false;
    } else {
      space = true;
    }
  }
  return out;
}

bool ContainsPhrase(const TokenizedPrompt& haystack, std::string_view needle) {
  const TokenizedPrompt n = Tokenize(needle);
  if (n.empty() || n.size() > haystack.size()) return false;
  for (std::size_t i = 0; i + n.size() <= haystack.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < n.size() && match; ++j) {
      match = EqualsIgnoreCase(haystack.tokens[i + j], n.tokens[j]);
    }
    if (match) return true;
  }
  return false;
}

AttackReport ExplicitPiiAttack(std::span<const ObfuscationResult> results, const NerProvider& ner) {
  RequireResults(results);
  AttackReport report;
  report.attack = AttackKind::kPiiInference;
  std::size_t successes = 0;
  for (std::size_t e = 0; e < results.size(); ++e) {
    const ObfuscationResult& r = results[e];
    if (r.original_text.empty() && !r.desensitized_text.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "explicit PII attack needs results with retained originals");
    }
    const TokenizedPrompt original = Tokenize(r.original_text);
    const TokenizedPrompt output = Tokenize(r.desensitized_text);
    AttackHit hit{e, 0, std::nullopt, false, {}};
    std::size_t entities = 0;
    for (const EntitySpan& s : DetectExplicitSpans(original, ner)) {
      const std::size_t b = original.spans[s.start_token].begin;
      const std::size_t end = original.spans[s.end_token - 1].end;
      const std::string surface = original.text.substr(b, end - b);
      if (IsPunctuationToken(surface)) continue;
      ++entities;
      if (!hit.success && ContainsPhrase(output, surface)) {
        hit.success = true;
        hit.position = s.start_token;
        hit.note = "leaked '" + surface + "'";
      }
    }
    if (entities == 0) {
      ++report.excluded;
      continue;
    }
    successes += hit.success ? 1 : 0;
    report.per_example.push_back(std::move(hit));
  }
  report.evaluated = report.per_example.size();
  report.undefined = report.evaluated == 0;
  report.success_rate =
      report.undefined ? 0.0
                       : static_cast<double>(successes) / static_cast<double>(report.evaluated);
  return report;
}

AttackReport ImplicitPiiAttack(std::span<const ObfuscationResult> results,
                               std::span<const std::string> labels, const std::string& attribute,
                               AttributeJudge& judge) {
  RequireResults(results);
  if (labels.size() != results.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one attribute label per result is required");
  }
  AttackReport report;
  report.attack = AttackKind::kPiiInference;
  std::size_t successes = 0;
  for (std::size_t e = 0; e < results.size(); ++e) {
    AttackHit hit{e, 0, std::nullopt, false, {}};
    try {
      const std::string guess = judge.InferAttribute(results[e].desensitized_text, attribute);
      hit.success = NormalizeAttribute(guess) == NormalizeAttribute(labels[e]);
      hit.note = guess;
    } catch (const std::exception& ex) {
      ++report.excluded;
      hit.note = std::string("judge failure: ") + ex.what();
      continue;
    }
    successes += hit.success ? 1 : 0;
    report.per_example.push_back(std::move(hit));
  }
  report.evaluated = report.per_example.size();
  report.undefined = report.evaluated == 0;
  report.success_rate =
      report.undefined ? 0.0
                       : static_cast<double>(successes) / static_cast<double>(report.evaluated);
  return report;
}

std::string RandomPerturbation(const std::string& text, double ratio, std::uint64_t seed,
                               std::span<const std::string> vocabulary) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "ratio must lie in [0, 1]");
  }
  const TokenizedPrompt prompt = Tokenize(text);
  std::vector<std::size_t> content;
  for (std::size_t i = 0; i < prompt.size(); ++i) {
    if (!IsPunctuationToken(prompt.tokens[i])) content.push_back(i);
  }
  const std::size_t count = std::min(ImplicitBudget(ratio, content.size()), content.size());
  if (count == 0) return text;

  std::vector<std::string> words;
  for (const std::string& w : vocabulary) {
    if (!IsPunctuationToken(w)) words.push_back(w);
  }
  if (words.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "random perturbation needs a vocabulary");
  }

  std::mt19937_64 rng(seed);
  std::shuffle(content.begin(), content.end(), rng);
  content.resize(count);
  std::sort(content.begin(), content.end());
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);

  std::vector<Replacement> edits;
  for (std::size_t pos : content) {
    Replacement r;
    r.position = pos;
    r.original = prompt.tokens[pos];
    r.chosen = words[pick(rng)];
    for (int tries = 0; tries < 64 && words.size() > 1 && EqualsIgnoreCase(r.chosen, r.original);
         ++tries) {
      r.chosen = words[pick(rng)];
    }
    edits.push_back(std::move(r));
  }
  return Detokenize(prompt, edits);
}

}  // namespace promptveil
