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

#include "promptveil/privacy_detection.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_set>

#include "nlohmann/json.hpp"

namespace promptveil {
namespace {

bool IsAllDigits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isdigit(static_cast<unsigned char>(c)) != 0;
  });
}

bool IsCapitalized(std::string_view s) {
  return !s.empty() && std::isupper(static_cast<unsigned char>(s[0])) != 0;
}

const std::unordered_set<std::string>& DateWords() {
  static const std::unordered_set<std::string> kWords = {
      "january",   "february",  "march",   "april",    "may",      "june",   "july",
      "august",    "september", "october", "november", "december", "monday", "tuesday",
      "wednesday", "thursday",  "friday",  "saturday", "sunday"};
  return kWords;
}

const std::unordered_set<std::string>& Honorifics() {
  static const std::unordered_set<std::string> kWords = {"mr", "mrs", "ms", "dr", "prof"};
  return kWords;
}

std::vector<EntitySpan> MergeSpans(std::vector<EntitySpan> spans) {
  std::stable_sort(spans.begin(), spans.end(), [](const EntitySpan& a, const EntitySpan& b) {
    if (a.start_token != b.start_token) {
      return a.start_token < b.start_token;
    }
    return a.end_token - a.start_token > b.end_token - b.start_token;
  });
  std::vector<EntitySpan> merged;
  std::size_t widest = 0;
  for (const EntitySpan& s : spans) {
    if (!merged.empty() && s.start_token < merged.back().end_token) {
      EntitySpan& cur = merged.back();
      const std::size_t width = s.end_token - s.start_token;
      if (width > widest) {
        widest = width;
        cur.label = s.label;
      }
      cur.end_token = std::max(cur.end_token, s.end_token);
      continue;
    }
    merged.push_back(s);
    widest = s.end_token - s.start_token;
  }
  return merged;
}

}  // namespace

GazetteerNer::GazetteerNer(Gazetteer gazetteer, bool case_sensitive)
    : gazetteer_(std::move(gazetteer)), case_sensitive_(case_sensitive) {
  for (const auto& [label, forms] : gazetteer_) {
    for (const std::string& form : forms) {
      TokenizedPrompt tp = Tokenize(form);
      if (tp.empty()) continue;
      Entry e{tp.tokens, label};
      if (!case_sensitive_) {
        for (auto& t : e.tokens) t = ToLower(t);
      }
      index_[e.tokens.front()].push_back(std::move(e));
    }
  }
  for (auto& [first, entries] : index_) {
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      return a.tokens.size() > b.tokens.size();
    });
  }
}

GazetteerNer GazetteerNer::FromFile(const std::string& path, bool case_sensitive) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot open gazetteer file " + path);
  }
  Gazetteer g;
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    for (auto it = j.begin(); it != j.end(); ++it) {
      g[it.key()] = it.value().get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
  return GazetteerNer(std::move(g), case_sensitive);
}

std::vector<CharEntity> GazetteerNer::Analyze(std::string_view text) const {
  const TokenizedPrompt tp = Tokenize(text);
  std::vector<std::string> keys = tp.tokens;
  if (!case_sensitive_) {
    for (auto& t : keys) t = ToLower(t);
  }
  std::vector<CharEntity> out;
  std::size_t i = 0;
  while (i < tp.size()) {
    std::size_t matched = 0;
    std::string label;
    if (auto it = index_.find(keys[i]); it != index_.end()) {
      for (const Entry& e : it->second) {
        if (i + e.tokens.size() > keys.size()) continue;
        if (std::equal(e.tokens.begin(), e.tokens.end(), keys.begin() + i)) {
          matched = e.tokens.size();
          label = e.label;
          break;
        }
      }
    }
    if (matched == 0) {
      const std::string& tok = tp.tokens[i];
      const std::string lower = ToLower(tok);
      if (IsAllDigits(tok)) {
        matched = 1;
        label = tok.size() <= 4 ? std::string(labels::kDate) : "NUMBER";
      } else if (IsCapitalized(tok) && DateWords().contains(lower)) {
        matched = 1;
        label = std::string(labels::kDate);
      } else if (Honorifics().contains(lower)) {
        std::size_t j = i + 1;
        if (j < tp.size() && tp.tokens[j] == ".") ++j;
        if (j < tp.size() && IsCapitalized(tp.tokens[j]) && !IsPunctuationToken(tp.tokens[j])) {
          out.push_back({tp.spans[j].begin, tp.spans[j].end, std::string(labels::kPerson)});
          i = j + 1;
          continue;
        }
      }
    }
    if (matched > 0) {
      out.push_back({tp.spans[i].begin, tp.spans[i + matched - 1].end, label});
      i += matched;
    } else {
      ++i;
    }
  }
  return out;
}

std::vector<EntitySpan> DetectExplicitSpans(const TokenizedPrompt& prompt, const NerProvider& ner) {
  std::vector<CharEntity> raw;
  try {
    raw = ner.Analyze(prompt.text);
  } catch (const Error& e) {
    throw Error(ErrorCode::kNerProviderFailure,
                "NER provider '" + ner.id() + "' failed: " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kNerProviderFailure,
                "NER provider '" + ner.id() + "' failed: " + e.what());
  }

  std::vector<EntitySpan> spans;
  for (const CharEntity& ce : raw) {
    if (ce.begin >= ce.end || ce.end > prompt.text.size()) {
      throw Error(ErrorCode::kNerProviderFailure,
                  "NER provider '" + ner.id() + "' returned invalid range [" +
                      std::to_string(ce.begin) + ", " + std::to_string(ce.end) + ")");
    }
    std::size_t first = prompt.size();
    std::size_t last = 0;
    for (std::size_t t = 0; t < prompt.size(); ++t) {
      const Span& s = prompt.spans[t];
      if (s.begin < ce.end && ce.begin < s.end) {
        first = std::min(first, t);
        last = t + 1;
      }
    }
    if (first < last) spans.push_back({first, last, ce.label});
  }
  return MergeSpans(std::move(spans));
}

std::vector<EntitySpan> PropagateEntityMentions(const TokenizedPrompt& prompt,
                                                std::span<const EntitySpan> spans) {
  std::vector<EntitySpan> all(spans.begin(), spans.end());
  std::vector<std::string> lower(prompt.size());
  for (std::size_t i = 0; i < prompt.size(); ++i) lower[i] = ToLower(prompt.tokens[i]);

  for (const EntitySpan& s : spans) {
    const std::size_t width = s.end_token - s.start_token;
    bool has_content = false;
    for (std::size_t t = s.start_token; t < s.end_token; ++t) {
      has_content = has_content || !IsPunctuationToken(prompt.tokens[t]);
    }
    if (!has_content || width == 0) continue;
    for (std::size_t i = 0; i + width <= prompt.size(); ++i) {
      if (i == s.start_token) continue;
      if (std::equal(lower.begin() + s.start_token, lower.begin() + s.end_token,
                     lower.begin() + i)) {
        all.push_back({i, i + width, s.label});
      }
    }
  }
  return MergeSpans(std::move(all));
}

std::size_t TfidfModel::df(std::string_view token) const {
  auto it = document_frequency.find(ToLower(token));
  return it == document_frequency.end() ? 0 : it->second;
}

double TfidfModel::idf(std::string_view token) const {
  return std::log((1.0 + static_cast<double>(corpus_size)) /
                  (1.0 + static_cast<double>(df(token)))) +
         1.0;
}

TfidfModel FitTfidf(std::span<const TokenizedPrompt> corpus) {
  if (corpus.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "cannot fit TF-IDF on an empty corpus");
  }
  TfidfModel model;
  model.corpus_size = corpus.size();
  for (const TokenizedPrompt& doc : corpus) {
    std::unordered_set<std::string> seen;
    for (const std::string& tok : doc.tokens) seen.insert(ToLower(tok));
    for (const std::string& tok : seen) ++model.document_frequency[tok];
  }
  return model;
}

double TfidfScore(const TfidfModel& model, const TokenizedPrompt& prompt, std::size_t position) {
  if (position >= prompt.size()) {
    throw Error(ErrorCode::kPositionOutOfRange,
                "TF-IDF position " + std::to_string(position) + " out of range");
  }
  const std::string& target = prompt.tokens[position];
  const auto count =
      std::count_if(prompt.tokens.begin(), prompt.tokens.end(),
                    [&](const std::string& t) { return EqualsIgnoreCase(t, target); });
  const double tf = static_cast<double>(count) / static_cast<double>(prompt.size());
  return tf * model.idf(target);
}

std::size_t ImplicitBudget(double k, std::size_t content_tokens) {
  if (k <= 0.0 || content_tokens == 0) return 0;
  const double raw = k * static_cast<double>(content_tokens);
  return static_cast<std::size_t>(std::ceil(raw - 1e-9));
}

MaskPlan BuildMaskPlan(const TokenizedPrompt& prompt, std::span<const EntitySpan> spans,
                       const TfidfModel& model, const ObfuscationConfig& config) {
  std::map<std::size_t, std::string> explicit_positions;
  for (const EntitySpan& s : spans) {
    if (s.start_token >= s.end_token || s.end_token > prompt.size()) {
      throw Error(ErrorCode::kPositionOutOfRange, "entity span [" + std::to_string(s.start_token) +
                                                      ", " + std::to_string(s.end_token) +
                                                      ") invalid for " +
                                                      std::to_string(prompt.size()) + " tokens");
    }
    for (std::size_t t = s.start_token; t < s.end_token; ++t) {
      if (!IsPunctuationToken(prompt.tokens[t])) explicit_positions.emplace(t, s.label);
    }
  }

  std::size_t content = 0;
  std::vector<std::pair<double, std::size_t>> pool;
  for (std::size_t t = 0; t < prompt.size(); ++t) {
    if (IsPunctuationToken(prompt.tokens[t])) continue;
    ++content;
    if (!explicit_positions.contains(t)) pool.emplace_back(TfidfScore(model, prompt, t), t);
  }
  const std::size_t budget = std::min(ImplicitBudget(config.k, content), pool.size());
  std::stable_sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  MaskPlan plan;
  for (const auto& [pos, label] : explicit_positions) {
    plan.entries.push_back({pos, MaskReason::kExplicit, prompt.tokens[pos], label});
  }
  for (std::size_t i = 0; i < budget; ++i) {
    const std::size_t pos = pool[i].second;
    plan.entries.push_back({pos, MaskReason::kImplicit, prompt.tokens[pos], ""});
  }
  std::sort(plan.entries.begin(), plan.entries.end(),
            [](const MaskedPosition& a, const MaskedPosition& b) { return a.index < b.index; });
  return plan;
}

}  // namespace promptveil
