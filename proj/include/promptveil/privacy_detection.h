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

// Explicit (NER) and implicit (TF-IDF rarity) privacy detection, and the
// mask plan built from both.

#ifndef PROMPTVEIL_PRIVACY_DETECTION_H_
#define PROMPTVEIL_PRIVACY_DETECTION_H_

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "promptveil/core.h"

namespace promptveil {

namespace labels {
inline constexpr std::string_view kPerson = "PERSON";
inline constexpr std::string_view kLocation = "LOCATION";
inline constexpr std::string_view kOrganization = "ORGANIZATION";
inline constexpr std::string_view kDate = "DATE";
}  // namespace labels

// Character-level entity as reported by an NER provider.
struct CharEntity {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string label;
};

// Token range [start_token, end_token) carrying an entity label.
struct EntitySpan {
  std::size_t start_token = 0;
  std::size_t end_token = 0;
  std::string label;

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

class NerProvider {
 public:
  virtual ~NerProvider() = default;

  virtual std::string id() const = 0;
  // Entities as half-open character ranges into `text`.
  virtual std::vector<CharEntity> Analyze(std::string_view text) const = 0;
  virtual bool concurrent_safe() const { return true; }
};

// Dictionary- and rule-driven tagger. Multi-word gazetteer entries are
// matched longest-first on token boundaries; digit runs are tagged DATE (up
// to four digits) or NUMBER; month and weekday names are DATE; a capitalized
// word after an honorific (Mr, Mrs, Ms, Dr, Prof) is PERSON.
class GazetteerNer : public NerProvider {
 public:
  // label -> surface forms
  using Gazetteer = std::map<std::string, std::vector<std::string>>;

  explicit GazetteerNer(Gazetteer gazetteer, bool case_sensitive = true);

  // Reads {"LOCATION": [...], "PERSON": [...], ...} from a JSON file.
  static GazetteerNer FromFile(const std::string& path, bool case_sensitive = true);

  std::string id() const override { return "gazetteer"; }
  std::vector<CharEntity> Analyze(std::string_view text) const override;

  const Gazetteer& gazetteer() const { return gazetteer_; }

 private:
  struct Entry {
    std::vector<std::string> tokens;
    std::string label;
  };

  Gazetteer gazetteer_;
  bool case_sensitive_;
  // first token (possibly lowercased) -> candidate entries, longest first
  std::unordered_map<std::string, std::vector<Entry>> index_;
};

// Maps provider entities onto tokens, drops ranges that cover no token, and
// merges overlapping ranges (the label of the widest input span wins).
// Provider exceptions are rethrown as Error(kNerProviderFailure).
std::vector<EntitySpan> DetectExplicitSpans(const TokenizedPrompt& prompt, const NerProvider& ner);

// Adds a span for every other occurrence (case-insensitive token match) of a
// detected entity's surface form, so a name tagged once is masked everywhere.
std::vector<EntitySpan> PropagateEntityMentions(const TokenizedPrompt& prompt,
                                                std::span<const EntitySpan> spans);

struct TfidfModel {
  std::unordered_map<std::string, std::size_t> document_frequency;
  std::size_t corpus_size = 0;

  // Zero for tokens never seen in the corpus. Case-insensitive.
  std::size_t df(std::string_view token) const;
  // ln((1 + N) / (1 + df)) + 1
  double idf(std::string_view token) const;
};

TfidfModel FitTfidf(std::span<const TokenizedPrompt> corpus);

// tf (raw count of the lowercased token over prompt length) times smoothed idf.
double TfidfScore(const TfidfModel& model, const TokenizedPrompt& prompt, std::size_t position);

// Number of implicit positions requested for `content_tokens` at ratio k:
// ceil(k * m), with a small tolerance so that 0.3 * 10 stays 3.
std::size_t ImplicitBudget(double k, std::size_t content_tokens);

MaskPlan BuildMaskPlan(const TokenizedPrompt& prompt, std::span<const EntitySpan> spans,
                       const TfidfModel& model, const ObfuscationConfig& config);

}  // namespace promptveil

#endif  // PROMPTVEIL_PRIVACY_DETECTION_H_
