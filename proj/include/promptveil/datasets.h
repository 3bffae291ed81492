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

// Corpus loading/saving, portrait profile sampling and generation, and the
// offline synthetic corpora used to train the bundled small models.

#ifndef PROMPTVEIL_DATASETS_H_
#define PROMPTVEIL_DATASETS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptveil/evaluation.h"
#include "promptveil/privacy_detection.h"

namespace promptveil {

struct LabeledExample {
  std::string text;
  std::string label;
  // Portrait examples carry age, gender, location, occupation and disorder.
  std::map<std::string, std::string> attributes;
  bool expert_reviewed = false;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

enum class CorpusFormat { kTsv, kCsv, kJsonl };

CorpusFormat ParseCorpusFormat(std::string_view name);
// By extension: .tsv, .csv, .jsonl/.json.
CorpusFormat CorpusFormatFromPath(const std::string& path);

struct CorpusSchema {
  std::string text_field = "text";
  // Empty for unlabelled corpora.
  std::string label_field = "label";
  // Extra columns/keys copied into `attributes`.
  std::vector<std::string> attribute_fields;
  // When non-empty, labels outside this set are rejected.
  std::vector<std::string> allowed_labels;
};

// TSV and CSV need a header row naming the columns. TSV fields escape tab,
// newline and backslash as \t, \n and \\. JSONL lines are objects and may
// carry an "attributes" object and an "expert_reviewed" flag. Malformed rows
// raise Error(kParseError) naming the line.
std::vector<LabeledExample> LoadCorpus(const std::string& path, CorpusFormat format,
                                       const CorpusSchema& schema = {});
void SaveCorpus(const std::string& path, CorpusFormat format,
                std::span<const LabeledExample> examples, const CorpusSchema& schema = {});

inline constexpr std::size_t kPortraitLocations = 20;
inline constexpr std::size_t kPortraitOccupations = 20;
inline constexpr std::size_t kPortraitDisorders = 10;

struct PortraitCategories {
  std::vector<std::string> locations;
  std::vector<std::string> occupations;
  std::vector<std::string> disorders;

  static PortraitCategories Default();
  // {"locations": [...], "occupations": [...], "disorders": [...]}
  static PortraitCategories FromFile(const std::string& path);
  // Non-fatal complaints about list sizes (expected 20/20/10).
  std::vector<std::string> Warnings() const;
};

struct PortraitProfile {
  int age = 18;
  std::string gender;
  std::string location;
  std::string occupation;
  std::string disorder;

  friend bool operator==(const PortraitProfile&, const PortraitProfile&) = default;
};

// Age uniform on [18, 65], gender fair coin, categories uniform.
PortraitProfile SampleProfile(std::uint64_t seed,
                              const PortraitCategories& categories = PortraitCategories::Default());

// Template values AGE, GENDER, OCCUPATION, DISORDER, LOCATION.
std::map<std::string, std::string> ProfileValues(const PortraitProfile& profile);
std::map<std::string, std::string> ProfileAttributes(const PortraitProfile& profile);

// Renders the generation template (failing before any call if a placeholder
// is unbound) and stores the reply with the full attribute map; the label is
// the disorder.
LabeledExample GeneratePortrait(
    const PortraitProfile& profile, ChatClient& client,
    const TaskTemplate& tmpl = TaskTemplate::Default(TaskKind::kPortraitGeneration));

// First-person narrative assembled from phrase banks; an offline stand-in for
// an LLM-written portrait that mentions the location and occupation.
std::string ComposePortraitNarrative(const PortraitProfile& profile, std::uint64_t seed);

// News-style sentences labelled World, Sports, Business or Sci/Tech.
std::vector<LabeledExample> SyntheticNews(std::uint64_t seed, std::size_t count);

// Entities used by the synthetic corpora and the default portrait
// categories, keyed by NER label.
GazetteerNer::Gazetteer DefaultGazetteer();

}  // namespace promptveil

#endif  // PROMPTVEIL_DATASETS_H_
