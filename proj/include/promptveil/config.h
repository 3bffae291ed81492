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

// Run configuration file and the provider registry that turns provider
// specs into loaded models.

#ifndef PROMPTVEIL_CONFIG_H_
#define PROMPTVEIL_CONFIG_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "promptveil/attacks.h"
#include "promptveil/datasets.h"
#include "promptveil/evaluation.h"
#include "promptveil/obfuscator.h"

namespace promptveil {

// A provider named by registry type. `path` points at a model or gazetteer
// file; the gazetteer type falls back to the built-in lists without one.
struct ProviderSpec {
  std::string type;
  std::string path;
  bool case_sensitive = true;
};

struct DataSpec {
  std::string path;
  std::optional<CorpusFormat> format;
  CorpusSchema schema;
};

struct RunConfig {
  ObfuscationConfig obfuscation;
  // False when the file left surrogate_kind out; the loaded model decides.
  bool surrogate_kind_set = false;

  ProviderSpec ner{"gazetteer", "", true};
  ProviderSpec mlm{"context-mlm", "", true};
  ProviderSpec surrogate{"decay-lm", "", true};
  // Attacker MLM for mask-token inference; defaults to the desensitization
  // model.
  std::optional<ProviderSpec> attacker_mlm;
  // Corpus backing the IDF statistics; empty means the batch itself.
  std::string tfidf_corpus;

  DataSpec data;
  std::vector<AttackKind> attacks{AttackKind::kEmbeddingInference, AttackKind::kMaskTokenInference,
                                  AttackKind::kPiiInference};
  std::vector<int> k_values{1, 5, 10};
  // "explicit" or the name of a labelled attribute such as "occupation".
  std::string pii_attribute = "explicit";

  ChatClientOptions chat;
  FanOutOptions fan_out;
  TaskKind task = TaskKind::kSentiment;

  std::string output_dir = "out";
  std::uint64_t seed = 0;

  // Rejects unknown keys at every level with the offending key path.
  static RunConfig FromJson(const nlohmann::json& j);
  static RunConfig FromFile(const std::string& path);
  void Validate() const;
};

std::vector<std::string> ProviderTypes();

struct LoadedProviders {
  std::unique_ptr<NerProvider> ner;
  std::unique_ptr<MlmProvider> mlm;
  std::unique_ptr<SurrogateModel> surrogate;
  std::unique_ptr<MlmProvider> attacker_mlm;
  std::optional<TfidfModel> tfidf;

  Providers view() const;
  const MlmProvider& attacker() const { return attacker_mlm ? *attacker_mlm : *mlm; }
};

// Loads every provider the config names and reconciles model ids and the
// surrogate kind with `config.obfuscation` (filling them in when empty).
LoadedProviders LoadProviders(RunConfig& config);

std::unique_ptr<NerProvider> LoadNer(const ProviderSpec& spec);
std::unique_ptr<MlmProvider> LoadMlm(const ProviderSpec& spec);
std::unique_ptr<SurrogateModel> LoadSurrogateProvider(const ProviderSpec& spec);

}  // namespace promptveil

#endif  // PROMPTVEIL_CONFIG_H_
