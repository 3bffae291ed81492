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

#include "promptveil/config.h"

#include <algorithm>
#include <fstream>
#include <set>

#include "promptveil/models.h"

namespace promptveil {
namespace {

using nlohmann::json;

[[noreturn]] void Fail(const std::string& path, const std::string& message) {
  throw Error(ErrorCode::kConfigError, (path.empty() ? "config" : path) + ": " + message);
}

void RequireObject(const json& j, const std::string& path) {
  if (!j.is_object()) Fail(path, "expected an object");
}

void RejectUnknown(const json& j, const std::string& path,
                   std::initializer_list<std::string_view> allowed) {
  RequireObject(j, path);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      Fail(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
    }
  }
}

template <typename T>
void Read(const json& j, std::string_view key, const std::string& path, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    Fail(path.empty() ? std::string(key) : path + "." + std::string(key), "wrong value type");
  }
}

std::string Join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

// Enum parsers raise kConfigError already; this adds the key path.
template <typename Fn>
auto ParseAt(const std::string& where, Fn fn) {
  try {
    return fn();
  } catch (const Error& e) {
    Fail(where, e.what());
  }
}

ProviderSpec ReadProvider(const json& j, const std::string& path, ProviderSpec spec) {
  RejectUnknown(j, path, {"type", "path", "case_sensitive"});
  Read(j, "type", path, spec.type);
  Read(j, "path", path, spec.path);
  Read(j, "case_sensitive", path, spec.case_sensitive);
  const auto types = ProviderTypes();
  if (std::find(types.begin(), types.end(), spec.type) == types.end()) {
    Fail(Join(path, "type"), "unknown provider type '" + spec.type + "'");
  }
  return spec;
}

void ReadObfuscation(const json& j, RunConfig& rc) {
  const std::string path = "obfuscation";
  RejectUnknown(j, path,
                {"lambda", "k", "theta_dist", "desensitization_model_id", "surrogate_model_id",
                 "surrogate_kind", "tie_break", "fallback", "gradient_scope", "retain_originals",
                 "max_parallel"});
  ObfuscationConfig& c = rc.obfuscation;
  Read(j, "lambda", path, c.lambda);
  Read(j, "k", path, c.k);
  Read(j, "theta_dist", path, c.theta_dist);
  Read(j, "desensitization_model_id", path, c.desensitization_model_id);
  Read(j, "surrogate_model_id", path, c.surrogate_model_id);
  Read(j, "retain_originals", path, c.retain_originals);
  Read(j, "max_parallel", path, c.max_parallel);
  std::string name;
  if (j.contains("surrogate_kind")) {
    Read(j, "surrogate_kind", path, name);
    c.surrogate_kind = ParseAt(path + ".surrogate_kind", [&] { return ParseSurrogateKind(name); });
    rc.surrogate_kind_set = true;
  }
  if (j.contains("tie_break")) {
    Read(j, "tie_break", path, name);
    if (name != "by_candidate_rank") Fail(path + ".tie_break", "unknown policy '" + name + "'");
  }
  if (j.contains("fallback")) {
    Read(j, "fallback", path, name);
    c.fallback = ParseAt(path + ".fallback", [&] { return ParseFallbackPolicy(name); });
  }
  if (j.contains("gradient_scope")) {
    Read(j, "gradient_scope", path, name);
    c.gradient_scope = ParseAt(path + ".gradient_scope", [&] { return ParseGradientScope(name); });
  }
}

void ReadData(const json& j, DataSpec& d) {
  const std::string path = "data";
  RejectUnknown(
      j, path,
      {"path", "format", "text_field", "label_field", "attribute_fields", "allowed_labels"});
  Read(j, "path", path, d.path);
  if (j.contains("format")) {
    std::string name;
    Read(j, "format", path, name);
    d.format = ParseAt(path + ".format", [&] { return ParseCorpusFormat(name); });
  }
  Read(j, "text_field", path, d.schema.text_field);
  Read(j, "label_field", path, d.schema.label_field);
  Read(j, "attribute_fields", path, d.schema.attribute_fields);
  Read(j, "allowed_labels", path, d.schema.allowed_labels);
}

void ReadChat(const json& j, RunConfig& rc) {
  const std::string path = "chat";
  RejectUnknown(j, path,
                {"base_url", "model", "api_key_env", "max_retries", "timeout_seconds",
                 "temperature", "initial_backoff_ms", "max_concurrency", "min_interval_ms"});
  ChatClientOptions& c = rc.chat;
  Read(j, "base_url", path, c.base_url);
  Read(j, "model", path, c.model);
  Read(j, "api_key_env", path, c.api_key_env);
  Read(j, "max_retries", path, c.max_retries);
  Read(j, "timeout_seconds", path, c.timeout_seconds);
  Read(j, "temperature", path, c.temperature);
  long long ms = c.initial_backoff.count();
  Read(j, "initial_backoff_ms", path, ms);
  c.initial_backoff = std::chrono::milliseconds(ms);
  Read(j, "max_concurrency", path, rc.fan_out.max_concurrency);
  ms = rc.fan_out.min_interval.count();
  Read(j, "min_interval_ms", path, ms);
  rc.fan_out.min_interval = std::chrono::milliseconds(ms);
}

}  // namespace

RunConfig RunConfig::FromJson(const json& j) {
  RejectUnknown(j, "",
                {"obfuscation", "providers", "tfidf_corpus", "data", "attacks", "k_values",
                 "pii_attribute", "chat", "task", "output_dir", "seed"});
  RunConfig rc;
  if (j.contains("obfuscation")) ReadObfuscation(j["obfuscation"], rc);
  if (j.contains("providers")) {
    const json& p = j["providers"];
    RejectUnknown(p, "providers", {"ner", "mlm", "surrogate", "attacker_mlm"});
    if (p.contains("ner")) rc.ner = ReadProvider(p["ner"], "providers.ner", rc.ner);
    if (p.contains("mlm")) rc.mlm = ReadProvider(p["mlm"], "providers.mlm", rc.mlm);
    if (p.contains("surrogate")) {
      rc.surrogate = ReadProvider(p["surrogate"], "providers.surrogate", rc.surrogate);
    }
    if (p.contains("attacker_mlm")) {
      rc.attacker_mlm = ReadProvider(p["attacker_mlm"], "providers.attacker_mlm", rc.mlm);
    }
  }
  Read(j, "tfidf_corpus", "", rc.tfidf_corpus);
  if (j.contains("data")) ReadData(j["data"], rc.data);
  if (j.contains("attacks")) {
    std::vector<std::string> names;
    Read(j, "attacks", "", names);
    rc.attacks.clear();
    for (const std::string& n : names) {
      rc.attacks.push_back(ParseAt("attacks", [&] { return ParseAttackKind(n); }));
    }
  }
  Read(j, "k_values", "", rc.k_values);
  Read(j, "pii_attribute", "", rc.pii_attribute);
  if (j.contains("chat")) ReadChat(j["chat"], rc);
  if (j.contains("task")) {
    std::string name;
    Read(j, "task", "", name);
    rc.task = ParseAt("task", [&] { return ParseTaskKind(name); });
  }
  Read(j, "output_dir", "", rc.output_dir);
  Read(j, "seed", "", rc.seed);
  rc.obfuscation.seed = rc.seed;
  rc.Validate();
  return rc;
}

RunConfig RunConfig::FromFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, path + ": " + e.what());
  }
  return FromJson(j);
}

void RunConfig::Validate() const {
  obfuscation.Validate();
  if (k_values.empty()) Fail("k_values", "must not be empty");
  for (int k : k_values) {
    if (k < 1) Fail("k_values", "every k must be >= 1");
  }
  if (chat.max_retries < 0) Fail("chat.max_retries", "must be >= 0");
  if (chat.timeout_seconds <= 0) Fail("chat.timeout_seconds", "must be > 0");
  if (fan_out.max_concurrency < 1) Fail("chat.max_concurrency", "must be >= 1");
  if (pii_attribute.empty()) Fail("pii_attribute", "must not be empty");
}

std::vector<std::string> ProviderTypes() {
  return {"gazetteer", "context-mlm", "bag-classifier", "decay-lm"};
}

std::unique_ptr<NerProvider> LoadNer(const ProviderSpec& spec) {
  if (spec.type != "gazetteer") {
    throw Error(ErrorCode::kConfigError, "'" + spec.type + "' is not an NER provider type");
  }
  if (spec.path.empty()) {
    return std::make_unique<GazetteerNer>(DefaultGazetteer(), spec.case_sensitive);
  }
  return std::make_unique<GazetteerNer>(GazetteerNer::FromFile(spec.path, spec.case_sensitive));
}

std::unique_ptr<MlmProvider> LoadMlm(const ProviderSpec& spec) {
  if (spec.type != "context-mlm") {
    throw Error(ErrorCode::kConfigError, "'" + spec.type + "' is not a masked LM provider type");
  }
  if (spec.path.empty()) {
    throw Error(ErrorCode::kConfigError, "masked LM provider needs a model path");
  }
  return LoadMaskedLm(spec.path);
}

std::unique_ptr<SurrogateModel> LoadSurrogateProvider(const ProviderSpec& spec) {
  if (spec.type != "bag-classifier" && spec.type != "decay-lm") {
    throw Error(ErrorCode::kConfigError,
                "'" + spec.type +
                    "' is not a differentiable surrogate type; gradient access is "
                    "required");
  }
  if (spec.path.empty()) {
    throw Error(ErrorCode::kConfigError, "surrogate provider needs a model path");
  }
  std::unique_ptr<DifferentiableSurrogate> model = LoadSurrogate(spec.path);
  const bool is_classifier = dynamic_cast<BagClassifier*>(model.get()) != nullptr;
  if (is_classifier != (spec.type == "bag-classifier")) {
    throw Error(ErrorCode::kConfigError, spec.path + " does not hold a '" + spec.type + "' model");
  }
  return model;
}

Providers LoadedProviders::view() const {
  Providers p;
  p.ner = ner.get();
  p.mlm = mlm.get();
  p.surrogate = surrogate.get();
  p.tfidf = tfidf ? &*tfidf : nullptr;
  return p;
}

LoadedProviders LoadProviders(RunConfig& config) {
  LoadedProviders out;
  out.ner = LoadNer(config.ner);
  out.mlm = LoadMlm(config.mlm);
  out.surrogate = LoadSurrogateProvider(config.surrogate);
  if (config.attacker_mlm) out.attacker_mlm = LoadMlm(*config.attacker_mlm);

  ObfuscationConfig& c = config.obfuscation;
  auto reconcile = [](std::string& configured, const std::string& loaded, const char* what) {
    if (configured.empty()) {
      configured = loaded;
    } else if (configured != loaded) {
      throw Error(ErrorCode::kConfigError, std::string(what) + " is '" + configured +
                                               "' but the loaded model is '" + loaded + "'");
    }
  };
  reconcile(c.desensitization_model_id, out.mlm->model_id(), "desensitization_model_id");
  reconcile(c.surrogate_model_id, out.surrogate->model_id(), "surrogate_model_id");
  if (!config.surrogate_kind_set) {
    c.surrogate_kind = out.surrogate->kind();
  } else if (c.surrogate_kind != out.surrogate->kind()) {
    throw Error(ErrorCode::kConfigError,
                "surrogate_kind is '" + std::string(SurrogateKindName(c.surrogate_kind)) +
                    "' but the loaded surrogate is '" +
                    std::string(SurrogateKindName(out.surrogate->kind())) + "'");
  }

  if (!config.tfidf_corpus.empty()) {
    // Only the text column matters for document frequencies.
    CorpusSchema text_only;
    text_only.text_field = config.data.schema.text_field;
    text_only.label_field.clear();
    const auto examples =
        LoadCorpus(config.tfidf_corpus, CorpusFormatFromPath(config.tfidf_corpus), text_only);
    std::vector<TokenizedPrompt> docs;
    for (const auto& ex : examples) docs.push_back(Tokenize(ex.text));
    out.tfidf = FitTfidf(docs);
  }
  return out;
}

}  // namespace promptveil
