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

#include "promptveil/cli.h"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "promptveil/attacks.h"
#include "promptveil/benchmark.h"
#include "promptveil/config.h"
#include "promptveil/datasets.h"
#include "promptveil/evaluation.h"
#include "promptveil/models.h"
#include "promptveil/records.h"

namespace promptveil {
namespace {

namespace fs = std::filesystem;

// Flags shared by every pipeline command.
struct CommonFlags {
  std::string config_path;
  std::optional<double> k;
  std::optional<int> lambda;
  std::optional<double> theta_dist;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void AddCommonFlags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Run configuration (JSON)");
  cmd->add_option("--k", flags.k, "Implicit confusion ratio in [0, 1]");
  cmd->add_option("--lambda", flags.lambda, "Candidates per masked position");
  cmd->add_option("--theta-dist", flags.theta_dist, "Minimum embedding distance");
  cmd->add_option("--seed", flags.seed, "Random seed");
  cmd->add_option("--out", flags.out_dir, "Output directory");
}

RunConfig LoadRunConfig(const CommonFlags& flags) {
  RunConfig rc = flags.config_path.empty() ? RunConfig::FromJson(nlohmann::json::object())
                                           : RunConfig::FromFile(flags.config_path);
  if (flags.k) rc.obfuscation.k = *flags.k;
  if (flags.lambda) rc.obfuscation.lambda = *flags.lambda;
  if (flags.theta_dist) rc.obfuscation.theta_dist = *flags.theta_dist;
  if (flags.seed) {
    rc.seed = *flags.seed;
    rc.obfuscation.seed = *flags.seed;
  }
  if (!flags.out_dir.empty()) rc.output_dir = flags.out_dir;
  rc.Validate();
  return rc;
}

std::ofstream OpenOutput(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  const std::string path = (fs::path(dir) / name).string();
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  return out;
}

std::vector<LabeledExample> LoadData(const RunConfig& rc, const std::string& override_path) {
  const std::string path = override_path.empty() ? rc.data.path : override_path;
  if (path.empty()) {
    throw Error(ErrorCode::kConfigError, "no input corpus: set data.path or pass --input");
  }
  if (!fs::exists(path)) throw Error(ErrorCode::kIoError, "input file not found: " + path);
  const CorpusFormat format = rc.data.format ? *rc.data.format : CorpusFormatFromPath(path);
  return LoadCorpus(path, format, rc.data.schema);
}

std::string Fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

// --- train -----------------------------------------------------------------

struct TrainFlags {
  std::string kind;
  std::string input;
  std::size_t synthetic = 0;
  std::string model_id;
  std::uint64_t seed = 1;
  std::optional<int> epochs;
  std::optional<int> dim;
  std::string out_dir = "models";
};

int CmdTrain(const TrainFlags& f, std::ostream& out) {
  std::vector<LabeledExample> examples;
  if (!f.input.empty()) {
    if (!fs::exists(f.input)) throw Error(ErrorCode::kIoError, "input file not found: " + f.input);
    CorpusSchema schema;
    if (f.kind != "classifier") schema.label_field.clear();
    examples = LoadCorpus(f.input, CorpusFormatFromPath(f.input), schema);
  } else if (f.synthetic > 0) {
    examples = SyntheticNews(f.seed, f.synthetic);
  } else {
    throw Error(ErrorCode::kConfigError, "train needs --input or --synthetic-news");
  }
  std::vector<TokenizedPrompt> docs;
  std::vector<std::string> labels;
  for (const auto& ex : examples) {
    docs.push_back(Tokenize(ex.text));
    labels.push_back(ex.label);
  }
  const std::string id = f.model_id.empty() ? f.kind : f.model_id;
  fs::create_directories(f.out_dir);
  const std::string path = (fs::path(f.out_dir) / (id + ".json")).string();
  if (f.kind == "mlm") {
    MlmTrainOptions o;
    o.seed = f.seed;
    if (f.epochs) o.epochs = *f.epochs;
    if (f.dim) o.dim = *f.dim;
    SaveModel(ContextMaskedLm::Train(id, docs, o), path);
  } else if (f.kind == "classifier") {
    ClassifierTrainOptions o;
    o.seed = f.seed;
    if (f.epochs) o.epochs = *f.epochs;
    if (f.dim) o.dim = *f.dim;
    SaveModel(BagClassifier::Train(id, docs, labels, o), path);
  } else if (f.kind == "causal-lm") {
    CausalLmTrainOptions o;
    o.seed = f.seed;
    if (f.epochs) o.epochs = *f.epochs;
    if (f.dim) o.dim = *f.dim;
    SaveModel(DecayCausalLm::Train(id, docs, o), path);
  } else {
    throw Error(ErrorCode::kConfigError, "unknown model kind '" + f.kind + "'");
  }
  out << "trained " << f.kind << " '" << id << "' on " << docs.size() << " texts -> " << path
      << '\n';
  return kExitOk;
}

// --- desensitize -----------------------------------------------------------

struct DesensitizeFlags {
  CommonFlags common;
  std::string input;
  std::string prompt;
  bool strict = false;
  bool timing = false;
};

int CmdDesensitize(const DesensitizeFlags& f, std::ostream& out, std::ostream& err) {
  RunConfig rc = LoadRunConfig(f.common);
  std::vector<std::string> texts;
  if (!f.prompt.empty()) {
    texts.push_back(f.prompt);
  } else {
    for (auto& ex : LoadData(rc, f.input)) texts.push_back(std::move(ex.text));
  }
  LoadedProviders lp = LoadProviders(rc);
  if (!lp.tfidf) {
    std::vector<TokenizedPrompt> docs;
    for (const auto& t : texts) docs.push_back(Tokenize(t));
    if (!docs.empty()) lp.tfidf = FitTfidf(docs);
  }
  const auto items = DesensitizeBatch(texts, rc.obfuscation, lp.view());
  std::ofstream file = OpenOutput(rc.output_dir, "results.jsonl");
  WriteResultRecords(file, items, f.timing);

  std::size_t failed = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!items[i].ok()) {
      ++failed;
      err << "item " << i << " failed at " << items[i].stage << ": " << items[i].error << '\n';
    }
  }
  if (!f.prompt.empty() && items.front().ok())
    out << items.front().result->desensitized_text << '\n';
  out << "desensitized " << (items.size() - failed) << "/" << items.size() << " prompts -> "
      << (fs::path(rc.output_dir) / "results.jsonl").string() << '\n';
  return failed > 0 && f.strict ? kExitItemFailures : kExitOk;
}

// --- attack ----------------------------------------------------------------

struct AttackFlags {
  CommonFlags common;
  std::string results;
  std::string attacks;
  std::string input;
};

// Attribute labels aligned with the result indices.
std::vector<std::string> AttributeLabels(const RunConfig& rc, const std::string& input,
                                         const ResultRecords& records,
                                         const std::string& attribute) {
  const auto examples = LoadData(rc, input);
  std::vector<std::string> labels;
  for (std::size_t idx : records.indices) {
    if (idx >= examples.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "result index " + std::to_string(idx) + " exceeds the corpus size");
    }
    const auto& attrs = examples[idx].attributes;
    auto it = attrs.find(attribute);
    if (it != attrs.end()) {
      labels.push_back(it->second);
    } else if (attribute == "label" || attribute == rc.data.schema.label_field) {
      labels.push_back(examples[idx].label);
    } else {
      throw Error(ErrorCode::kInvalidArgument,
                  "example " + std::to_string(idx) + " has no attribute '" + attribute + "'");
    }
  }
  return labels;
}

int CmdAttack(const AttackFlags& f, std::ostream& out) {
  RunConfig rc = LoadRunConfig(f.common);
  if (!f.attacks.empty()) {
    rc.attacks.clear();
    std::stringstream ss(f.attacks);
    std::string name;
    while (std::getline(ss, name, ',')) {
      if (name == "all") {
        rc.attacks = {AttackKind::kEmbeddingInference, AttackKind::kMaskTokenInference,
                      AttackKind::kPiiInference};
        break;
      }
      rc.attacks.push_back(ParseAttackKind(name));
    }
  }
  const std::string results_path =
      f.results.empty() ? (fs::path(rc.output_dir) / "results.jsonl").string() : f.results;
  const ResultRecords records = ReadResultRecords(results_path);
  if (records.results.empty()) {
    throw Error(ErrorCode::kEmptyResults, "no successful results in " + results_path);
  }

  std::vector<AttackReport> reports;
  std::unique_ptr<NerProvider> ner;
  std::unique_ptr<MlmProvider> mlm;
  std::unique_ptr<MlmProvider> attacker;
  for (AttackKind kind : rc.attacks) {
    switch (kind) {
      case AttackKind::kEmbeddingInference:
        if (!mlm) mlm = LoadMlm(rc.mlm);
        reports.push_back(EmbeddingInferenceAttack(records.results, *mlm, rc.k_values));
        break;
      case AttackKind::kMaskTokenInference:
        if (!attacker) attacker = LoadMlm(rc.attacker_mlm ? *rc.attacker_mlm : rc.mlm);
        reports.push_back(MaskTokenInferenceAttack(records.results, *attacker, rc.k_values));
        break;
      case AttackKind::kPiiInference:
        if (rc.pii_attribute == "explicit") {
          if (!ner) ner = LoadNer(rc.ner);
          reports.push_back(ExplicitPiiAttack(records.results, *ner));
        } else {
          const auto labels = AttributeLabels(rc, f.input, records, rc.pii_attribute);
          HttpChatClient client(rc.chat);
          ChatAttributeJudge judge(client);
          reports.push_back(ImplicitPiiAttack(records.results, labels, rc.pii_attribute, judge));
        }
        break;
    }
  }

  std::ofstream file = OpenOutput(rc.output_dir, "attacks.jsonl");
  for (const AttackReport& r : reports) file << AttackReportToJson(r).dump() << '\n';

  out << std::left << std::setw(8) << "attack";
  for (int k : rc.k_values) out << std::setw(10) << ("top" + std::to_string(k));
  out << std::setw(10) << "success" << "evaluated\n";
  for (const AttackReport& r : reports) {
    out << std::setw(8) << AttackKindName(r.attack);
    for (int k : rc.k_values) {
      auto it = r.topk_accuracy.find(k);
      out << std::setw(10) << (it == r.topk_accuracy.end() ? "-" : Fixed(it->second));
    }
    out << std::setw(10)
        << (r.attack == AttackKind::kPiiInference ? Fixed(r.success_rate) : std::string("-"))
        << r.evaluated << (r.undefined ? " (undefined)" : "") << '\n';
  }
  return kExitOk;
}

// --- evaluate --------------------------------------------------------------

struct EvaluateFlags {
  CommonFlags common;
  std::string results;
  std::string input;
  std::string task;
  bool original = false;
  bool judge = false;
};

int CmdEvaluate(const EvaluateFlags& f, std::ostream& out) {
  RunConfig rc = LoadRunConfig(f.common);
  if (!f.task.empty()) rc.task = ParseTaskKind(f.task);
  const auto examples = LoadData(rc, f.input);

  std::vector<std::string> prompts;
  std::vector<std::string> originals;
  std::vector<std::string> labels;
  if (f.original) {
    for (const auto& ex : examples) {
      prompts.push_back(ex.text);
      originals.push_back(ex.text);
      labels.push_back(ex.label);
    }
  } else {
    const std::string results_path =
        f.results.empty() ? (fs::path(rc.output_dir) / "results.jsonl").string() : f.results;
    const ResultRecords records = ReadResultRecords(results_path);
    for (std::size_t i = 0; i < records.results.size(); ++i) {
      const std::size_t idx = records.indices[i];
      if (idx >= examples.size()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "result index " + std::to_string(idx) + " exceeds the corpus size");
      }
      prompts.push_back(records.results[i].desensitized_text);
      originals.push_back(examples[idx].text);
      labels.push_back(examples[idx].label);
    }
  }

  HttpChatClient client(rc.chat);
  const UtilityReport report =
      RunTask(prompts, labels, TaskTemplate::Default(rc.task), client, rc.fan_out);
  std::ofstream file = OpenOutput(rc.output_dir, "utility.jsonl");
  file << UtilityReportToJson(report, rc.task).dump() << '\n';
  out << TaskKindName(rc.task) << " accuracy " << Fixed(report.accuracy) << " (" << report.correct
      << "/" << (report.total - report.failed) << ", " << report.failed << " failed)\n";

  if (f.judge) {
    std::vector<std::string> answers;
    std::vector<std::string> judged_originals;
    for (const Transcript& t : report.transcripts) {
      if (!t.error.empty()) continue;
      answers.push_back(t.response);
      judged_originals.push_back(originals[t.index]);
    }
    const QualityReport quality = JudgeQualityBatch(
        judged_originals, answers, TaskTemplate::Default(TaskKind::kQualityJudge), client);
    std::ofstream qfile = OpenOutput(rc.output_dir, "quality.jsonl");
    qfile << QualityReportToJson(quality).dump() << '\n';
    out << "answer quality " << Fixed(quality.mean_overall, 2) << " (" << quality.unparseable
        << " unparseable)\n";
  }
  return kExitOk;
}

// --- generate-portraits / generate-news ------------------------------------

struct GenerateFlags {
  CommonFlags common;
  std::size_t count = 0;
  std::string categories;
  bool offline = false;
};

int CmdGeneratePortraits(const GenerateFlags& f, std::ostream& out, std::ostream& err) {
  RunConfig rc = LoadRunConfig(f.common);
  const PortraitCategories cats = f.categories.empty() ? PortraitCategories::Default()
                                                       : PortraitCategories::FromFile(f.categories);
  for (const std::string& w : cats.Warnings()) err << "warning: " << w << '\n';
  std::unique_ptr<HttpChatClient> client;
  if (!f.offline) client = std::make_unique<HttpChatClient>(rc.chat);

  std::vector<LabeledExample> examples;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < f.count; ++i) {
    const PortraitProfile profile = SampleProfile(rc.seed + i, cats);
    if (f.offline) {
      LabeledExample ex;
      ex.text = ComposePortraitNarrative(profile, rc.seed + i);
      ex.label = profile.disorder;
      ex.attributes = ProfileAttributes(profile);
      examples.push_back(std::move(ex));
      continue;
    }
    try {
      examples.push_back(GeneratePortrait(profile, *client));
    } catch (const Error& e) {
      ++failed;
      err << "portrait " << i << " failed: " << e.what() << '\n';
    }
  }
  fs::create_directories(rc.output_dir);
  const std::string path = (fs::path(rc.output_dir) / "portraits.jsonl").string();
  SaveCorpus(path, CorpusFormat::kJsonl, examples);
  out << "generated " << examples.size() << " portraits (" << failed << " failed) -> " << path
      << '\n';
  return kExitOk;
}

int CmdGenerateNews(const GenerateFlags& f, std::ostream& out) {
  RunConfig rc = LoadRunConfig(f.common);
  const auto examples = SyntheticNews(rc.seed, f.count);
  fs::create_directories(rc.output_dir);
  const std::string path = (fs::path(rc.output_dir) / "news.jsonl").string();
  SaveCorpus(path, CorpusFormat::kJsonl, examples);
  out << "generated " << examples.size() << " news texts -> " << path << '\n';
  return kExitOk;
}

// --- benchmark -------------------------------------------------------------

struct BenchmarkFlags {
  CommonFlags common;
  std::vector<std::size_t> sizes;
  int repeats = 3;
};

int CmdBenchmark(const BenchmarkFlags& f, std::ostream& out) {
  if (f.sizes.empty()) throw Error(ErrorCode::kInvalidArgument, "--sizes must not be empty");
  RunConfig rc = LoadRunConfig(f.common);
  LoadedProviders lp = LoadProviders(rc);
  if (!lp.tfidf) {
    std::vector<TokenizedPrompt> docs;
    for (std::size_t s : f.sizes) docs.push_back(Tokenize(SyntheticPrompt(s, rc.seed)));
    lp.tfidf = FitTfidf(docs);
  }
  const BenchmarkReport report = RunBenchmark(f.sizes, rc.obfuscation, lp.view(), f.repeats);
  std::ofstream file = OpenOutput(rc.output_dir, "benchmark.jsonl");
  out << "tokens  seconds     replacements\n";
  for (const BenchmarkRow& row : report.rows) {
    nlohmann::ordered_json j;
    j["tokens"] = row.tokens;
    j["seconds"] = row.seconds;
    j["replacements"] = row.replacements;
    file << j.dump() << '\n';
    out << std::left << std::setw(8) << row.tokens << std::setw(12) << Fixed(row.seconds, 6)
        << row.replacements << '\n';
  }
  if (report.rows.size() >= 2) {
    nlohmann::ordered_json fit;
    fit["slope_seconds_per_token"] = report.fit.slope;
    fit["intercept_seconds"] = report.fit.intercept;
    fit["r_squared"] = report.fit.r_squared;
    file << nlohmann::ordered_json{{"fit", fit}}.dump() << '\n';
    out << "linear fit: " << Fixed(report.fit.slope * 100.0, 6) << " s per 100 tokens, R^2 "
        << Fixed(report.fit.r_squared) << '\n';
  }
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Prompt desensitization toolkit", "promptveil"};
  app.require_subcommand(1);

  TrainFlags train;
  auto* train_cmd = app.add_subcommand("train", "Train a small model on a corpus");
  train_cmd->add_option("--kind", train.kind, "mlm | classifier | causal-lm")
      ->required()
      ->check(CLI::IsMember({"mlm", "classifier", "causal-lm"}));
  train_cmd->add_option("--input", train.input, "Training corpus (.jsonl/.tsv/.csv)");
  train_cmd->add_option("--synthetic-news", train.synthetic, "Train on N generated news texts");
  train_cmd->add_option("--model-id", train.model_id, "Model identifier");
  train_cmd->add_option("--seed", train.seed, "Random seed");
  train_cmd->add_option("--epochs", train.epochs, "Training epochs");
  train_cmd->add_option("--dim", train.dim, "Embedding dimension");
  train_cmd->add_option("--out", train.out_dir, "Directory for the model file");

  DesensitizeFlags des;
  auto* des_cmd = app.add_subcommand("desensitize", "Desensitize a corpus or a single prompt");
  AddCommonFlags(des_cmd, des.common);
  des_cmd->add_option("--input", des.input, "Input corpus (overrides data.path)");
  des_cmd->add_option("--prompt", des.prompt, "Desensitize a single prompt");
  des_cmd->add_flag("--strict", des.strict, "Exit nonzero when any item fails");
  des_cmd->add_flag("--timing", des.timing, "Include per-stage timing in the records");

  AttackFlags atk;
  auto* atk_cmd = app.add_subcommand("attack", "Run privacy attacks on desensitized results");
  AddCommonFlags(atk_cmd, atk.common);
  atk_cmd->add_option("--results", atk.results, "Results file (default OUT/results.jsonl)");
  atk_cmd->add_option("--attacks", atk.attacks, "Comma list of ei,mti,pii or all");
  atk_cmd->add_option("--input", atk.input, "Labelled corpus for implicit PII inference");

  EvaluateFlags ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Measure task utility against a chat endpoint");
  AddCommonFlags(ev_cmd, ev.common);
  ev_cmd->add_option("--results", ev.results, "Results file (default OUT/results.jsonl)");
  ev_cmd->add_option("--input", ev.input, "Labelled corpus (overrides data.path)");
  ev_cmd->add_option("--task", ev.task, "sentiment | topic | qa");
  ev_cmd->add_flag("--original", ev.original, "Evaluate the original texts instead");
  ev_cmd->add_flag("--judge", ev.judge, "Also score answers with the quality judge");

  GenerateFlags gen;
  auto* gen_cmd = app.add_subcommand("generate-portraits", "Generate portrait-style records");
  AddCommonFlags(gen_cmd, gen.common);
  gen_cmd->add_option("--count", gen.count, "Number of portraits")->required();
  gen_cmd->add_option("--categories", gen.categories, "Category lists (JSON)");
  gen_cmd->add_flag("--offline", gen.offline, "Compose narratives locally, no endpoint");

  GenerateFlags news;
  auto* news_cmd = app.add_subcommand("generate-news", "Generate news-style topic records");
  AddCommonFlags(news_cmd, news.common);
  news_cmd->add_option("--count", news.count, "Number of texts")->required();

  BenchmarkFlags bench;
  auto* bench_cmd = app.add_subcommand("benchmark", "Time the pipeline against prompt length");
  AddCommonFlags(bench_cmd, bench.common);
  bench_cmd->add_option("--sizes", bench.sizes, "Prompt sizes in tokens")
      ->required()
      ->delimiter(',');
  bench_cmd->add_option("--repeats", bench.repeats, "Timed runs per size");

  std::vector<std::string> argv_storage{"promptveil"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return CmdTrain(train, out);
    if (des_cmd->parsed()) {
      if (!des.prompt.empty() && !des.input.empty()) {
        err << "error: --prompt and --input are mutually exclusive\n";
        return kExitUsage;
      }
      return CmdDesensitize(des, out, err);
    }
    if (atk_cmd->parsed()) return CmdAttack(atk, out);
    if (ev_cmd->parsed()) return CmdEvaluate(ev, out);
    if (gen_cmd->parsed()) return CmdGeneratePortraits(gen, out, err);
    if (news_cmd->parsed()) return CmdGenerateNews(news, out);
    if (bench_cmd->parsed()) {
      if (bench.sizes.empty()) {
        err << "error: --sizes needs at least one value\n";
        return kExitUsage;
      }
      return CmdBenchmark(bench, out);
    }
  } catch (const Error& e) {
    err << "error [" << ErrorCodeName(e.code()) << "]: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace promptveil
