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

#include "promptveil/records.h"

#include <fstream>

namespace promptveil {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json SpanJson(const Span& s) { return ordered_json::array({s.begin, s.end}); }

Span SpanFrom(const json& j) { return {j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>()}; }

std::string_view ReasonName(MaskReason r) {
  return r == MaskReason::kExplicit ? "explicit" : "implicit";
}

MaskReason ParseReason(const std::string& s) {
  if (s == "explicit") return MaskReason::kExplicit;
  if (s == "implicit") return MaskReason::kImplicit;
  throw Error(ErrorCode::kParseError, "unknown mask reason '" + s + "'");
}

ordered_json MessagesJson(const std::vector<ChatMessage>& messages) {
  ordered_json out = ordered_json::array();
  for (const ChatMessage& m : messages) {
    out.push_back({{"role", m.role}, {"content", m.content}});
  }
  return out;
}

}  // namespace

ordered_json ResultToJson(const ObfuscationResult& result, bool include_timing) {
  ordered_json j;
  j["original_text"] = result.original_text;
  j["desensitized_text"] = result.desensitized_text;
  ordered_json plan = ordered_json::array();
  for (const MaskedPosition& p : result.plan.entries) {
    plan.push_back({{"index", p.index},
                    {"reason", ReasonName(p.reason)},
                    {"original", p.original},
                    {"label", p.label}});
  }
  j["plan"] = std::move(plan);
  ordered_json reps = ordered_json::array();
  for (const Replacement& r : result.replacements) {
    reps.push_back({{"position", r.position},
                    {"original", r.original},
                    {"chosen", r.chosen},
                    {"gradient_norm", r.gradient_norm},
                    {"candidates_considered", r.candidates_considered},
                    {"flag", ReplacementFlagName(r.flag)},
                    {"output_span", SpanJson(r.output_span)}});
  }
  j["replacements"] = std::move(reps);
  ordered_json entities = ordered_json::array();
  for (const EntitySpan& e : result.entities) {
    entities.push_back(
        {{"start_token", e.start_token}, {"end_token", e.end_token}, {"label", e.label}});
  }
  j["entities"] = std::move(entities);
  if (include_timing) {
    ordered_json timing = ordered_json::object();
    for (const auto& [stage, seconds] : result.timing) timing[stage] = seconds;
    j["timing"] = std::move(timing);
  }
  return j;
}

ObfuscationResult ResultFromJson(const json& j) {
  try {
    ObfuscationResult r;
    r.original_text = j.at("original_text").get<std::string>();
    r.desensitized_text = j.at("desensitized_text").get<std::string>();
    for (const json& p : j.at("plan")) {
      r.plan.entries.push_back(
          {p.at("index").get<std::size_t>(), ParseReason(p.at("reason").get<std::string>()),
           p.at("original").get<std::string>(), p.value("label", std::string())});
    }
    for (const json& x : j.at("replacements")) {
      Replacement rep;
      rep.position = x.at("position").get<std::size_t>();
      rep.original = x.at("original").get<std::string>();
      rep.chosen = x.at("chosen").get<std::string>();
      rep.gradient_norm = x.at("gradient_norm").get<double>();
      rep.candidates_considered = x.at("candidates_considered").get<std::size_t>();
      rep.flag = ParseReplacementFlag(x.at("flag").get<std::string>());
      rep.output_span = SpanFrom(x.at("output_span"));
      r.replacements.push_back(std::move(rep));
    }
    if (j.contains("entities")) {
      for (const json& e : j.at("entities")) {
        r.entities.push_back({e.at("start_token").get<std::size_t>(),
                              e.at("end_token").get<std::size_t>(),
                              e.at("label").get<std::string>()});
      }
    }
    if (j.contains("timing")) {
      for (auto it = j["timing"].begin(); it != j["timing"].end(); ++it) {
        r.timing[it.key()] = it.value().get<double>();
      }
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("malformed result record: ") + e.what());
  }
}

void WriteResultRecords(std::ostream& out, std::span<const BatchItem> items, bool include_timing) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    ordered_json j;
    j["index"] = i;
    if (items[i].ok()) {
      j["status"] = "ok";
      j["result"] = ResultToJson(*items[i].result, include_timing);
    } else {
      j["status"] = "error";
      j["stage"] = items[i].stage;
      j["error"] = items[i].error;
    }
    out << j.dump() << '\n';
  }
}

ResultRecords ReadResultRecords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open results file " + path);
  ResultRecords out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    try {
      const json j = json::parse(line);
      const std::string status = j.at("status").get<std::string>();
      if (status == "error") {
        ++out.failed;
      } else if (status == "ok") {
        out.results.push_back(ResultFromJson(j.at("result")));
        out.indices.push_back(j.at("index").get<std::size_t>());
      } else {
        throw Error(ErrorCode::kParseError, "unknown status '" + status + "'");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError, where + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::kParseError, where + ": " + e.what());
    }
  }
  return out;
}

ordered_json AttackReportToJson(const AttackReport& report) {
  ordered_json j;
  j["attack"] = AttackKindName(report.attack);
  ordered_json topk = ordered_json::object();
  for (const auto& [k, acc] : report.topk_accuracy) topk[std::to_string(k)] = acc;
  j["topk_accuracy"] = std::move(topk);
  j["success_rate"] = report.success_rate;
  j["evaluated"] = report.evaluated;
  j["excluded"] = report.excluded;
  j["undefined"] = report.undefined;
  ordered_json hits = ordered_json::array();
  for (const AttackHit& h : report.per_example) {
    ordered_json x;
    x["example"] = h.example;
    x["position"] = h.position;
    x["rank"] = h.rank ? ordered_json(*h.rank) : ordered_json(nullptr);
    x["success"] = h.success;
    x["note"] = h.note;
    hits.push_back(std::move(x));
  }
  j["per_example"] = std::move(hits);
  return j;
}

ordered_json UtilityReportToJson(const UtilityReport& report, TaskKind task) {
  ordered_json j;
  j["task"] = TaskKindName(task);
  j["accuracy"] = report.accuracy;
  j["correct"] = report.correct;
  j["total"] = report.total;
  j["failed"] = report.failed;
  ordered_json ts = ordered_json::array();
  for (const Transcript& t : report.transcripts) {
    ts.push_back({{"index", t.index},
                  {"request", MessagesJson(t.request)},
                  {"response", t.response},
                  {"error", t.error},
                  {"correct", t.correct}});
  }
  j["transcripts"] = std::move(ts);
  return j;
}

ordered_json QualityReportToJson(const QualityReport& report) {
  ordered_json j;
  j["mean_overall"] = report.mean_overall;
  j["unparseable"] = report.unparseable;
  ordered_json scores = ordered_json::array();
  for (const auto& q : report.judgments) {
    if (!q) {
      scores.push_back(nullptr);
      continue;
    }
    scores.push_back({{"correctness", q->correctness},
                      {"relevance", q->relevance},
                      {"completeness", q->completeness},
                      {"readability", q->readability},
                      {"overall", q->overall}});
  }
  j["judgments"] = std::move(scores);
  return j;
}

}  // namespace promptveil
