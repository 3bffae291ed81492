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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "test_support.h"

namespace promptveil {
namespace {

using nlohmann::json;
using testing::CodeOf;

ObfuscationResult Sample() {
  ObfuscationResult r;
  r.original_text = "Ann lives in Rome.";
  r.desensitized_text = "dee lives in oslo.";
  r.plan.entries = {{0, MaskReason::kExplicit, "Ann", "PERSON"},
                    {3, MaskReason::kExplicit, "Rome", "LOCATION"}};
  r.replacements = {{0, "Ann", "dee", 1.0, 4, ReplacementFlag::kNone, {0, 3}},
                    {3, "Rome", "oslo", 0.125, 2, ReplacementFlag::kMaxDistanceFallback, {13, 17}}};
  r.entities = {{0, 1, "PERSON"}, {3, 4, "LOCATION"}};
  r.timing = {{"detect", 0.5}};
  return r;
}

void CheckSame(const ObfuscationResult& a, const ObfuscationResult& b) {
  CHECK(a.original_text == b.original_text);
  CHECK(a.desensitized_text == b.desensitized_text);
  REQUIRE(a.replacements.size() == b.replacements.size());
  for (std::size_t i = 0; i < a.replacements.size(); ++i) {
    CHECK(a.replacements[i].position == b.replacements[i].position);
    CHECK(a.replacements[i].original == b.replacements[i].original);
    CHECK(a.replacements[i].chosen == b.replacements[i].chosen);
    CHECK(a.replacements[i].gradient_norm == b.replacements[i].gradient_norm);
    CHECK(a.replacements[i].candidates_considered == b.replacements[i].candidates_considered);
    CHECK(a.replacements[i].flag == b.replacements[i].flag);
    CHECK(a.replacements[i].output_span == b.replacements[i].output_span);
  }
  REQUIRE(a.plan.entries.size() == b.plan.entries.size());
  for (std::size_t i = 0; i < a.plan.entries.size(); ++i) {
    CHECK(a.plan.entries[i].index == b.plan.entries[i].index);
    CHECK(a.plan.entries[i].reason == b.plan.entries[i].reason);
    CHECK(a.plan.entries[i].original == b.plan.entries[i].original);
    CHECK(a.plan.entries[i].label == b.plan.entries[i].label);
  }
  CHECK(a.entities == b.entities);
}

TEST_SUITE("records") {
  TEST_CASE("result JSON round-trips") {
    const ObfuscationResult r = Sample();
    const auto j = ResultToJson(r);
    CHECK_FALSE(j.contains("timing"));
    CHECK(j["replacements"][1]["flag"] == "max_distance_fallback");
    CHECK(j["plan"][0]["reason"] == "explicit");
    CHECK(j["replacements"][1]["output_span"] == json::array({13, 17}));
    CheckSame(ResultFromJson(json::parse(j.dump())), r);
    const auto timed = ResultToJson(r, true);
    CHECK(timed["timing"]["detect"] == 0.5);
    CHECK(CodeOf([] { ResultFromJson(json{{"original_text", "x"}}); }) == ErrorCode::kParseError);
  }

  TEST_CASE("result records are line per item with status") {
    std::vector<BatchItem> items(2);
    items[0].result = Sample();
    items[1].error = "detect: NER provider failed";
    items[1].stage = "detect";
    std::ostringstream out;
    WriteResultRecords(out, items);

    std::istringstream lines(out.str());
    std::string line;
    std::vector<json> records;
    while (std::getline(lines, line)) records.push_back(json::parse(line));
    REQUIRE(records.size() == 2);
    CHECK(records[0]["index"] == 0);
    CHECK(records[0]["status"] == "ok");
    CHECK(records[1]["status"] == "error");
    CHECK(records[1]["stage"] == "detect");

    const auto dir = testing::TempDir("records");
    const std::string path = (dir / "results.jsonl").string();
    std::ofstream(path) << out.str();
    const ResultRecords back = ReadResultRecords(path);
    CHECK(back.failed == 1);
    CHECK(back.indices == std::vector<std::size_t>{0});
    REQUIRE(back.results.size() == 1);
    CheckSame(back.results[0], Sample());

    std::ofstream(path) << out.str() << "{broken\n";
    try {
      ReadResultRecords(path);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParseError);
      CHECK(std::string(e.what()).find(path + ":3") != std::string::npos);
    }
    CHECK(CodeOf([&] { ReadResultRecords((dir / "none.jsonl").string()); }) == ErrorCode::kIoError);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("report records") {
    AttackReport a;
    a.attack = AttackKind::kMaskTokenInference;
    a.topk_accuracy = {{1, 0.25}, {10, 0.5}};
    a.evaluated = 4;
    a.per_example = {{0, 2, 3u, false, ""}, {1, 0, std::nullopt, false, "oov"}};
    const auto aj = AttackReportToJson(a);
    CHECK(aj["attack"] == "mti");
    CHECK(aj["topk_accuracy"]["10"] == 0.5);
    CHECK(aj["per_example"][0]["rank"] == 3);
    CHECK(aj["per_example"][1]["rank"].is_null());

    UtilityReport u;
    u.accuracy = 0.5;
    u.total = 2;
    u.correct = 1;
    u.transcripts = {{0, {{"user", "q"}}, "Positive", "", true}};
    const auto uj = UtilityReportToJson(u, TaskKind::kTopic);
    CHECK(uj["task"] == "topic");
    CHECK(uj["transcripts"][0]["request"][0]["content"] == "q");

    QualityReport q;
    q.judgments = {QualityJudgment{4, 4, 4, 4, 4}, std::nullopt};
    q.mean_overall = 4;
    q.unparseable = 1;
    const auto qj = QualityReportToJson(q);
    CHECK(qj["judgments"][0]["overall"] == 4);
    CHECK(qj["judgments"][1].is_null());
  }

}  // TEST_SUITE

}  // namespace
}  // namespace promptveil
