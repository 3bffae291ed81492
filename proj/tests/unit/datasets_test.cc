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

#include "promptveil/datasets.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "test_support.h"

namespace promptveil {
namespace {

using testing::CodeOf;

std::string WriteFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream(path, std::ios::binary) << content;
  return path.string();
}

class EchoClient : public ChatClient {
 public:
  std::string Complete(const std::vector<ChatMessage>& messages) override {
    ++calls;
    return messages.back().content;
  }
  int calls = 0;
};

TEST_SUITE("datasets") {
  TEST_CASE("loading corpora") {
    const auto dir = testing::TempDir("datasets-load");

    SUBCASE("empty file") {
      CHECK(LoadCorpus(WriteFile(dir / "e.tsv", ""), CorpusFormat::kTsv).empty());
      CHECK(LoadCorpus(WriteFile(dir / "e.jsonl", ""), CorpusFormat::kJsonl).empty());
      CHECK(LoadCorpus(WriteFile(dir / "e.csv", ""), CorpusFormat::kCsv).empty());
    }
    SUBCASE("three-row TSV") {
      const auto rows =
          LoadCorpus(WriteFile(dir / "t.tsv",
                               "text\tlabel\nI loved it\tPositive\nmeh\\tbad\tNegative\r\n"
                               "\nfine\tPositive\n"),
                     CorpusFormat::kTsv);
      REQUIRE(rows.size() == 3);
      CHECK(rows[0] == LabeledExample{"I loved it", "Positive", {}, false});
      CHECK(rows[1].text == "meh\tbad");
      CHECK(rows[1].label == "Negative");
      CHECK(rows[2].text == "fine");
    }
    SUBCASE("a missing label names the line") {
      const std::string path = WriteFile(dir / "m.jsonl",
                                         "{\"text\":\"a\",\"label\":\"x\"}\n"
                                         "{\"text\":\"b\"}\n");
      try {
        LoadCorpus(path, CorpusFormat::kJsonl);
        FAIL("expected an error");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kParseError);
        CHECK(std::string(e.what()).find(path + ":2") != std::string::npos);
      }
      CorpusSchema unlabelled;
      unlabelled.label_field = "";
      CHECK(LoadCorpus(path, CorpusFormat::kJsonl, unlabelled).size() == 2);
    }
    SUBCASE("CSV quoting") {
      const auto rows =
          LoadCorpus(WriteFile(dir / "q.csv",
                               "label,text\nWorld,\"Talks, again\"\nSports,\"He said \"\"go\"\"\"\n"
                               "Business,\"two\nlines\"\n"),
                     CorpusFormat::kCsv);
      REQUIRE(rows.size() == 3);
      CHECK(rows[0].text == "Talks, again");
      CHECK(rows[1].text == "He said \"go\"");
      CHECK(rows[2].text == "two\nlines");
      CHECK(rows[2].label == "Business");
      CHECK(CodeOf([&] {
              LoadCorpus(WriteFile(dir / "u.csv", "text,label\n\"open,x\n"), CorpusFormat::kCsv);
            }) == ErrorCode::kParseError);
      CHECK(CodeOf([&] {
              LoadCorpus(WriteFile(dir / "w.csv", "text,label\na,b,c\n"), CorpusFormat::kCsv);
            }) == ErrorCode::kParseError);
    }
    SUBCASE("JSONL attributes and review flags") {
      const auto rows = LoadCorpus(
          WriteFile(dir / "a.jsonl",
                    R"({"text":"t","label":"insomnia","attributes":{"age":34,"location":"Oslo"},)"
                    R"("expert_reviewed":true})"
                    "\n"),
          CorpusFormat::kJsonl);
      REQUIRE(rows.size() == 1);
      CHECK(rows[0].attributes.at("age") == "34");
      CHECK(rows[0].attributes.at("location") == "Oslo");
      CHECK(rows[0].expert_reviewed);
    }
    SUBCASE("allowed labels") {
      CorpusSchema s;
      s.allowed_labels = {"Positive", "Negative"};
      CHECK(CodeOf([&] {
              LoadCorpus(WriteFile(dir / "l.tsv", "text\tlabel\na\tNeutral\n"), CorpusFormat::kTsv,
                         s);
            }) == ErrorCode::kParseError);
    }
    SUBCASE("missing file and format names") {
      CHECK(CodeOf([&] { LoadCorpus((dir / "nope.tsv").string(), CorpusFormat::kTsv); }) ==
            ErrorCode::kIoError);
      CHECK(CorpusFormatFromPath("x/y.CSV") == CorpusFormat::kCsv);
      CHECK(CorpusFormatFromPath("a.json") == CorpusFormat::kJsonl);
      CHECK(ParseCorpusFormat("tsv") == CorpusFormat::kTsv);
      CHECK(CodeOf([] { CorpusFormatFromPath("a.txt"); }).has_value());
    }
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("save then load round-trips every format") {
    const auto dir = testing::TempDir("datasets-roundtrip");
    std::mt19937_64 rng(4);
    const std::string alphabet = "abc XYZ,\"\t\n\\'{}";
    CorpusSchema schema;
    schema.attribute_fields = {"age", "city"};
    for (int trial = 0; trial < 60; ++trial) {
      std::vector<LabeledExample> examples;
      for (int i = static_cast<int>(rng() % 6); i >= 0; --i) {
        LabeledExample ex;
        for (int c = 1 + static_cast<int>(rng() % 20); c > 0; --c) {
          ex.text += alphabet[rng() % alphabet.size()];
        }
        ex.label = testing::RandomWord(rng);
        ex.attributes = {{"age", std::to_string(18 + rng() % 40)}, {"city", "New \"York\", NY"}};
        examples.push_back(ex);
      }
      for (auto format : {CorpusFormat::kTsv, CorpusFormat::kCsv, CorpusFormat::kJsonl}) {
        const std::string path = (dir / "corpus").string();
        SaveCorpus(path, format, examples, schema);
        CHECK(LoadCorpus(path, format, schema) == examples);
      }
    }
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("profile sampling") {
    CHECK(SampleProfile(42) == SampleProfile(42));
    const PortraitCategories cats = PortraitCategories::Default();
    CHECK(cats.locations.size() == kPortraitLocations);
    CHECK(cats.occupations.size() == kPortraitOccupations);
    CHECK(cats.disorders.size() == kPortraitDisorders);
    CHECK(cats.Warnings().empty());

    int male = 0;
    std::set<std::string> locations;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
      const PortraitProfile p = SampleProfile(seed, cats);
      CHECK(p.age >= 18);
      CHECK(p.age <= 65);
      male += p.gender == "male";
      CHECK((p.gender == "male" || p.gender == "female"));
      locations.insert(p.location);
    }
    CHECK(male >= 4800);
    CHECK(male <= 5200);
    CHECK(locations.size() == kPortraitLocations);

    PortraitCategories small = cats;
    small.disorders.resize(3);
    CHECK(small.Warnings().size() == 1);
    small.disorders.clear();
    CHECK(CodeOf([&] { SampleProfile(1, small); }) == ErrorCode::kConfigError);
  }

  TEST_CASE("portrait generation") {
    EchoClient client;
    std::set<std::string> texts;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const PortraitProfile p = SampleProfile(seed);
      const LabeledExample ex = GeneratePortrait(p, client);
      for (const auto& [key, value] : ProfileValues(p)) {
        CHECK(ex.text.find(value) != std::string::npos);
      }
      CHECK(ex.label == p.disorder);
      CHECK(ex.attributes == ProfileAttributes(p));
      CHECK(ex.attributes.size() == 5);
      texts.insert(ex.text);
    }
    CHECK(texts.size() == 5);
    CHECK(client.calls == 5);

    TaskTemplate broken = TaskTemplate::Default(TaskKind::kPortraitGeneration);
    broken.user_template += " {HOBBY}";
    CHECK(CodeOf([&] { GeneratePortrait(SampleProfile(1), client, broken); }) ==
          ErrorCode::kUnboundPlaceholder);
    CHECK(client.calls == 5);
  }

  TEST_CASE("offline narratives mention the location and occupation") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const PortraitProfile p = SampleProfile(seed);
      const std::string text = ComposePortraitNarrative(p, seed);
      CHECK(text.find(p.location) != std::string::npos);
      CHECK(text.find(p.occupation) != std::string::npos);
      CHECK(text == ComposePortraitNarrative(p, seed));
    }
  }

  TEST_CASE("synthetic news") {
    const auto a = SyntheticNews(5, 400);
    CHECK(a == SyntheticNews(5, 400));
    REQUIRE(a.size() == 400);
    std::map<std::string, int> per_label;
    for (const auto& e : a) {
      ++per_label[e.label];
      CHECK(e.text.find('{') == std::string::npos);
      CHECK(e.text.find(" .") == std::string::npos);
    }
    CHECK(per_label.size() == 4);
    for (const auto& [label, n] : per_label) CHECK(n > 50);
    CHECK(SyntheticNews(6, 400) != a);
  }

}  // TEST_SUITE

}  // namespace
}  // namespace promptveil
