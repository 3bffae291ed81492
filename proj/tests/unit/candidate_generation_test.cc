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

#include "promptveil/candidate_generation.h"

#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "test_support.h"

namespace promptveil {
namespace {

using testing::CodeOf;
using testing::TableMlm;

std::vector<std::string> Tokens(const CandidateSet& set) {
  std::vector<std::string> out;
  for (const auto& c : set.candidates) out.push_back(c.token);
  return out;
}

MaskPlan PlanAt(const TokenizedPrompt& p, std::vector<std::size_t> positions) {
  MaskPlan plan;
  for (std::size_t i : positions)
    plan.entries.push_back({i, MaskReason::kImplicit, p.tokens[i], ""});
  return plan;
}

TEST_SUITE("candidate_generation") {
  TEST_CASE("provider ranking is returned verbatim up to lambda") {
    TableMlm mlm({}, {"Paris", "Rome", "Berlin", "Madrid", "Lisbon"});
    const TokenizedPrompt p = Tokenize("I live in Toronto .");
    const CandidateSet set = PredictCandidates(p, {}, 3, PlanAt(p, {3}), mlm, 3);
    CHECK(set.original == "Toronto");
    CHECK(set.position == 3);
    CHECK(Tokens(set) == std::vector<std::string>{"Paris", "Rome", "Berlin"});
    CHECK(set.candidates[0].mlm_score > set.candidates[1].mlm_score);
    CHECK(mlm.last_context() == "I live in [MASK] .");
  }

  TEST_CASE("the original, exclusions, fragments and punctuation are dropped and back-filled") {
    TableMlm mlm({},
                 {"toronto", "##ville", ",", "Paris", "paris", "Rome", "Ann", "Berlin", "Oslo"});
    const TokenizedPrompt p = Tokenize("I live in Toronto");
    const std::vector<std::string> excluded{"ann"};
    const CandidateSet set = PredictCandidates(p, {}, 3, PlanAt(p, {3}), mlm, 3, excluded);
    CHECK(Tokens(set) == std::vector<std::string>{"Paris", "Rome", "Berlin"});
  }

  TEST_CASE("lambda = 1 returns the single best prediction") {
    TableMlm mlm({}, {"Toronto", "Paris", "Rome"});
    const TokenizedPrompt p = Tokenize("in Toronto");
    CHECK(Tokens(PredictCandidates(p, {}, 1, PlanAt(p, {1}), mlm, 1)) ==
          std::vector<std::string>{"Paris"});
  }

  TEST_CASE("an exhausted vocabulary returns fewer than lambda") {
    TableMlm mlm({}, {"Paris", "Toronto"});
    const TokenizedPrompt p = Tokenize("in Toronto");
    CHECK(Tokens(PredictCandidates(p, {}, 1, PlanAt(p, {1}), mlm, 10)) ==
          std::vector<std::string>{"Paris"});
  }

  TEST_CASE("already-applied replacements appear in the context") {
    TableMlm mlm({}, {"x"});
    const TokenizedPrompt p = Tokenize("Ann lives in Toronto");
    Replacement r;
    r.position = 0;
    r.chosen = "Someone";
    const std::vector<Replacement> applied{r};
    PredictCandidates(p, applied, 3, PlanAt(p, {0, 3}), mlm, 1);
    CHECK(mlm.last_context() == "Someone lives in [MASK]");
  }

  TEST_CASE("argument errors and provider failure") {
    TableMlm mlm({}, {"x"});
    const TokenizedPrompt p = Tokenize("in Toronto");
    CHECK(CodeOf([&] { PredictCandidates(p, {}, 0, PlanAt(p, {1}), mlm, 3); }) ==
          ErrorCode::kPositionNotMasked);
    CHECK(CodeOf([&] { PredictCandidates(p, {}, 9, PlanAt(p, {1}), mlm, 3); }) ==
          ErrorCode::kPositionOutOfRange);
    CHECK(CodeOf([&] { PredictCandidates(p, {}, 1, PlanAt(p, {1}), mlm, 0); }) ==
          ErrorCode::kInvalidArgument);
    mlm.set_fail(true);
    CHECK(CodeOf([&] { PredictCandidates(p, {}, 1, PlanAt(p, {1}), mlm, 3); }) ==
          ErrorCode::kProviderFailure);
  }

  TEST_CASE("embedding distance") {
    TableMlm mlm({{"a", {1, 0}}, {"b", {0, 1}}, {"c", {3, 4}}}, {});
    CHECK(EmbeddingDistance(mlm, "a", "a") == 0.0);
    CHECK(EmbeddingDistance(mlm, "a", "b") == doctest::Approx(std::sqrt(2.0)));
    CHECK(EmbeddingDistance(mlm, "b", "a") == EmbeddingDistance(mlm, "a", "b"));
    CHECK(EmbeddingDistance(mlm, "c", "b") == doctest::Approx(std::sqrt(9.0 + 9.0)));
    try {
      EmbeddingDistance(mlm, "a", "zzz");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kOutOfVocabulary);
    }
  }

  TableMlm LineMlm() {
    return TableMlm({{"orig", {0, 0}},
                     {"near", {0.5, 0}},
                     {"mid", {1.2, 0}},
                     {"far", {2.0, 0}},
                     {"close", {0.3, 0}},
                     {"something", {0.1, 0}},
                     {"someone", {0.2, 0}}},
                    {});
  }

  CandidateSet SetOf(std::vector<std::string> tokens) {
    CandidateSet s;
    s.position = 4;
    s.original = "orig";
    double score = 0;
    for (auto& t : tokens) s.candidates.push_back({t, score--, 0.0});
    return s;
  }

  TEST_CASE("filter keeps candidates strictly beyond theta in rank order") {
    const TableMlm mlm = LineMlm();
    const CandidateSet out = FilterCandidates(SetOf({"near", "far", "mid"}), mlm, 0.95,
                                              FallbackPolicy::kMaxDistanceCandidate);
    CHECK(Tokens(out) == std::vector<std::string>{"far", "mid"});
    CHECK(out.candidates[0].distance == doctest::Approx(2.0));
    CHECK(out.candidates[1].distance == doctest::Approx(1.2));
    CHECK(out.flag == CandidateSetFlag::kNone);
    CHECK(out.position == 4);
    // Exactly at the threshold is not "beyond".
    CHECK(Tokens(FilterCandidates(SetOf({"mid", "far"}), mlm, 1.2,
                                  FallbackPolicy::kMaxDistanceCandidate)) ==
          std::vector<std::string>{"far"});
  }

  TEST_CASE("max-distance fallback picks the farthest candidate") {
    const TableMlm mlm = LineMlm();
    const CandidateSet out = FilterCandidates(SetOf({"close", "near"}), mlm, 0.95,
                                              FallbackPolicy::kMaxDistanceCandidate);
    CHECK(Tokens(out) == std::vector<std::string>{"near"});
    CHECK(out.flag == CandidateSetFlag::kMaxDistanceFallback);
  }

  TEST_CASE("placeholder fallback uses the entity label") {
    const TableMlm mlm = LineMlm();
    const CandidateSet person = FilterCandidates(SetOf({"close", "near"}), mlm, 0.95,
                                                 FallbackPolicy::kGenericPlaceholder, "PERSON");
    CHECK(Tokens(person) == std::vector<std::string>{"someone"});
    CHECK(person.flag == CandidateSetFlag::kPlaceholderFallback);
    // An empty candidate list always falls back to the placeholder.
    const CandidateSet empty =
        FilterCandidates(SetOf({}), mlm, 0.95, FallbackPolicy::kMaxDistanceCandidate);
    CHECK(Tokens(empty) == std::vector<std::string>{"something"});
    CHECK(empty.flag == CandidateSetFlag::kPlaceholderFallback);
  }

  TEST_CASE("placeholders") {
    CHECK(PlaceholderFor("PERSON", "Ann") == "someone");
    CHECK(PlaceholderFor("LOCATION", "Rome") == "somewhere");
    CHECK(PlaceholderFor("", "rare") == "something");
    CHECK(PlaceholderFor("DATE", "Something") == "anything");
    CHECK(PlaceholderFor("PERSON", "someone") == "something");
  }

  TEST_CASE("out-of-vocabulary words are kept at infinite distance") {
    const TableMlm mlm = LineMlm();
    const CandidateSet out = FilterCandidates(SetOf({"near", "qwerty"}), mlm, 0.95,
                                              FallbackPolicy::kMaxDistanceCandidate);
    REQUIRE(Tokens(out) == std::vector<std::string>{"qwerty"});
    CHECK(std::isinf(out.candidates[0].distance));
    CandidateSet unknown_original = SetOf({"near", "far"});
    unknown_original.original = "qwerty";
    CHECK(Tokens(FilterCandidates(unknown_original, mlm, 0.95,
                                  FallbackPolicy::kMaxDistanceCandidate)) ==
          std::vector<std::string>{"near", "far"});
  }

  TEST_CASE("filter survivors are exactly the candidates beyond theta") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> coord(0.0, 1.0);
    std::uniform_real_distribution<double> theta_dist(0.0, 3.0);
    for (int trial = 0; trial < 300; ++trial) {
      std::map<std::string, std::vector<double>> emb;
      emb["orig"] = {coord(rng), coord(rng), coord(rng)};
      std::vector<std::string> names;
      const int n = static_cast<int>(rng() % 12);
      for (int i = 0; i < n; ++i) {
        names.push_back("w" + std::to_string(i));
        emb[names.back()] = {coord(rng), coord(rng), coord(rng)};
      }
      const TableMlm mlm(emb, {});
      const double theta = theta_dist(rng);
      const CandidateSet out =
          FilterCandidates(SetOf(names), mlm, theta, FallbackPolicy::kMaxDistanceCandidate);

      auto dist = [&](const std::string& w) {
        double s = 0;
        for (int d = 0; d < 3; ++d) s += std::pow(emb[w][d] - emb["orig"][d], 2);
        return std::sqrt(s);
      };
      std::vector<std::string> expected;
      for (const auto& w : names) {
        if (dist(w) > theta) expected.push_back(w);
      }
      REQUIRE_FALSE(out.candidates.empty());
      if (!expected.empty()) {
        CHECK(Tokens(out) == expected);
        CHECK(out.flag == CandidateSetFlag::kNone);
        for (const auto& c : out.candidates) CHECK(c.distance > theta);
      } else if (!names.empty()) {
        std::string best = names[0];
        for (const auto& w : names) {
          if (dist(w) > dist(best)) best = w;
        }
        CHECK(Tokens(out) == std::vector<std::string>{best});
        CHECK(out.flag == CandidateSetFlag::kMaxDistanceFallback);
      } else {
        CHECK(out.flag == CandidateSetFlag::kPlaceholderFallback);
      }
    }
  }

}  // TEST_SUITE

}  // namespace
}  // namespace promptveil
