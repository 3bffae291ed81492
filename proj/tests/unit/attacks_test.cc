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

#include "promptveil/attacks.h"

#include <random>

#include "doctest.h"
#include "test_support.h"

namespace promptveil {
namespace {

using testing::CodeOf;
using testing::TableMlm;
using testing::WordNer;

// Result for `original` with the given (position, replacement) edits applied.
ObfuscationResult MakeResult(const std::string& original,
                             std::vector<std::pair<std::size_t, std::string>> edits) {
  const TokenizedPrompt p = Tokenize(original);
  ObfuscationResult r;
  r.original_text = original;
  for (auto& [pos, chosen] : edits) {
    Replacement rep;
    rep.position = pos;
    rep.original = p.tokens[pos];
    rep.chosen = chosen;
    r.replacements.push_back(rep);
  }
  std::vector<Span> spans;
  r.desensitized_text = Detokenize(p, r.replacements, &spans);
  for (std::size_t i = 0; i < spans.size(); ++i) r.replacements[i].output_span = spans[i];
  return r;
}

const std::vector<int> kKs{1, 5};

class ScriptedJudge : public AttributeJudge {
 public:
  explicit ScriptedJudge(std::vector<std::string> answers) : answers_(std::move(answers)) {}
  std::string InferAttribute(const std::string&, const std::string&) override {
    const std::string a = answers_.at(next_++);
    if (a == "!fail") throw Error(ErrorCode::kJudgeFailure, "judge timed out");
    return a;
  }

 private:
  std::vector<std::string> answers_;
  std::size_t next_ = 0;
};

TEST_SUITE("attacks") {
  TEST_CASE("top-k accuracy") {
    const std::vector<std::optional<std::size_t>> ranks{1, 1,           1, 2, 3, 5, 5, std::nullopt,
                                                        7, std::nullopt};
    const auto acc = TopKAccuracy(ranks, kKs);
    CHECK(acc.at(1) == doctest::Approx(0.3));
    CHECK(acc.at(5) == doctest::Approx(0.7));
    CHECK(TopKAccuracy({}, kKs).at(1) == 0.0);
    CHECK(CodeOf([&] { TopKAccuracy(ranks, std::vector<int>{0}); }) == ErrorCode::kInvalidArgument);
    CHECK(CodeOf([&] { TopKAccuracy(ranks, std::vector<int>{}); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("top-k accuracy is monotone in k") {
    std::mt19937_64 rng(3);
    const std::vector<int> ks{1, 2, 3, 5, 10, 50};
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<std::optional<std::size_t>> ranks;
      for (int i = static_cast<int>(rng() % 30); i > 0; --i) {
        if (rng() % 4 == 0) {
          ranks.push_back(std::nullopt);
        } else {
          ranks.push_back(1 + rng() % 20);
        }
      }
      const auto acc = TopKAccuracy(ranks, ks);
      for (std::size_t i = 1; i < ks.size(); ++i) CHECK(acc.at(ks[i - 1]) <= acc.at(ks[i]));
      for (const auto& [k, v] : acc) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }

  TableMlm FourPoints() {
    return TableMlm({{"a", {0, 0}}, {"b", {1, 0}}, {"c", {3, 0}}, {"d", {0, 2}}}, {});
  }

  TEST_CASE("embedding inference ranks the original by distance") {
    const TableMlm mlm = FourPoints();
    // From b: a 1, c 2, d sqrt 5 -> a is rank 1. From a: b 1, d 2, c 3 -> c is rank 3.
    const std::vector<ObfuscationResult> results{MakeResult("a c", {{0, "b"}, {1, "a"}})};
    const AttackReport r = EmbeddingInferenceAttack(results, mlm, kKs);
    CHECK(r.attack == AttackKind::kEmbeddingInference);
    REQUIRE(r.per_example.size() == 2);
    CHECK(r.per_example[0].rank == 1u);
    CHECK(r.per_example[0].success);
    CHECK(r.per_example[1].rank == 3u);
    CHECK(r.topk_accuracy.at(1) == doctest::Approx(0.5));
    CHECK(r.topk_accuracy.at(5) == doctest::Approx(1.0));
    CHECK(r.evaluated == 2);
  }

  TEST_CASE("embedding inference counts out-of-vocabulary words as misses") {
    const TableMlm mlm = FourPoints();
    const std::vector<ObfuscationResult> results{MakeResult("zz a", {{0, "b"}, {1, "qq"}})};
    const AttackReport r = EmbeddingInferenceAttack(results, mlm, kKs);
    REQUIRE(r.per_example.size() == 2);
    CHECK_FALSE(r.per_example[0].rank.has_value());
    CHECK_FALSE(r.per_example[1].rank.has_value());
    CHECK(r.topk_accuracy.at(5) == 0.0);
  }

  TEST_CASE("embedding inference matches an exhaustive oracle") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> coord(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      std::map<std::string, std::vector<double>> emb;
      std::vector<std::string> words;
      for (int i = 0; i < 12; ++i) {
        words.push_back("w" + std::to_string(i));
        // Rounded coordinates produce exact distance ties.
        emb[words.back()] = {std::round(coord(rng) * 2), std::round(coord(rng) * 2)};
      }
      const TableMlm mlm(emb, {});
      const std::string original = words[rng() % words.size()];
      std::string chosen = original;
      while (chosen == original) chosen = words[rng() % words.size()];
      const std::vector<ObfuscationResult> results{MakeResult(original, {{0, chosen}})};
      const AttackReport r = EmbeddingInferenceAttack(results, mlm, std::vector<int>{1, 3, 12});

      // Vocabulary order is the attacker's order (map order here).
      std::vector<std::pair<double, std::size_t>> order;
      const auto vocab = mlm.Vocabulary();
      std::size_t target = 0;
      for (std::size_t i = 0; i < vocab.size(); ++i) {
        if (vocab[i] == chosen) continue;
        if (vocab[i] == original) target = i;
        const double dx = emb[vocab[i]][0] - emb[chosen][0];
        const double dy = emb[vocab[i]][1] - emb[chosen][1];
        order.emplace_back(std::sqrt(dx * dx + dy * dy), i);
      }
      std::sort(order.begin(), order.end());
      std::size_t expected = 0;
      for (std::size_t i = 0; i < order.size(); ++i) {
        if (order[i].second == target) expected = i + 1;
      }
      REQUIRE(r.per_example.size() == 1);
      CHECK(r.per_example[0].rank == expected);
    }
  }

  TEST_CASE("attacks need results and something to attack") {
    const TableMlm mlm = FourPoints();
    CHECK(CodeOf([&] { EmbeddingInferenceAttack({}, mlm, kKs); }) == ErrorCode::kEmptyResults);
    CHECK(CodeOf([&] { MaskTokenInferenceAttack({}, mlm, kKs); }) == ErrorCode::kEmptyResults);
    const std::vector<ObfuscationResult> untouched{MakeResult("a b", {})};
    const AttackReport r = EmbeddingInferenceAttack(untouched, mlm, kKs);
    CHECK(r.undefined);
    CHECK(r.evaluated == 0);
    CHECK(r.topk_accuracy.at(1) == 0.0);
    std::vector<ObfuscationResult> scrubbed{MakeResult("a c", {{0, "b"}})};
    scrubbed[0].replacements[0].original.clear();
    CHECK(CodeOf([&] { EmbeddingInferenceAttack(scrubbed, mlm, kKs); }) ==
          ErrorCode::kInvalidArgument);
  }

  TEST_CASE("mask-token inference") {
    const std::vector<ObfuscationResult> results{MakeResult("the cat sat", {{1, "dog"}}),
                                                 MakeResult("a dog ran", {{1, "cow"}})};
    SUBCASE("omniscient attacker") {
      TableMlm mlm({}, {});
      mlm.set_fill([](std::string_view context) {
        return std::vector<std::string>{context.find("the") == 0 ? "cat" : "dog"};
      });
      const AttackReport r = MaskTokenInferenceAttack(results, mlm, kKs);
      CHECK(r.topk_accuracy.at(1) == 1.0);
      CHECK(mlm.last_context() == "a [MASK] ran");
    }
    SUBCASE("blind attacker") {
      const TableMlm mlm({}, {"x", "y", "z"});
      const AttackReport r = MaskTokenInferenceAttack(results, mlm, kKs);
      CHECK(r.topk_accuracy.at(1) == 0.0);
      CHECK(r.topk_accuracy.at(5) == 0.0);
    }
    SUBCASE("half recovered, one at rank two") {
      const TableMlm mlm({}, {"Cat", "dog", "x"});
      const AttackReport r = MaskTokenInferenceAttack(results, mlm, kKs);
      CHECK(r.topk_accuracy.at(1) == 0.5);
      CHECK(r.topk_accuracy.at(5) == 1.0);
      CHECK(r.per_example[1].rank == 2u);
    }
  }

  TEST_CASE("explicit PII inference") {
    const WordNer ner({{"Ann", "PERSON"}, {"Rome", "LOCATION"}});
    const std::vector<ObfuscationResult> results{
        MakeResult("Ann in Rome", {{0, "Bo"}, {2, "Oslo"}}),  // both removed
        MakeResult("Ann in Rome", {{0, "Bo"}}),               // Rome leaks
        MakeResult("the cat", {}),                            // no entities
        MakeResult("rome again", {{1, "later"}})};            // case-insensitive leak
    const AttackReport r = ExplicitPiiAttack(results, ner);
    CHECK(r.evaluated == 2);
    CHECK(r.excluded == 2);
    CHECK(r.success_rate == doctest::Approx(0.5));
    CHECK(r.per_example[1].note == "leaked 'Rome'");
  }

  TEST_CASE("implicit PII inference") {
    std::vector<ObfuscationResult> results(8, MakeResult("some text", {}));
    const std::vector<std::string> labels{
        "Software Engineer", "nurse", "teacher", "pilot", "chef", "nurse", "lawyer", "farmer"};
    ScriptedJudge judge({"  software-engineer.", "doctor", "Teacher", "a pilot", "cook", "midwife",
                         "judge", "rancher"});
    const AttackReport r = ImplicitPiiAttack(results, labels, "occupation", judge);
    CHECK(r.evaluated == 8);
    // Matches are exact after normalization, so "a pilot" misses.
    CHECK(r.success_rate == doctest::Approx(2.0 / 8));

    ScriptedJudge flaky({"nurse", "!fail", "x", "x", "x", "x", "x", "x"});
    std::vector<std::string> nurses(8, "nurse");
    const AttackReport f = ImplicitPiiAttack(results, nurses, "occupation", flaky);
    CHECK(f.excluded == 1);
    CHECK(f.evaluated == 7);
    CHECK(f.success_rate == doctest::Approx(1.0 / 7));

    CHECK(CodeOf([&] {
            ImplicitPiiAttack(results, std::vector<std::string>{"x"}, "age", judge);
          }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("attribute normalization and phrase matching") {
    CHECK(NormalizeAttribute("  Software-Engineer. ") == "software engineer");
    CHECK(NormalizeAttribute("NEW   york") == "new york");
    CHECK(ContainsPhrase(Tokenize("I live in New York now"), "new york"));
    CHECK_FALSE(ContainsPhrase(Tokenize("I live in Newark"), "new"));
    CHECK_FALSE(ContainsPhrase(Tokenize("a"), ""));
  }

  TEST_CASE("random perturbation") {
    const std::vector<std::string> vocab{"alpha", "beta", "gamma", ","};
    const std::string text = "the cat sat on the mat, quietly";
    CHECK(RandomPerturbation(text, 0.0, 1, vocab) == text);

    const std::string all = RandomPerturbation(text, 1.0, 1, vocab);
    const TokenizedPrompt in = Tokenize(text);
    const TokenizedPrompt out = Tokenize(all);
    REQUIRE(out.size() == in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (IsPunctuationToken(in.tokens[i])) {
        CHECK(out.tokens[i] == in.tokens[i]);
      } else {
        CHECK((out.tokens[i] == "alpha" || out.tokens[i] == "beta" || out.tokens[i] == "gamma"));
      }
    }

    CHECK(RandomPerturbation(text, 0.5, 9, vocab) == RandomPerturbation(text, 0.5, 9, vocab));
    const TokenizedPrompt half = Tokenize(RandomPerturbation(text, 0.5, 9, vocab));
    std::size_t changed = 0;
    for (std::size_t i = 0; i < in.size(); ++i) changed += half.tokens[i] != in.tokens[i];
    CHECK(changed == 4);  // ceil(0.5 * 7)
    CHECK(CodeOf([&] { RandomPerturbation(text, 1.5, 1, vocab); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("attack names") {
    CHECK(ParseAttackKind("mti") == AttackKind::kMaskTokenInference);
    CHECK(AttackKindName(AttackKind::kPiiInference) == "pii");
    CHECK(CodeOf([] { ParseAttackKind("xyz"); }) == ErrorCode::kConfigError);
  }

}  // TEST_SUITE

}  // namespace
}  // namespace promptveil
