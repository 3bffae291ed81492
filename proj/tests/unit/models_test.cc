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

#include "promptveil/models.h"

#include <algorithm>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "promptveil/datasets.h"
#include "test_support.h"

namespace promptveil {
namespace {

using testing::CodeOf;

std::vector<TokenizedPrompt> Tokenized(const std::vector<LabeledExample>& examples) {
  std::vector<TokenizedPrompt> out;
  for (const auto& e : examples) out.push_back(Tokenize(e.text));
  return out;
}

const std::vector<LabeledExample>& TrainNews() {
  static const auto news = SyntheticNews(3, 1200);
  return news;
}

const std::vector<LabeledExample>& HeldOutNews() {
  static const auto news = SyntheticNews(99, 200);
  return news;
}

const ContextMaskedLm& SmallMlm() {
  static const ContextMaskedLm mlm = [] {
    MlmTrainOptions o;
    o.dim = 24;
    o.epochs = 4;
    const auto docs = Tokenized(TrainNews());
    return ContextMaskedLm::Train("mlm-test", docs, o);
  }();
  return mlm;
}

TEST_SUITE("models") {
  TEST_CASE("vocabulary orders by frequency then alphabetically") {
    const std::vector<TokenizedPrompt> corpus{Tokenize("b a B"), Tokenize("c a d")};
    const Vocabulary v = Vocabulary::Build(corpus);
    CHECK(v.tokens() == std::vector<std::string>{"<unk>", "a", "b", "c", "d"});
    CHECK(v.Find("A") == 1);
    CHECK_FALSE(v.Find("zebra").has_value());
    CHECK(v.Encode(Tokenize("d zebra b")) == std::vector<int>{4, 0, 2});
    CHECK(Vocabulary::Build(corpus, 2).tokens() == std::vector<std::string>{"<unk>", "a", "b"});
  }

  TEST_CASE("masked LM predicts words that fit the slot") {
    const ContextMaskedLm& mlm = SmallMlm();
    const auto gazetteer = DefaultGazetteer();
    std::set<std::string> places;
    for (const auto& p : gazetteer.at("LOCATION")) places.insert(ToLower(p));

    // Mask every single-token place name in held-out text and count how often
    // the top five predictions contain some other place name.
    int masked = 0;
    int hits = 0;
    for (const auto& e : HeldOutNews()) {
      const TokenizedPrompt p = Tokenize(e.text);
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (!places.contains(ToLower(p.tokens[i]))) continue;
        Replacement m;
        m.position = i;
        m.chosen = mlm.mask_token();
        const std::vector<Replacement> edits{m};
        const auto top = mlm.FillMask(Detokenize(p, edits), 5);
        ++masked;
        hits += std::any_of(top.begin(), top.end(), [&](const ScoredToken& t) {
          return places.contains(t.token) && !EqualsIgnoreCase(t.token, p.tokens[i]);
        });
      }
    }
    REQUIRE(masked > 20);
    CHECK(static_cast<double>(hits) / masked > 0.5);
  }

  TEST_CASE("masked LM output contract") {
    const ContextMaskedLm& mlm = SmallMlm();
    const auto top = mlm.FillMask("the match in <mask> ended", 7);
    REQUIRE(top.size() == 7);
    for (std::size_t i = 1; i < top.size(); ++i) CHECK(top[i - 1].score >= top[i].score);
    for (const auto& t : top) CHECK(t.score <= 0.0);
    CHECK(mlm.FillMask("a <mask>", mlm.vocab().size() + 10).size() < mlm.vocab().size());
    CHECK(CodeOf([&] { mlm.FillMask("no marker here", 3); }) == ErrorCode::kInvalidArgument);
    CHECK(mlm.Embedding("the").has_value());
    CHECK(mlm.Embedding("the")->size() == mlm.embedding_dim());
    CHECK_FALSE(mlm.Embedding("qqqqzz").has_value());
    CHECK(mlm.offset_gates().rows() == 2 * mlm.window());
  }

  TEST_CASE("model files round-trip") {
    const auto dir = testing::TempDir("models");
    const ContextMaskedLm& mlm = SmallMlm();
    SaveModel(mlm, (dir / "mlm.json").string());
    const auto loaded = LoadMaskedLm((dir / "mlm.json").string());
    CHECK(loaded->model_id() == "mlm-test");
    CHECK(loaded->vocab().tokens() == mlm.vocab().tokens());
    const auto a = mlm.FillMask("shares of <mask> rose", 5);
    const auto b = loaded->FillMask("shares of <mask> rose", 5);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].token == b[i].token);
      CHECK(a[i].score == doctest::Approx(b[i].score).epsilon(1e-12));
    }

    const std::vector<std::string> words{"the", "cat", "sat"};
    const BagClassifier c =
        BagClassifier::RandomInit("bag", Vocabulary(words), {"x", "y"}, 4, 3, 1);
    SaveModel(c, (dir / "bag.json").string());
    const auto c2 = LoadSurrogate((dir / "bag.json").string());
    CHECK(c2->kind() == SurrogateKind::kTaskSpecific);
    CHECK(c2->Loss("the cat", TaskTarget::ClassLabel(1)) ==
          doctest::Approx(c.Loss("the cat", TaskTarget::ClassLabel(1))));

    const DecayCausalLm lm = DecayCausalLm::RandomInit("lm", Vocabulary(words), 4, 3, 0.6, 1);
    SaveModel(lm, (dir / "lm.json").string());
    const auto lm2 = LoadSurrogate((dir / "lm.json").string());
    CHECK(lm2->kind() == SurrogateKind::kGeneral);
    CHECK(lm2->Predict("the cat").text == lm.Predict("the cat").text);

    CHECK(CodeOf([&] { LoadMaskedLm((dir / "bag.json").string()); }) == ErrorCode::kParseError);
    CHECK(CodeOf([&] { LoadSurrogate((dir / "missing.json").string()); }) == ErrorCode::kIoError);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("bag classifier learns the news topics") {
    ClassifierTrainOptions o;
    o.epochs = 10;
    const auto docs = Tokenized(TrainNews());
    std::vector<std::string> labels;
    for (const auto& e : TrainNews()) labels.push_back(e.label);
    const BagClassifier c = BagClassifier::Train("topics", docs, labels, o);
    CHECK(c.class_names().size() == 4);

    int correct = 0;
    for (const auto& e : HeldOutNews()) {
      const int predicted = c.Predict(e.text).label;
      correct += c.class_names()[static_cast<std::size_t>(predicted)] == e.label;
    }
    CHECK(static_cast<double>(correct) / HeldOutNews().size() > 0.8);
    const auto probs = c.Probabilities(HeldOutNews()[0].text);
    CHECK(probs.sum() == doctest::Approx(1.0));
    CHECK(CodeOf([&] { c.Loss("the", TaskTarget::ClassLabel(9)); }) ==
          ErrorCode::kSurrogateFailure);
  }

  TEST_CASE("causal LM training lowers held-out perplexity") {
    CausalLmTrainOptions o;
    o.epochs = 2;
    const auto docs = Tokenized(TrainNews());
    const DecayCausalLm trained = DecayCausalLm::Train("lm", docs, o);
    const DecayCausalLm untrained =
        DecayCausalLm::RandomInit("lm0", trained.vocab(), o.dim, o.hidden, o.decay, o.seed);
    double before = 0;
    double after = 0;
    for (const auto& e : HeldOutNews()) {
      before += untrained.Perplexity(Tokenize(e.text));
      after += trained.Perplexity(Tokenize(e.text));
    }
    CHECK(after < 0.8 * before);
    const TaskTarget continuation = trained.Predict("the president of");
    CHECK(continuation.kind == TaskTarget::Kind::kReferenceText);
    CHECK(Tokenize(continuation.text).size() == o.continuation_length);
  }

}  // TEST_SUITE

}  // namespace
}  // namespace promptveil
