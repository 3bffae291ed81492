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

// Compact trainable models that back the provider contracts offline: a
// context-window masked LM (candidate generation, MTI attacker, embedding
// table), a bag-of-embeddings classifier (task-specific surrogate) and a
// decayed-context causal LM (general surrogate). Input gradients are derived
// analytically.

#ifndef PROMPTVEIL_MODELS_H_
#define PROMPTVEIL_MODELS_H_

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "promptveil/candidate_generation.h"
#include "promptveil/core.h"
#include "promptveil/surrogate.h"

namespace promptveil {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Lowercased word vocabulary. Id 0 is always <unk>.
class Vocabulary {
 public:
  static constexpr std::string_view kUnk = "<unk>";

  Vocabulary();
  explicit Vocabulary(std::vector<std::string> tokens);

  // Tokens seen at least `min_count` times, most frequent first, ties
  // alphabetical.
  static Vocabulary Build(std::span<const TokenizedPrompt> corpus, std::size_t min_count = 1);

  std::optional<int> Find(std::string_view token) const;
  int IdOrUnk(std::string_view token) const { return Find(token).value_or(0); }
  const std::string& Token(int id) const { return tokens_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::vector<int> Encode(const TokenizedPrompt& prompt) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct MlmTrainOptions {
  int dim = 48;
  int window = 3;
  int epochs = 8;
  double learning_rate = 0.05;
  int negatives = 6;
  // Renormalize input rows to unit length after every update.
  bool unit_norm = false;
  std::size_t min_count = 1;
  std::uint64_t seed = 1;
};

// Window masked LM: the slot is predicted from the mean of the input
// embeddings within `window` tokens either side, each scaled elementwise by a
// gate vector for its offset. Trained with negative sampling; inference
// scores the full vocabulary with a log-softmax.
class ContextMaskedLm : public MlmProvider {
 public:
  static constexpr std::string_view kMaskToken = "<mask>";

  ContextMaskedLm(std::string model_id, promptveil::Vocabulary vocab, RowMatrix input,
                  RowMatrix gates, RowMatrix output, Eigen::VectorXd bias, int window);

  static ContextMaskedLm Train(std::string model_id, std::span<const TokenizedPrompt> corpus,
                               const MlmTrainOptions& options);

  std::string model_id() const override { return model_id_; }
  std::string mask_token() const override { return std::string(kMaskToken); }
  std::vector<ScoredToken> FillMask(std::string_view context, std::size_t top_n) const override;
  std::optional<std::vector<double>> Embedding(std::string_view token) const override;
  std::size_t embedding_dim() const override { return static_cast<std::size_t>(input_.cols()); }
  std::vector<std::string> Vocabulary() const override;

  const promptveil::Vocabulary& vocab() const { return vocab_; }
  const RowMatrix& input_embeddings() const { return input_; }
  int window() const { return window_; }
  // One row per context offset: -window..-1 then +1..+window.
  const RowMatrix& offset_gates() const { return gates_; }
  const RowMatrix& output_embeddings() const { return output_; }
  const Eigen::VectorXd& output_bias() const { return bias_; }

 private:
  std::string model_id_;
  promptveil::Vocabulary vocab_;
  RowMatrix input_;
  RowMatrix gates_;
  RowMatrix output_;
  Eigen::VectorXd bias_;
  int window_;
};

// Surrogate whose loss is a differentiable function of the stacked input
// embedding rows of the prompt's word tokens.
class DifferentiableSurrogate : public SurrogateModel {
 public:
  double Loss(std::string_view prompt, const TaskTarget& target) const override;
  Eigen::MatrixXd InputGradient(std::string_view prompt, const TaskTarget& target) const override;

  // One embedding row per word token of Tokenize(prompt).
  virtual Eigen::MatrixXd Embed(std::string_view prompt) const = 0;
  virtual double LossAt(const Eigen::MatrixXd& inputs, const TaskTarget& target) const = 0;
  virtual Eigen::MatrixXd GradientAt(const Eigen::MatrixXd& inputs,
                                     const TaskTarget& target) const = 0;
};

struct ClassifierTrainOptions {
  int dim = 32;
  int hidden = 32;
  int epochs = 30;
  double learning_rate = 0.1;
  std::size_t min_count = 1;
  std::uint64_t seed = 1;
};

// Mean-pooled embeddings -> tanh layer -> softmax over class labels, trained
// with cross-entropy.
class BagClassifier : public DifferentiableSurrogate {
 public:
  BagClassifier(std::string model_id, Vocabulary vocab, std::vector<std::string> class_names,
                RowMatrix embeddings, Eigen::MatrixXd hidden_w, Eigen::VectorXd hidden_b,
                Eigen::MatrixXd out_w, Eigen::VectorXd out_b);

  static BagClassifier RandomInit(std::string model_id, Vocabulary vocab,
                                  std::vector<std::string> class_names, int dim, int hidden,
                                  std::uint64_t seed);
  static BagClassifier Train(std::string model_id, std::span<const TokenizedPrompt> texts,
                             std::span<const std::string> labels,
                             const ClassifierTrainOptions& options);

  std::string model_id() const override { return model_id_; }
  SurrogateKind kind() const override { return SurrogateKind::kTaskSpecific; }
  TaskTarget Predict(std::string_view prompt) const override;

  Eigen::MatrixXd Embed(std::string_view prompt) const override;
  double LossAt(const Eigen::MatrixXd& inputs, const TaskTarget& target) const override;
  Eigen::MatrixXd GradientAt(const Eigen::MatrixXd& inputs,
                             const TaskTarget& target) const override;

  Eigen::VectorXd Probabilities(std::string_view prompt) const;
  const std::vector<std::string>& class_names() const { return class_names_; }
  const promptveil::Vocabulary& vocab() const { return vocab_; }
  const RowMatrix& embeddings() const { return embeddings_; }
  const Eigen::MatrixXd& hidden_w() const { return hidden_w_; }
  const Eigen::VectorXd& hidden_b() const { return hidden_b_; }
  const Eigen::MatrixXd& out_w() const { return out_w_; }
  const Eigen::VectorXd& out_b() const { return out_b_; }

 private:
  int ResolveLabel(const TaskTarget& target) const;

  std::string model_id_;
  promptveil::Vocabulary vocab_;
  std::vector<std::string> class_names_;
  RowMatrix embeddings_;
  Eigen::MatrixXd hidden_w_;
  Eigen::VectorXd hidden_b_;
  Eigen::MatrixXd out_w_;
  Eigen::VectorXd out_b_;
};

struct CausalLmTrainOptions {
  int dim = 32;
  int hidden = 48;
  int epochs = 4;
  double learning_rate = 0.1;
  double decay = 0.6;
  std::size_t min_count = 1;
  std::size_t continuation_length = 4;
  std::uint64_t seed = 1;
};

// Next-token model over a normalized exponentially-decayed sum of the prefix
// embeddings: c_t = sum_j decay^(t-j) e_j / sum_j decay^(t-j),
// h_t = tanh(W c_t + a), p(x_{t+1}) = softmax(U h_t + u).
// The loss for a reference continuation is its mean negative log-likelihood
// given the prompt.
class DecayCausalLm : public DifferentiableSurrogate {
 public:
  DecayCausalLm(std::string model_id, Vocabulary vocab, RowMatrix embeddings,
                Eigen::MatrixXd hidden_w, Eigen::VectorXd hidden_b, Eigen::MatrixXd out_w,
                Eigen::VectorXd out_b, double decay, std::size_t continuation_length);

  static DecayCausalLm RandomInit(std::string model_id, Vocabulary vocab, int dim, int hidden,
                                  double decay, std::uint64_t seed);
  static DecayCausalLm Train(std::string model_id, std::span<const TokenizedPrompt> corpus,
                             const CausalLmTrainOptions& options);

  std::string model_id() const override { return model_id_; }
  SurrogateKind kind() const override { return SurrogateKind::kGeneral; }
  // Greedy continuation of `continuation_length` words.
  TaskTarget Predict(std::string_view prompt) const override;

  Eigen::MatrixXd Embed(std::string_view prompt) const override;
  double LossAt(const Eigen::MatrixXd& inputs, const TaskTarget& target) const override;
  Eigen::MatrixXd GradientAt(const Eigen::MatrixXd& inputs,
                             const TaskTarget& target) const override;

  // Mean next-token NLL over a tokenized text.
  double Perplexity(const TokenizedPrompt& text) const;

  const promptveil::Vocabulary& vocab() const { return vocab_; }
  const RowMatrix& embeddings() const { return embeddings_; }
  const Eigen::MatrixXd& hidden_w() const { return hidden_w_; }
  const Eigen::VectorXd& hidden_b() const { return hidden_b_; }
  const Eigen::MatrixXd& out_w() const { return out_w_; }
  const Eigen::VectorXd& out_b() const { return out_b_; }
  double decay() const { return decay_; }
  std::size_t continuation_length() const { return continuation_length_; }

 private:
  std::vector<int> ReferenceIds(const TaskTarget& target) const;

  std::string model_id_;
  promptveil::Vocabulary vocab_;
  RowMatrix embeddings_;
  Eigen::MatrixXd hidden_w_;
  Eigen::VectorXd hidden_b_;
  Eigen::MatrixXd out_w_;
  Eigen::VectorXd out_b_;
  double decay_;
  std::size_t continuation_length_;
};

// JSON model files. The "type" field selects the class.
void SaveModel(const ContextMaskedLm& model, const std::string& path);
void SaveModel(const BagClassifier& model, const std::string& path);
void SaveModel(const DecayCausalLm& model, const std::string& path);
std::unique_ptr<ContextMaskedLm> LoadMaskedLm(const std::string& path);
std::unique_ptr<DifferentiableSurrogate> LoadSurrogate(const std::string& path);

}  // namespace promptveil

#endif  // PROMPTVEIL_MODELS_H_
