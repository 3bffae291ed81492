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
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "nlohmann/json.hpp"

namespace promptveil {
namespace {

using nlohmann::json;

double LogSumExp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

Eigen::VectorXd Softmax(const Eigen::VectorXd& v) {
  Eigen::VectorXd e = (v.array() - v.maxCoeff()).exp();
  return e / e.sum();
}

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

template <typename Matrix>
void FillUniform(Matrix& m, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
  }
}

void NormalizeRow(RowMatrix& m, Eigen::Index row) {
  const double n = m.row(row).norm();
  if (n > 0.0) m.row(row) /= n;
}

Eigen::MatrixXd RowsFor(const RowMatrix& table, const std::vector<int>& ids) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = table.row(ids[i]);
  }
  return out;
}

// Words of a prompt mapped to ids; throws when there are none.
std::vector<int> EncodeNonEmpty(const Vocabulary& vocab, std::string_view prompt) {
  std::vector<int> ids = vocab.Encode(Tokenize(prompt));
  if (ids.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "prompt has no tokens");
  }
  return ids;
}

json MatrixToJson(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd MatrixFromJson(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw Error(ErrorCode::kParseError, "matrix data does not match its shape");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

Eigen::VectorXd VectorFromJson(const json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(data.size()));
}

std::vector<double> VectorToJson(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

void WriteJson(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write model file " + path);
  out << j.dump();
  if (!out) throw Error(ErrorCode::kIoError, "failed writing model file " + path);
}

json ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open model file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
}

// Linearly decayed learning rate over the whole run.
double ScheduledRate(double base, std::size_t step, std::size_t total) {
  const double progress = total == 0 ? 0.0 : static_cast<double>(step) / static_cast<double>(total);
  return base * std::max(0.02, 1.0 - progress);
}

}  // namespace

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  tokens_.emplace_back(kUnk);
  ids_.emplace(std::string(kUnk), 0);
  for (std::string& t : tokens) {
    std::string lower = ToLower(t);
    if (ids_.contains(lower)) continue;
    ids_.emplace(lower, static_cast<int>(tokens_.size()));
    tokens_.push_back(std::move(lower));
  }
}

Vocabulary Vocabulary::Build(std::span<const TokenizedPrompt> corpus, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& doc : corpus) {
    for (const auto& t : doc.tokens) ++counts[ToLower(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  for (auto& [tok, n] : items) {
    if (n >= min_count && tok != kUnk) tokens.push_back(tok);
  }
  return Vocabulary(std::move(tokens));
}

std::optional<int> Vocabulary::Find(std::string_view token) const {
  auto it = ids_.find(ToLower(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<int> Vocabulary::Encode(const TokenizedPrompt& prompt) const {
  std::vector<int> ids;
  ids.reserve(prompt.size());
  for (const auto& t : prompt.tokens) ids.push_back(IdOrUnk(t));
  return ids;
}

// ---------------------------------------------------------------------------
// ContextMaskedLm

ContextMaskedLm::ContextMaskedLm(std::string model_id, promptveil::Vocabulary vocab,
                                 RowMatrix input, RowMatrix gates, RowMatrix output,
                                 Eigen::VectorXd bias, int window)
    : model_id_(std::move(model_id)),
      vocab_(std::move(vocab)),
      input_(std::move(input)),
      gates_(std::move(gates)),
      output_(std::move(output)),
      bias_(std::move(bias)),
      window_(window) {
  const auto v = static_cast<Eigen::Index>(vocab_.size());
  if (window_ < 1 || input_.rows() != v || output_.rows() != v || bias_.size() != v ||
      output_.cols() != input_.cols() || gates_.rows() != 2 * window_ ||
      gates_.cols() != input_.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "masked LM parameter shapes disagree");
  }
}

namespace {

// Gate row for a context word `offset` tokens away from the slot.
Eigen::Index GateRow(int offset, int window) {
  return offset < 0 ? offset + window : offset + window - 1;
}

}  // namespace

ContextMaskedLm ContextMaskedLm::Train(std::string model_id,
                                       std::span<const TokenizedPrompt> corpus,
                                       const MlmTrainOptions& options) {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "no training text");
  promptveil::Vocabulary vocab = promptveil::Vocabulary::Build(corpus, options.min_count);
  const auto v = static_cast<Eigen::Index>(vocab.size());
  const int w = options.window;
  std::mt19937_64 rng(options.seed);

  RowMatrix input(v, options.dim);
  FillUniform(input, 1.0, rng);
  for (Eigen::Index r = 0; r < v; ++r) NormalizeRow(input, r);
  RowMatrix gates = RowMatrix::Ones(2 * w, options.dim);
  RowMatrix output = RowMatrix::Zero(v, options.dim);
  Eigen::VectorXd bias = Eigen::VectorXd::Zero(v);

  std::vector<std::vector<int>> docs;
  std::vector<double> freq(static_cast<std::size_t>(v), 0.0);
  std::size_t total_positions = 0;
  for (const auto& doc : corpus) {
    docs.push_back(vocab.Encode(doc));
    for (int id : docs.back()) freq[static_cast<std::size_t>(id)] += 1.0;
    total_positions += docs.back().size();
  }
  for (double& f : freq) f = std::pow(f, 0.75);
  std::discrete_distribution<int> noise(freq.begin(), freq.end());

  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t total_steps = total_positions * static_cast<std::size_t>(options.epochs);
  std::size_t step = 0;
  Eigen::VectorXd h(options.dim);
  Eigen::VectorXd grad_h(options.dim);
  std::vector<std::pair<int, Eigen::Index>> ctx;  // word id, gate row

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t d : order) {
      const std::vector<int>& ids = docs[d];
      const auto n = static_cast<int>(ids.size());
      for (int i = 0; i < n; ++i, ++step) {
        ctx.clear();
        for (int j = std::max(0, i - w); j <= std::min(n - 1, i + w); ++j) {
          if (j != i) ctx.emplace_back(ids[static_cast<std::size_t>(j)], GateRow(j - i, w));
        }
        if (ctx.empty()) continue;
        const double lr = ScheduledRate(options.learning_rate, step, total_steps);
        const double inv = 1.0 / static_cast<double>(ctx.size());
        h.setZero();
        for (auto [c, g] : ctx)
          h += gates.row(g).transpose().cwiseProduct(input.row(c).transpose());
        h *= inv;
        grad_h.setZero();
        const int target = ids[static_cast<std::size_t>(i)];
        for (int s = 0; s <= options.negatives; ++s) {
          int word = target;
          double label = 1.0;
          if (s > 0) {
            word = noise(rng);
            if (word == target) continue;
            label = 0.0;
          }
          const double score = output.row(word).dot(h) + bias(word);
          const double g = (label - Sigmoid(score)) * lr;
          grad_h += g * output.row(word).transpose();
          output.row(word) += g * h.transpose();
          bias(word) += g;
        }
        grad_h *= inv;
        for (auto [c, g] : ctx) {
          const Eigen::RowVectorXd e = input.row(c);
          input.row(c) += gates.row(g).cwiseProduct(grad_h.transpose());
          gates.row(g) += e.cwiseProduct(grad_h.transpose());
          if (options.unit_norm) NormalizeRow(input, c);
        }
      }
    }
  }
  return ContextMaskedLm(std::move(model_id), std::move(vocab), std::move(input), std::move(gates),
                         std::move(output), std::move(bias), w);
}

std::vector<ScoredToken> ContextMaskedLm::FillMask(std::string_view context,
                                                   std::size_t top_n) const {
  const std::size_t at = context.find(kMaskToken);
  if (at == std::string_view::npos) {
    throw Error(ErrorCode::kInvalidArgument, "context has no mask marker");
  }
  const TokenizedPrompt left = Tokenize(context.substr(0, at));
  const TokenizedPrompt right = Tokenize(context.substr(at + kMaskToken.size()));
  Eigen::VectorXd h = Eigen::VectorXd::Zero(input_.cols());
  int count = 0;
  for (int o = 1; o <= window_ && static_cast<std::size_t>(o) <= left.size(); ++o) {
    const int id = vocab_.IdOrUnk(left.tokens[left.size() - static_cast<std::size_t>(o)]);
    h += gates_.row(GateRow(-o, window_)).transpose().cwiseProduct(input_.row(id).transpose());
    ++count;
  }
  for (int o = 1; o <= window_ && static_cast<std::size_t>(o) <= right.size(); ++o) {
    const int id = vocab_.IdOrUnk(right.tokens[static_cast<std::size_t>(o - 1)]);
    h += gates_.row(GateRow(o, window_)).transpose().cwiseProduct(input_.row(id).transpose());
    ++count;
  }
  if (count > 0) h /= static_cast<double>(count);

  Eigen::VectorXd logits = output_ * h + bias_;
  logits(0) = -std::numeric_limits<double>::infinity();
  const double lse = LogSumExp(logits.tail(logits.size() - 1));

  std::vector<int> ids(vocab_.size() - 1);
  std::iota(ids.begin(), ids.end(), 1);
  const std::size_t n = std::min(top_n, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(),
                    [&](int a, int b) {
                      if (logits(a) != logits(b)) return logits(a) > logits(b);
                      return a < b;
                    });
  std::vector<ScoredToken> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({vocab_.Token(ids[i]), logits(ids[i]) - lse, false});
  }
  return out;
}

std::optional<std::vector<double>> ContextMaskedLm::Embedding(std::string_view token) const {
  const auto id = vocab_.Find(token);
  if (!id || *id == 0) return std::nullopt;
  const auto row = input_.row(*id);
  return std::vector<double>(row.data(), row.data() + row.size());
}

std::vector<std::string> ContextMaskedLm::Vocabulary() const {
  std::vector<std::string> out;
  for (std::size_t i = 1; i < vocab_.size(); ++i) {
    const std::string& t = vocab_.Token(static_cast<int>(i));
    if (!IsPunctuationToken(t)) out.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// DifferentiableSurrogate

double DifferentiableSurrogate::Loss(std::string_view prompt, const TaskTarget& target) const {
  return LossAt(Embed(prompt), target);
}

Eigen::MatrixXd DifferentiableSurrogate::InputGradient(std::string_view prompt,
                                                       const TaskTarget& target) const {
  return GradientAt(Embed(prompt), target);
}

// ---------------------------------------------------------------------------
// BagClassifier

BagClassifier::BagClassifier(std::string model_id, promptveil::Vocabulary vocab,
                             std::vector<std::string> class_names, RowMatrix embeddings,
                             Eigen::MatrixXd hidden_w, Eigen::VectorXd hidden_b,
                             Eigen::MatrixXd out_w, Eigen::VectorXd out_b)
    : model_id_(std::move(model_id)),
      vocab_(std::move(vocab)),
      class_names_(std::move(class_names)),
      embeddings_(std::move(embeddings)),
      hidden_w_(std::move(hidden_w)),
      hidden_b_(std::move(hidden_b)),
      out_w_(std::move(out_w)),
      out_b_(std::move(out_b)) {
  const auto c = static_cast<Eigen::Index>(class_names_.size());
  if (embeddings_.rows() != static_cast<Eigen::Index>(vocab_.size()) ||
      hidden_w_.cols() != embeddings_.cols() || hidden_b_.size() != hidden_w_.rows() ||
      out_w_.cols() != hidden_w_.rows() || out_w_.rows() != c || out_b_.size() != c || c < 2) {
    throw Error(ErrorCode::kInvalidArgument, "classifier parameter shapes disagree");
  }
}

BagClassifier BagClassifier::RandomInit(std::string model_id, promptveil::Vocabulary vocab,
                                        std::vector<std::string> class_names, int dim, int hidden,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto v = static_cast<Eigen::Index>(vocab.size());
  const auto c = static_cast<Eigen::Index>(class_names.size());
  RowMatrix emb(v, dim);
  FillUniform(emb, 0.5, rng);
  Eigen::MatrixXd w(hidden, dim);
  FillUniform(w, std::sqrt(6.0 / (dim + hidden)), rng);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(hidden);
  Eigen::MatrixXd u(c, hidden);
  FillUniform(u, std::sqrt(6.0 / static_cast<double>(hidden + c)), rng);
  Eigen::VectorXd ub = Eigen::VectorXd::Zero(c);
  return BagClassifier(std::move(model_id), std::move(vocab), std::move(class_names),
                       std::move(emb), std::move(w), std::move(b), std::move(u), std::move(ub));
}

BagClassifier BagClassifier::Train(std::string model_id, std::span<const TokenizedPrompt> texts,
                                   std::span<const std::string> labels,
                                   const ClassifierTrainOptions& options) {
  if (texts.empty()) throw Error(ErrorCode::kEmptyCorpus, "no training text");
  if (texts.size() != labels.size()) {
    throw Error(ErrorCode::kInvalidArgument, "texts and labels differ in length");
  }
  std::vector<std::string> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

  BagClassifier model =
      RandomInit(std::move(model_id), promptveil::Vocabulary::Build(texts, options.min_count),
                 classes, options.dim, options.hidden, options.seed);
  std::vector<std::vector<int>> docs;
  std::vector<int> ys;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    docs.push_back(model.vocab_.Encode(texts[i]));
    ys.push_back(static_cast<int>(std::lower_bound(classes.begin(), classes.end(), labels[i]) -
                                  classes.begin()));
  }

  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t total = docs.size() * static_cast<std::size_t>(options.epochs);
  std::size_t step = 0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t d : order) {
      const auto& ids = docs[d];
      ++step;
      if (ids.empty()) continue;
      const double lr = ScheduledRate(options.learning_rate, step, total);
      const double t = static_cast<double>(ids.size());
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(model.embeddings_.cols());
      for (int id : ids) mean += model.embeddings_.row(id).transpose();
      mean /= t;
      const Eigen::VectorXd h = (model.hidden_w_ * mean + model.hidden_b_).array().tanh();
      Eigen::VectorXd dlogits = Softmax(model.out_w_ * h + model.out_b_);
      dlogits(ys[d]) -= 1.0;
      const Eigen::VectorXd dz =
          (model.out_w_.transpose() * dlogits).cwiseProduct((1.0 - h.array().square()).matrix());
      const Eigen::VectorXd dmean = model.hidden_w_.transpose() * dz;
      model.out_w_ -= lr * dlogits * h.transpose();
      model.out_b_ -= lr * dlogits;
      model.hidden_w_ -= lr * dz * mean.transpose();
      model.hidden_b_ -= lr * dz;
      for (int id : ids) model.embeddings_.row(id) -= lr * dmean.transpose() / t;
    }
  }
  return model;
}

int BagClassifier::ResolveLabel(const TaskTarget& target) const {
  if (target.kind == TaskTarget::Kind::kClassLabel) {
    if (target.label < 0 || target.label >= static_cast<int>(class_names_.size())) {
      throw Error(ErrorCode::kSurrogateFailure,
                  "class label " + std::to_string(target.label) + " out of range");
    }
    return target.label;
  }
  for (std::size_t i = 0; i < class_names_.size(); ++i) {
    if (EqualsIgnoreCase(class_names_[i], target.text)) return static_cast<int>(i);
  }
  throw Error(ErrorCode::kSurrogateFailure,
              "reference '" + target.text + "' names no class of " + model_id_);
}

Eigen::MatrixXd BagClassifier::Embed(std::string_view prompt) const {
  return RowsFor(embeddings_, EncodeNonEmpty(vocab_, prompt));
}

double BagClassifier::LossAt(const Eigen::MatrixXd& inputs, const TaskTarget& target) const {
  const int y = ResolveLabel(target);
  const Eigen::VectorXd mean = inputs.colwise().mean().transpose();
  const Eigen::VectorXd h = (hidden_w_ * mean + hidden_b_).array().tanh();
  const Eigen::VectorXd logits = out_w_ * h + out_b_;
  return LogSumExp(logits) - logits(y);
}

Eigen::MatrixXd BagClassifier::GradientAt(const Eigen::MatrixXd& inputs,
                                          const TaskTarget& target) const {
  const int y = ResolveLabel(target);
  const Eigen::VectorXd mean = inputs.colwise().mean().transpose();
  const Eigen::VectorXd h = (hidden_w_ * mean + hidden_b_).array().tanh();
  Eigen::VectorXd dlogits = Softmax(out_w_ * h + out_b_);
  dlogits(y) -= 1.0;
  const Eigen::VectorXd dz =
      (out_w_.transpose() * dlogits).cwiseProduct((1.0 - h.array().square()).matrix());
  const Eigen::RowVectorXd drow =
      (hidden_w_.transpose() * dz).transpose() / static_cast<double>(inputs.rows());
  return drow.replicate(inputs.rows(), 1);
}

Eigen::VectorXd BagClassifier::Probabilities(std::string_view prompt) const {
  const Eigen::MatrixXd inputs = Embed(prompt);
  const Eigen::VectorXd mean = inputs.colwise().mean().transpose();
  const Eigen::VectorXd h = (hidden_w_ * mean + hidden_b_).array().tanh();
  return Softmax(out_w_ * h + out_b_);
}

TaskTarget BagClassifier::Predict(std::string_view prompt) const {
  Eigen::Index best = 0;
  Probabilities(prompt).maxCoeff(&best);
  return TaskTarget::ClassLabel(static_cast<int>(best));
}

// ---------------------------------------------------------------------------
// DecayCausalLm

DecayCausalLm::DecayCausalLm(std::string model_id, promptveil::Vocabulary vocab,
                             RowMatrix embeddings, Eigen::MatrixXd hidden_w,
                             Eigen::VectorXd hidden_b, Eigen::MatrixXd out_w, Eigen::VectorXd out_b,
                             double decay, std::size_t continuation_length)
    : model_id_(std::move(model_id)),
      vocab_(std::move(vocab)),
      embeddings_(std::move(embeddings)),
      hidden_w_(std::move(hidden_w)),
      hidden_b_(std::move(hidden_b)),
      out_w_(std::move(out_w)),
      out_b_(std::move(out_b)),
      decay_(decay),
      continuation_length_(continuation_length) {
  const auto v = static_cast<Eigen::Index>(vocab_.size());
  if (embeddings_.rows() != v || hidden_w_.cols() != embeddings_.cols() ||
      hidden_b_.size() != hidden_w_.rows() || out_w_.cols() != hidden_w_.rows() ||
      out_w_.rows() != v || out_b_.size() != v || !(decay_ > 0.0 && decay_ <= 1.0) ||
      continuation_length_ == 0) {
    throw Error(ErrorCode::kInvalidArgument, "causal LM parameters are inconsistent");
  }
}

DecayCausalLm DecayCausalLm::RandomInit(std::string model_id, promptveil::Vocabulary vocab, int dim,
                                        int hidden, double decay, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto v = static_cast<Eigen::Index>(vocab.size());
  RowMatrix emb(v, dim);
  FillUniform(emb, 0.5, rng);
  Eigen::MatrixXd w(hidden, dim);
  FillUniform(w, std::sqrt(6.0 / (dim + hidden)), rng);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(hidden);
  Eigen::MatrixXd u(v, hidden);
  FillUniform(u, std::sqrt(6.0 / static_cast<double>(hidden + v)), rng);
  Eigen::VectorXd ub = Eigen::VectorXd::Zero(v);
  return DecayCausalLm(std::move(model_id), std::move(vocab), std::move(emb), std::move(w),
                       std::move(b), std::move(u), std::move(ub), decay, 4);
}

DecayCausalLm DecayCausalLm::Train(std::string model_id, std::span<const TokenizedPrompt> corpus,
                                   const CausalLmTrainOptions& options) {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "no training text");
  DecayCausalLm model =
      RandomInit(std::move(model_id), promptveil::Vocabulary::Build(corpus, options.min_count),
                 options.dim, options.hidden, options.decay, options.seed);
  model.continuation_length_ = options.continuation_length;

  std::vector<std::vector<int>> docs;
  std::size_t positions = 0;
  for (const auto& doc : corpus) {
    docs.push_back(model.vocab_.Encode(doc));
    if (docs.back().size() > 1) positions += docs.back().size() - 1;
  }
  std::mt19937_64 rng(options.seed ^ 0x51ed270b27f3a1c5ULL);
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t total = positions * static_cast<std::size_t>(options.epochs);
  std::size_t step = 0;
  const double beta = model.decay_;
  const Eigen::Index dim = model.embeddings_.cols();

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t d : order) {
      const auto& ids = docs[d];
      if (ids.size() < 2) continue;
      const std::size_t n = ids.size() - 1;
      step += n;
      const double lr = ScheduledRate(options.learning_rate, step, total);
      const double scale = 1.0 / static_cast<double>(n);

      Eigen::MatrixXd dsum(static_cast<Eigen::Index>(n), dim);
      Eigen::VectorXd running = Eigen::VectorXd::Zero(dim);
      double z = 0.0;
      Eigen::MatrixXd grad_w = Eigen::MatrixXd::Zero(model.hidden_w_.rows(), dim);
      Eigen::VectorXd grad_b = Eigen::VectorXd::Zero(model.hidden_b_.size());
      for (std::size_t t = 0; t < n; ++t) {
        running = beta * running + model.embeddings_.row(ids[t]).transpose();
        z = beta * z + 1.0;
        const Eigen::VectorXd c = running / z;
        const Eigen::VectorXd h = (model.hidden_w_ * c + model.hidden_b_).array().tanh();
        Eigen::VectorXd dlogits = Softmax(model.out_w_ * h + model.out_b_) * scale;
        dlogits(ids[t + 1]) -= scale;
        const Eigen::VectorXd dz =
            (model.out_w_.transpose() * dlogits).cwiseProduct((1.0 - h.array().square()).matrix());
        model.out_w_.noalias() -= lr * dlogits * h.transpose();
        model.out_b_ -= lr * dlogits;
        grad_w.noalias() += dz * c.transpose();
        grad_b += dz;
        dsum.row(static_cast<Eigen::Index>(t)) = (model.hidden_w_.transpose() * dz).transpose() / z;
      }
      Eigen::RowVectorXd carry = Eigen::RowVectorXd::Zero(dim);
      for (std::size_t t = n; t-- > 0;) {
        carry = dsum.row(static_cast<Eigen::Index>(t)) + beta * carry;
        model.embeddings_.row(ids[t]) -= lr * carry;
      }
      model.hidden_w_ -= lr * grad_w;
      model.hidden_b_ -= lr * grad_b;
    }
  }
  return model;
}

std::vector<int> DecayCausalLm::ReferenceIds(const TaskTarget& target) const {
  if (target.kind != TaskTarget::Kind::kReferenceText) {
    throw Error(ErrorCode::kSurrogateFailure, "causal LM surrogate needs a reference_text target");
  }
  std::vector<int> ids = vocab_.Encode(Tokenize(target.text));
  if (ids.empty()) {
    throw Error(ErrorCode::kSurrogateFailure, "empty reference continuation");
  }
  return ids;
}

Eigen::MatrixXd DecayCausalLm::Embed(std::string_view prompt) const {
  return RowsFor(embeddings_, EncodeNonEmpty(vocab_, prompt));
}

double DecayCausalLm::LossAt(const Eigen::MatrixXd& inputs, const TaskTarget& target) const {
  const std::vector<int> ref = ReferenceIds(target);
  const Eigen::Index p = inputs.rows();
  if (p == 0) throw Error(ErrorCode::kInvalidArgument, "prompt has no tokens");
  Eigen::VectorXd running = Eigen::VectorXd::Zero(inputs.cols());
  double z = 0.0;
  for (Eigen::Index t = 0; t < p; ++t) {
    running = decay_ * running + inputs.row(t).transpose();
    z = decay_ * z + 1.0;
  }
  double loss = 0.0;
  for (std::size_t m = 0; m < ref.size(); ++m) {
    if (m > 0) {
      running = decay_ * running + embeddings_.row(ref[m - 1]).transpose();
      z = decay_ * z + 1.0;
    }
    const Eigen::VectorXd h = (hidden_w_ * (running / z) + hidden_b_).array().tanh();
    const Eigen::VectorXd logits = out_w_ * h + out_b_;
    loss += LogSumExp(logits) - logits(ref[m]);
  }
  return loss / static_cast<double>(ref.size());
}

Eigen::MatrixXd DecayCausalLm::GradientAt(const Eigen::MatrixXd& inputs,
                                          const TaskTarget& target) const {
  const std::vector<int> ref = ReferenceIds(target);
  const Eigen::Index p = inputs.rows();
  if (p == 0) throw Error(ErrorCode::kInvalidArgument, "prompt has no tokens");
  const Eigen::Index dim = inputs.cols();
  const auto r = static_cast<Eigen::Index>(ref.size());
  const double scale = 1.0 / static_cast<double>(r);

  Eigen::VectorXd running = Eigen::VectorXd::Zero(dim);
  double z = 0.0;
  for (Eigen::Index t = 0; t < p; ++t) {
    running = decay_ * running + inputs.row(t).transpose();
    z = decay_ * z + 1.0;
  }
  // dL/dS at sequence positions p-1 .. p+r-2.
  Eigen::MatrixXd dsum(r, dim);
  for (Eigen::Index m = 0; m < r; ++m) {
    if (m > 0) {
      running =
          decay_ * running + embeddings_.row(ref[static_cast<std::size_t>(m - 1)]).transpose();
      z = decay_ * z + 1.0;
    }
    const Eigen::VectorXd c = running / z;
    const Eigen::VectorXd h = (hidden_w_ * c + hidden_b_).array().tanh();
    Eigen::VectorXd dlogits = Softmax(out_w_ * h + out_b_) * scale;
    dlogits(ref[static_cast<std::size_t>(m)]) -= scale;
    const Eigen::VectorXd dz =
        (out_w_.transpose() * dlogits).cwiseProduct((1.0 - h.array().square()).matrix());
    dsum.row(m) = (hidden_w_.transpose() * dz).transpose() / z;
  }
  // Accumulate backwards through the decayed sums.
  Eigen::RowVectorXd carry = Eigen::RowVectorXd::Zero(dim);
  for (Eigen::Index m = r - 1; m >= 1; --m) carry = dsum.row(m) + decay_ * carry;
  carry = dsum.row(0) + decay_ * carry;
  Eigen::MatrixXd grad(p, dim);
  for (Eigen::Index t = p - 1; t >= 0; --t) {
    grad.row(t) = carry;
    carry *= decay_;
  }
  return grad;
}

TaskTarget DecayCausalLm::Predict(std::string_view prompt) const {
  const std::vector<int> ids = EncodeNonEmpty(vocab_, prompt);
  Eigen::VectorXd running = Eigen::VectorXd::Zero(embeddings_.cols());
  double z = 0.0;
  for (int id : ids) {
    running = decay_ * running + embeddings_.row(id).transpose();
    z = decay_ * z + 1.0;
  }
  std::string text;
  for (std::size_t m = 0; m < continuation_length_; ++m) {
    const Eigen::VectorXd h = (hidden_w_ * (running / z) + hidden_b_).array().tanh();
    Eigen::VectorXd logits = out_w_ * h + out_b_;
    logits(0) = -std::numeric_limits<double>::infinity();
    Eigen::Index best = 0;
    logits.maxCoeff(&best);
    if (!text.empty()) text += ' ';
    text += vocab_.Token(static_cast<int>(best));
    running = decay_ * running + embeddings_.row(best).transpose();
    z = decay_ * z + 1.0;
  }
  return TaskTarget::Reference(std::move(text));
}

double DecayCausalLm::Perplexity(const TokenizedPrompt& text) const {
  const std::vector<int> ids = vocab_.Encode(text);
  if (ids.size() < 2) return 0.0;
  Eigen::VectorXd running = Eigen::VectorXd::Zero(embeddings_.cols());
  double z = 0.0;
  double nll = 0.0;
  for (std::size_t t = 0; t + 1 < ids.size(); ++t) {
    running = decay_ * running + embeddings_.row(ids[t]).transpose();
    z = decay_ * z + 1.0;
    const Eigen::VectorXd h = (hidden_w_ * (running / z) + hidden_b_).array().tanh();
    const Eigen::VectorXd logits = out_w_ * h + out_b_;
    nll += LogSumExp(logits) - logits(ids[t + 1]);
  }
  return nll / static_cast<double>(ids.size() - 1);
}

// ---------------------------------------------------------------------------
// Serialization

void SaveModel(const ContextMaskedLm& model, const std::string& path) {
  json j{{"type", "context-mlm"},
         {"model_id", model.model_id()},
         {"vocab", model.vocab().tokens()},
         {"window", model.window()},
         {"input", MatrixToJson(model.input_embeddings())},
         {"gates", MatrixToJson(model.offset_gates())},
         {"output", MatrixToJson(model.output_embeddings())},
         {"bias", VectorToJson(model.output_bias())}};
  WriteJson(j, path);
}

void SaveModel(const BagClassifier& model, const std::string& path) {
  json j{{"type", "bag-classifier"},
         {"model_id", model.model_id()},
         {"vocab", model.vocab().tokens()},
         {"classes", model.class_names()},
         {"embeddings", MatrixToJson(model.embeddings())},
         {"hidden_w", MatrixToJson(model.hidden_w())},
         {"hidden_b", VectorToJson(model.hidden_b())},
         {"out_w", MatrixToJson(model.out_w())},
         {"out_b", VectorToJson(model.out_b())}};
  WriteJson(j, path);
}

void SaveModel(const DecayCausalLm& model, const std::string& path) {
  json j{{"type", "decay-lm"},
         {"model_id", model.model_id()},
         {"vocab", model.vocab().tokens()},
         {"decay", model.decay()},
         {"continuation_length", model.continuation_length()},
         {"embeddings", MatrixToJson(model.embeddings())},
         {"hidden_w", MatrixToJson(model.hidden_w())},
         {"hidden_b", VectorToJson(model.hidden_b())},
         {"out_w", MatrixToJson(model.out_w())},
         {"out_b", VectorToJson(model.out_b())}};
  WriteJson(j, path);
}

namespace {

promptveil::Vocabulary VocabFromJson(const json& j) {
  auto tokens = j.at("vocab").get<std::vector<std::string>>();
  if (tokens.empty() || tokens.front() != Vocabulary::kUnk) {
    throw Error(ErrorCode::kParseError, "model vocabulary must start with <unk>");
  }
  tokens.erase(tokens.begin());
  return promptveil::Vocabulary(std::move(tokens));
}

}  // namespace

std::unique_ptr<ContextMaskedLm> LoadMaskedLm(const std::string& path) {
  const json j = ReadJson(path);
  try {
    if (j.at("type") != "context-mlm") {
      throw Error(ErrorCode::kParseError, path + " is not a context-mlm model");
    }
    return std::make_unique<ContextMaskedLm>(
        j.at("model_id").get<std::string>(), VocabFromJson(j),
        RowMatrix(MatrixFromJson(j.at("input"))), RowMatrix(MatrixFromJson(j.at("gates"))),
        RowMatrix(MatrixFromJson(j.at("output"))), VectorFromJson(j.at("bias")),
        j.at("window").get<int>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
}

std::unique_ptr<DifferentiableSurrogate> LoadSurrogate(const std::string& path) {
  const json j = ReadJson(path);
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "bag-classifier") {
      return std::make_unique<BagClassifier>(
          j.at("model_id").get<std::string>(), VocabFromJson(j),
          j.at("classes").get<std::vector<std::string>>(),
          RowMatrix(MatrixFromJson(j.at("embeddings"))), MatrixFromJson(j.at("hidden_w")),
          VectorFromJson(j.at("hidden_b")), MatrixFromJson(j.at("out_w")),
          VectorFromJson(j.at("out_b")));
    }
    if (type == "decay-lm") {
      return std::make_unique<DecayCausalLm>(
          j.at("model_id").get<std::string>(), VocabFromJson(j),
          RowMatrix(MatrixFromJson(j.at("embeddings"))), MatrixFromJson(j.at("hidden_w")),
          VectorFromJson(j.at("hidden_b")), MatrixFromJson(j.at("out_w")),
          VectorFromJson(j.at("out_b")), j.at("decay").get<double>(),
          j.at("continuation_length").get<std::size_t>());
    }
    throw Error(ErrorCode::kParseError,
                path + ": model type '" + type + "' cannot serve as a surrogate");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
}

}  // namespace promptveil
