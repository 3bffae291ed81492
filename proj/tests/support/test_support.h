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

// Deterministic stub providers, a local mock chat endpoint and small helpers
// shared by the unit and acceptance tests.

#ifndef PROMPTVEIL_TESTS_SUPPORT_TEST_SUPPORT_H_
#define PROMPTVEIL_TESTS_SUPPORT_TEST_SUPPORT_H_

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "nlohmann/json.hpp"
#include "promptveil/candidate_generation.h"
#include "promptveil/models.h"
#include "promptveil/privacy_detection.h"
#include "promptveil/surrogate.h"

// Eigen (via models.h) must come before httplib: <resolv.h> defines a `_res`
// macro that breaks Eigen's product kernels.
#include "httplib.h"

namespace promptveil::testing {

// Tags every token found in `labels` (exact match) with its label.
class WordNer : public NerProvider {
 public:
  explicit WordNer(std::map<std::string, std::string> labels) : labels_(std::move(labels)) {}
  std::string id() const override { return "word-ner"; }
  std::vector<CharEntity> Analyze(std::string_view text) const override {
    if (text.find(poison_) != std::string_view::npos && !poison_.empty()) {
      throw std::runtime_error("stub NER refused the text");
    }
    std::vector<CharEntity> out;
    const TokenizedPrompt p = Tokenize(text);
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto it = labels_.find(p.tokens[i]);
      if (it != labels_.end()) out.push_back({p.spans[i].begin, p.spans[i].end, it->second});
    }
    return out;
  }
  // Texts containing `word` make Analyze throw.
  void Poison(std::string word) { poison_ = std::move(word); }

 private:
  std::map<std::string, std::string> labels_;
  std::string poison_;
};

// Returns a fixed list of character entities.
class FixedNer : public NerProvider {
 public:
  explicit FixedNer(std::vector<CharEntity> entities) : entities_(std::move(entities)) {}
  std::string id() const override { return "fixed-ner"; }
  std::vector<CharEntity> Analyze(std::string_view) const override { return entities_; }

 private:
  std::vector<CharEntity> entities_;
};

// Masked LM with a fixed embedding table. FillMask returns `ranking` (or the
// result of `fill` when set) truncated to top_n; every ranked token scores
// -rank so ordering is explicit.
class TableMlm : public MlmProvider {
 public:
  using FillFn = std::function<std::vector<std::string>(std::string_view context)>;

  TableMlm(std::map<std::string, std::vector<double>> embeddings, std::vector<std::string> ranking)
      : embeddings_(std::move(embeddings)), ranking_(std::move(ranking)) {}

  std::string model_id() const override { return "table-mlm"; }
  std::string mask_token() const override { return "[MASK]"; }
  std::vector<ScoredToken> FillMask(std::string_view context, std::size_t top_n) const override {
    ++calls_;
    last_context_ = std::string(context);
    if (fail_) throw std::runtime_error("stub MLM is down");
    const std::vector<std::string> ranked = fill_ ? fill_(context) : ranking_;
    std::vector<ScoredToken> out;
    for (std::size_t i = 0; i < ranked.size() && i < top_n; ++i) {
      const bool fragment = ranked[i].rfind("##", 0) == 0;
      out.push_back({ranked[i], -static_cast<double>(i), fragment});
    }
    return out;
  }
  std::optional<std::vector<double>> Embedding(std::string_view token) const override {
    auto it = embeddings_.find(std::string(token));
    if (it == embeddings_.end()) it = embeddings_.find(ToLower(token));
    if (it == embeddings_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t embedding_dim() const override {
    return embeddings_.empty() ? 0 : embeddings_.begin()->second.size();
  }
  std::vector<std::string> Vocabulary() const override {
    std::vector<std::string> out;
    for (const auto& [t, v] : embeddings_) out.push_back(t);
    return out;
  }

  void set_fill(FillFn fn) { fill_ = std::move(fn); }
  void set_fail(bool fail) { fail_ = fail; }
  int calls() const { return calls_; }
  const std::string& last_context() const { return last_context_; }

 private:
  std::map<std::string, std::vector<double>> embeddings_;
  std::vector<std::string> ranking_;
  FillFn fill_;
  bool fail_ = false;
  mutable int calls_ = 0;
  mutable std::string last_context_;
};

// Surrogate whose gradient has one row per token holding `weights[token]`
// (0 when absent), so the full-input norm is sqrt(sum of squared weights).
// Prompts containing `poison` make it throw.
class WeightSurrogate : public SurrogateModel {
 public:
  explicit WeightSurrogate(std::map<std::string, double> weights,
                           SurrogateKind kind = SurrogateKind::kGeneral)
      : weights_(std::move(weights)), kind_(kind) {}

  std::string model_id() const override { return "weight-surrogate"; }
  SurrogateKind kind() const override { return kind_; }
  double Loss(std::string_view prompt, const TaskTarget&) const override {
    return InputGradient(prompt, {}).sum();
  }
  Eigen::MatrixXd InputGradient(std::string_view prompt, const TaskTarget&) const override {
    const TokenizedPrompt p = Tokenize(prompt);
    for (const auto& bad : poison_) {
      for (const auto& t : p.tokens) {
        if (t == bad) throw std::runtime_error("stub surrogate cannot score '" + bad + "'");
      }
    }
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p.size()), 1);
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto it = weights_.find(p.tokens[i]);
      if (it != weights_.end()) g(static_cast<Eigen::Index>(i), 0) = it->second;
    }
    return g;
  }
  TaskTarget Predict(std::string_view) const override { return TaskTarget::Reference("ok"); }
  void Poison(std::string token) { poison_.push_back(std::move(token)); }

 private:
  std::map<std::string, double> weights_;
  SurrogateKind kind_;
  std::vector<std::string> poison_;
};

// loss = c; gradient is zero everywhere.
class ConstantSurrogate : public SurrogateModel {
 public:
  std::string model_id() const override { return "constant"; }
  SurrogateKind kind() const override { return SurrogateKind::kGeneral; }
  double Loss(std::string_view, const TaskTarget&) const override { return 3.5; }
  Eigen::MatrixXd InputGradient(std::string_view prompt, const TaskTarget&) const override {
    return Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(Tokenize(prompt).size()), 4);
  }
  TaskTarget Predict(std::string_view) const override { return TaskTarget::Reference("x"); }
};

// loss = sum of every embedding entry over a D-dimensional table, so the
// gradient is all ones.
class SumSurrogate : public SurrogateModel {
 public:
  explicit SumSurrogate(int dim) : dim_(dim) {}
  std::string model_id() const override { return "sum"; }
  SurrogateKind kind() const override { return SurrogateKind::kGeneral; }
  double Loss(std::string_view prompt, const TaskTarget&) const override {
    return static_cast<double>(Tokenize(prompt).size() * static_cast<std::size_t>(dim_));
  }
  Eigen::MatrixXd InputGradient(std::string_view prompt, const TaskTarget&) const override {
    return Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(Tokenize(prompt).size()), dim_);
  }
  TaskTarget Predict(std::string_view) const override { return TaskTarget::Reference("x"); }

 private:
  int dim_;
};

// Tiny differentiable surrogate: loss = sum_t a . tanh(W x_t + b) + 0.5 |x|^2
// over a random embedding table.
class TinyTanhSurrogate : public DifferentiableSurrogate {
 public:
  TinyTanhSurrogate(int dim, std::uint64_t seed) : dim_(dim) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 0.7);
    w_ = Eigen::MatrixXd(dim, dim);
    for (Eigen::Index i = 0; i < w_.size(); ++i) w_.data()[i] = n(rng);
    b_ = Eigen::VectorXd(dim);
    a_ = Eigen::VectorXd(dim);
    for (int i = 0; i < dim; ++i) {
      b_(i) = n(rng);
      a_(i) = n(rng);
    }
    seed_ = seed;
  }
  std::string model_id() const override { return "tiny-tanh"; }
  SurrogateKind kind() const override { return SurrogateKind::kGeneral; }
  TaskTarget Predict(std::string_view) const override { return TaskTarget::Reference("x"); }
  Eigen::MatrixXd Embed(std::string_view prompt) const override {
    const TokenizedPrompt p = Tokenize(prompt);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(p.size()), dim_);
    for (std::size_t t = 0; t < p.size(); ++t) {
      std::mt19937_64 rng(std::hash<std::string>{}(p.tokens[t]) ^ seed_);
      std::normal_distribution<double> n(0.0, 1.0);
      for (int j = 0; j < dim_; ++j) x(static_cast<Eigen::Index>(t), j) = n(rng);
    }
    return x;
  }
  double LossAt(const Eigen::MatrixXd& x, const TaskTarget&) const override {
    double loss = 0.5 * x.squaredNorm();
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      loss += a_.dot((w_ * x.row(t).transpose() + b_).array().tanh().matrix());
    }
    return loss;
  }
  Eigen::MatrixXd GradientAt(const Eigen::MatrixXd& x, const TaskTarget&) const override {
    Eigen::MatrixXd g = x;
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      const Eigen::VectorXd z = (w_ * x.row(t).transpose() + b_).array().tanh();
      const Eigen::VectorXd dz = a_.array() * (1.0 - z.array().square());
      g.row(t) += (w_.transpose() * dz).transpose();
    }
    return g;
  }

 private:
  int dim_;
  Eigen::MatrixXd w_;
  Eigen::VectorXd b_;
  Eigen::VectorXd a_;
  std::uint64_t seed_;
};

// Relative Frobenius error between the analytic input gradient and central
// differences of LossAt.
inline double FiniteDifferenceError(const DifferentiableSurrogate& s, std::string_view prompt,
                                    const TaskTarget& target, double h = 1e-5) {
  const Eigen::MatrixXd x = s.Embed(prompt);
  const Eigen::MatrixXd analytic = s.GradientAt(x, target);
  Eigen::MatrixXd numeric(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      Eigen::MatrixXd plus = x;
      Eigen::MatrixXd minus = x;
      plus(i, j) += h;
      minus(i, j) -= h;
      numeric(i, j) = (s.LossAt(plus, target) - s.LossAt(minus, target)) / (2 * h);
    }
  }
  return (analytic - numeric).norm() / (analytic.norm() + 1e-12);
}

// Local chat-completion endpoint at http://127.0.0.1:<port>/v1. The handler
// maps the parsed request body to the reply content.
class MockChatServer {
 public:
  using Handler = std::function<std::string(const nlohmann::json& request)>;

  explicit MockChatServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post(
        "/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
          std::lock_guard lock(mu_);
          requests_.push_back(nlohmann::json::parse(req.body));
          authorization_.push_back(req.get_header_value("Authorization"));
          if (failures_left_ > 0) {
            --failures_left_;
            res.status = failure_status_;
            res.set_content("{\"error\":\"busy\"}", "application/json");
            return;
          }
          std::string content;
          try {
            content = handler_(requests_.back());
          } catch (const std::exception&) {
            res.status = 500;
            return;
          }
          nlohmann::json reply = {
              {"choices",
               {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}}}};
          res.set_content(reply.dump(), "application/json");
        });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockChatServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  // The next `n` requests answer with `status`.
  void FailNext(int n, int status) {
    std::lock_guard lock(mu_);
    failures_left_ = n;
    failure_status_ = status;
  }
  std::vector<nlohmann::json> requests() const {
    std::lock_guard lock(mu_);
    return requests_;
  }
  std::vector<std::string> authorization_headers() const {
    std::lock_guard lock(mu_);
    return authorization_;
  }

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  mutable std::mutex mu_;
  std::vector<nlohmann::json> requests_;
  std::vector<std::string> authorization_;
  int failures_left_ = 0;
  int failure_status_ = 500;
};

// Code of the promptveil::Error thrown by `fn`, or nullopt when it returns.
template <typename Fn>
std::optional<ErrorCode> CodeOf(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

// Last user message of a chat request.
inline std::string UserContent(const nlohmann::json& request) {
  return request.at("messages").back().at("content").get<std::string>();
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path TempDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("promptveil-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Random lowercase word of 3-8 letters.
inline std::string RandomWord(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(3, 8);
  std::uniform_int_distribution<int> ch('a', 'z');
  std::string w;
  for (int i = len(rng); i > 0; --i) w += static_cast<char>(ch(rng));
  return w;
}

}  // namespace promptveil::testing

#endif  // PROMPTVEIL_TESTS_SUPPORT_TEST_SUPPORT_H_
