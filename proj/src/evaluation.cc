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

#include "promptveil/evaluation.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <regex>
#include <thread>

#include "httplib.h"
#include "nlohmann/json.hpp"

namespace promptveil {
namespace {

using nlohmann::json;

std::string_view Trim(std::string_view s) {
  const auto not_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) == 0; };
  auto b = std::find_if(s.begin(), s.end(), not_space);
  auto e = std::find_if(s.rbegin(), s.rend(), not_space).base();
  return b < e ? std::string_view(&*b, static_cast<std::size_t>(e - b)) : std::string_view{};
}

bool IsPlaceholderChar(char c) { return (c >= 'A' && c <= 'Z') || c == '_'; }

// Calls `on_text` / `on_placeholder` for the literal runs and {NAME} markers.
template <typename TextFn, typename PlaceholderFn>
void ScanTemplate(std::string_view tmpl, TextFn on_text, PlaceholderFn on_placeholder) {
  std::size_t i = 0;
  std::size_t literal = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tmpl.size() && IsPlaceholderChar(tmpl[j])) ++j;
      if (j > i + 1 && j < tmpl.size() && tmpl[j] == '}') {
        on_text(tmpl.substr(literal, i - literal));
        on_placeholder(tmpl.substr(i + 1, j - i - 1));
        i = j + 1;
        literal = i;
        continue;
      }
    }
    ++i;
  }
  on_text(tmpl.substr(literal));
}

class RateLimiter {
 public:
  explicit RateLimiter(std::chrono::milliseconds interval) : interval_(interval) {}

  void Acquire() {
    if (interval_.count() <= 0) return;
    std::unique_lock lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    const auto slot = std::max(now, next_);
    next_ = slot + interval_;
    lock.unlock();
    std::this_thread::sleep_until(slot);
  }

 private:
  std::chrono::milliseconds interval_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point next_{};
};

// Runs fn(i) for i in [0, n) on at most `workers` threads.
template <typename Fn>
void FanOut(std::size_t n, std::size_t workers, Fn fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

constexpr std::string_view kSentimentSystem =
    "Classify the sentiment of each sentence in <<<SENTENCE>>> as 'Positive' or "
    "'Negative'. Give the sentiment classifications without any other preamble text.\n"
    "\n"
    "###EXAMPLE SENTENCE\n"
    "Highly recommend this company for travel plans involving rail.\n"
    "\n"
    "EXAMPLE OUTPUT\n"
    "Positive###";

constexpr std::string_view kTopicSystem =
    "Classify the topic of each news article in <<<NEWS>>> as 'World', 'Sports', "
    "'Business', or 'Sci/Tech'. Give the topic classification without any other "
    "preamble text.\n"
    "\n"
    "###EXAMPLE NEWS\n"
    "Dollar Briefly Hits 4-Wk Low Vs Euro  LONDON (Reuters) - The dollar dipped to a "
    "four-week low  against the euro on Monday before rising slightly on  "
    "profit-taking, but steep oil prices and weak U.S. data  continued to fan worries "
    "about the health of the world's  largest economy.\n"
    "\n"
    "EXAMPLE OUTPUT\n"
    "Business###";

constexpr std::string_view kQaSystem =
    "You are an experienced psychologist. Your task is to listen to the patient's "
    "self-description and  a most likely mental health diagnosis based on their "
    "symptoms.";

constexpr std::string_view kJudgeSystem =
    "You are an experienced psychologist with expertise in mental health diagnoses. "
    "Your task is to assess the quality of a diagnosis based on the patient's "
    "self-description. You will evaluate the diagnosis on four dimensions, each on a "
    "scale from 1 to 5, where 1 indicates poor performance and 5 indicates excellent "
    "performance. After evaluating all four dimensions, please also provide an overall "
    "score (1 to 5) that reflects your holistic judgment of the diagnosis quality.Please "
    "consider the following criteria:\n"
    "\n"
    "Correctness – How clinically accurate is the diagnosis in light of the symptoms "
    "described?\n"
    "\n"
    "Relevance – How well does the diagnosis relate to and reflect the patient's "
    "specific symptoms?\n"
    "\n"
    "Completeness – Does the diagnosis address all key aspects of the patient’s "
    "self-report without overlooking significant information?\n"
    "\n"
    "Readability – Is the diagnosis clearly written, well-structured, and "
    "understandable?";

constexpr std::string_view kJudgeUser =
    "The patient has provided the following self-description. The diagnosis made by the "
    "doctor is as follows: TEXT:<<<{ORIGINAL_TEXT}>>> Diagnosis:<<<{ANSWER}>>> Please "
    "provide a score from 1 to 5 for each of the following dimensions:\n"
    "Correctness, Relevance, Completeness, Readability.\n"
    "Then, based on the four criteria above, provide an Overall Score (1 to 5) that "
    "reflects your general assessment of the diagnosis.";

constexpr std::string_view kPortraitSystem = "You are a patient and are seeing a psychiatrist.";

constexpr std::string_view kPortraitUser =
    "Describe to a psychiatrist in the typical voice of a {AGE}-year-old {GENDER} "
    "{OCCUPATION} with sympthons of {DISORDER} in {LOCATION}. The self-report MUST "
    "reflect the patient's LOCATION and OCCUPATION.100 words or less.";

}  // namespace

std::string BuildChatRequest(std::string_view model, const std::vector<ChatMessage>& messages,
                             double temperature) {
  json msgs = json::array();
  for (const ChatMessage& m : messages) {
    msgs.push_back(json{{"role", m.role}, {"content", m.content}});
  }
  json body;
  body["model"] = model;
  body["messages"] = std::move(msgs);
  body["temperature"] = temperature;
  return body.dump();
}

std::string ParseChatResponse(std::string_view body) {
  try {
    const json j = json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kTransportError,
                std::string("malformed chat completion response: ") + e.what());
  }
}

HttpChatClient::HttpChatClient(ChatClientOptions options) : options_(std::move(options)) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(options_.base_url, m, kUrl)) {
    throw Error(ErrorCode::kConfigError, "base_url must look like http(s)://host[:port][/path]");
  }
  origin_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "";
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  path_ += "/chat/completions";
  if (!options_.api_key_env.empty()) {
    const char* key = std::getenv(options_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw Error(ErrorCode::kConfigError,
                  "environment variable " + options_.api_key_env + " is not set");
    }
    api_key_ = key;
  }
  if (options_.max_retries < 0) {
    throw Error(ErrorCode::kConfigError, "max_retries must be >= 0");
  }
}

std::string HttpChatClient::Complete(const std::vector<ChatMessage>& messages) {
  httplib::Client client(origin_);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(options_.timeout_seconds));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const std::string body = BuildChatRequest(options_.model, messages, options_.temperature);
  std::string last_error;
  auto backoff = options_.initial_backoff;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return ParseChatResponse(res->body);
    last_error = "HTTP " + std::to_string(res->status);
    if (res->status != 429 && res->status < 500) break;
  }
  throw Error(ErrorCode::kTransportError,
              "chat completion to " + origin_ + " failed: " + last_error);
}

std::string_view TaskKindName(TaskKind kind) {
  switch (kind) {
    case TaskKind::kSentiment:
      return "sentiment";
    case TaskKind::kTopic:
      return "topic";
    case TaskKind::kQa:
      return "qa";
    case TaskKind::kQualityJudge:
      return "quality_judge";
    case TaskKind::kPortraitGeneration:
      return "portrait_generation";
  }
  return "sentiment";
}

TaskKind ParseTaskKind(std::string_view name) {
  for (auto k : {TaskKind::kSentiment, TaskKind::kTopic, TaskKind::kQa, TaskKind::kQualityJudge,
                 TaskKind::kPortraitGeneration}) {
    if (TaskKindName(k) == name) return k;
  }
  throw Error(ErrorCode::kConfigError, "unknown task '" + std::string(name) + "'");
}

TaskTemplate TaskTemplate::Default(TaskKind task) {
  TaskTemplate t;
  t.task = task;
  switch (task) {
    case TaskKind::kSentiment:
      t.system_prompt = kSentimentSystem;
      t.user_template = "<<<{TEXT}>>>";
      t.labels = {"Positive", "Negative"};
      break;
    case TaskKind::kTopic:
      t.system_prompt = kTopicSystem;
      t.user_template = "<<<{TEXT}>>>";
      t.labels = {"World", "Sports", "Business", "Sci/Tech"};
      break;
    case TaskKind::kQa:
      t.system_prompt = kQaSystem;
      t.user_template = "<<<{TEXT}>>>\n\nDiagnosis:";
      break;
    case TaskKind::kQualityJudge:
      t.system_prompt = kJudgeSystem;
      t.user_template = kJudgeUser;
      break;
    case TaskKind::kPortraitGeneration:
      t.system_prompt = kPortraitSystem;
      t.user_template = kPortraitUser;
      break;
  }
  return t;
}

std::vector<std::string> TaskTemplate::Placeholders() const {
  std::vector<std::string> names;
  ScanTemplate(
      user_template, [](std::string_view) {},
      [&](std::string_view name) { names.emplace_back(name); });
  return names;
}

std::vector<ChatMessage> TaskTemplate::Render(
    const std::map<std::string, std::string>& values) const {
  const std::vector<std::string> names = Placeholders();
  for (const std::string& n : names) {
    if (std::count(names.begin(), names.end(), n) != 1) {
      throw Error(ErrorCode::kUnboundPlaceholder, "placeholder {" + n + "} appears more than once");
    }
    if (!values.contains(n)) {
      throw Error(ErrorCode::kUnboundPlaceholder, "placeholder {" + n + "} is unbound");
    }
  }
  for (const auto& [key, value] : values) {
    if (std::find(names.begin(), names.end(), key) == names.end()) {
      throw Error(ErrorCode::kUnboundPlaceholder, "value '" + key + "' matches no placeholder");
    }
  }
  std::string user;
  ScanTemplate(
      user_template, [&](std::string_view text) { user += text; },
      [&](std::string_view name) { user += values.at(std::string(name)); });
  return {{"system", system_prompt}, {"user", std::move(user)}};
}

std::optional<std::string> ExtractLabel(std::string_view response,
                                        std::span<const std::string> labels) {
  std::string_view line;
  std::size_t pos = 0;
  while (pos <= response.size()) {
    const std::size_t nl = std::min(response.find('\n', pos), response.size());
    line = Trim(response.substr(pos, nl - pos));
    if (!line.empty()) break;
    pos = nl + 1;
  }
  const std::string_view strip = " \t\"'`#.*:<>";
  while (!line.empty() && strip.find(line.front()) != std::string_view::npos) line.remove_prefix(1);
  while (!line.empty() && strip.find(line.back()) != std::string_view::npos) line.remove_suffix(1);
  for (const std::string& label : labels) {
    if (EqualsIgnoreCase(line, label)) return label;
  }
  return std::nullopt;
}

bool DiagnosisMatches(std::string_view response, std::string_view disorder) {
  const std::string d = ToLower(Trim(disorder));
  return !d.empty() && ToLower(response).find(d) != std::string::npos;
}

UtilityReport RunTask(std::span<const std::string> prompts, std::span<const std::string> labels,
                      const TaskTemplate& task, ChatClient& client, const FanOutOptions& fan_out) {
  if (prompts.size() != labels.size()) {
    throw Error(ErrorCode::kInvalidArgument, "prompts and labels differ in length");
  }
  if (task.task == TaskKind::kQualityJudge || task.task == TaskKind::kPortraitGeneration) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(TaskKindName(task.task)) + " is not a scored task");
  }
  UtilityReport report;
  report.total = prompts.size();
  report.transcripts.resize(prompts.size());
  RateLimiter limiter(fan_out.min_interval);

  FanOut(prompts.size(), fan_out.max_concurrency, [&](std::size_t i) {
    Transcript& t = report.transcripts[i];
    t.index = i;
    t.request = task.Render({{"TEXT", prompts[i]}});
    limiter.Acquire();
    try {
      t.response = client.Complete(t.request);
    } catch (const std::exception& e) {
      t.error = e.what();
      return;
    }
    if (task.task == TaskKind::kQa) {
      t.correct = DiagnosisMatches(t.response, labels[i]);
    } else {
      const auto predicted = ExtractLabel(t.response, task.labels);
      t.correct = predicted && EqualsIgnoreCase(*predicted, labels[i]);
    }
  });

  for (const Transcript& t : report.transcripts) {
    if (!t.error.empty()) {
      ++report.failed;
    } else if (t.correct) {
      ++report.correct;
    }
  }
  if (report.total > 0 && 2 * report.failed > report.total) {
    throw Error(ErrorCode::kTransportError, std::to_string(report.failed) + " of " +
                                                std::to_string(report.total) + " requests failed");
  }
  const std::size_t answered = report.total - report.failed;
  report.accuracy =
      answered == 0 ? 0.0 : static_cast<double>(report.correct) / static_cast<double>(answered);
  return report;
}

QualityJudgment ParseJudgment(std::string_view response) {
  const std::string text(response);
  auto labelled = [&](const char* name) -> std::optional<int> {
    const std::regex re(std::string(name) + R"([^0-9\n]{0,40}?\b([1-5])\b)", std::regex::icase);
    std::smatch m;
    if (std::regex_search(text, m, re)) return std::stoi(m[1].str());
    return std::nullopt;
  };

  QualityJudgment j;
  std::optional<int> overall = labelled("overall");
  std::optional<int> parts[4] = {labelled("correctness"), labelled("relevance"),
                                 labelled("completeness"), labelled("readability")};

  const bool all_labelled = overall && parts[0] && parts[1] && parts[2] && parts[3];
  if (!all_labelled) {
    // Fall back to the first five standalone scores in reading order, with an
    // explicitly labelled overall taking precedence for the last one.
    static const std::regex kScore(R"((^|[^0-9])([1-5])(?![0-9]))");
    std::vector<int> scores;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), kScore);
         it != std::sregex_iterator(); ++it) {
      scores.push_back(std::stoi((*it)[2].str()));
    }
    if (scores.size() < 4 || (!overall && scores.size() < 5)) {
      throw Error(ErrorCode::kUnparseableJudgment,
                  "judge reply does not contain five scores: '" + text.substr(0, 200) + "'");
    }
    for (int i = 0; i < 4; ++i) {
      if (!parts[i]) parts[i] = scores[static_cast<std::size_t>(i)];
    }
    if (!overall) overall = scores[4];
  }
  j.correctness = *parts[0];
  j.relevance = *parts[1];
  j.completeness = *parts[2];
  j.readability = *parts[3];
  j.overall = *overall;
  return j;
}

QualityJudgment JudgeQuality(std::string_view original, std::string_view answer,
                             const TaskTemplate& judge, ChatClient& client) {
  const auto request =
      judge.Render({{"ORIGINAL_TEXT", std::string(original)}, {"ANSWER", std::string(answer)}});
  for (int attempt = 0;; ++attempt) {
    const std::string reply = client.Complete(request);
    try {
      return ParseJudgment(reply);
    } catch (const Error&) {
      if (attempt >= 1) throw;
    }
  }
}

QualityReport JudgeQualityBatch(std::span<const std::string> originals,
                                std::span<const std::string> answers, const TaskTemplate& judge,
                                ChatClient& client) {
  if (originals.size() != answers.size()) {
    throw Error(ErrorCode::kInvalidArgument, "originals and answers differ in length");
  }
  QualityReport report;
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < originals.size(); ++i) {
    try {
      report.judgments.push_back(JudgeQuality(originals[i], answers[i], judge, client));
      sum += report.judgments.back()->overall;
      ++n;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnparseableJudgment) throw;
      report.judgments.push_back(std::nullopt);
      ++report.unparseable;
    }
  }
  report.mean_overall = n == 0 ? 0.0 : sum / static_cast<double>(n);
  return report;
}

}  // namespace promptveil
