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

// Task-utility measurement against a remote chat-completion endpoint.

#ifndef PROMPTVEIL_EVALUATION_H_
#define PROMPTVEIL_EVALUATION_H_

#include <chrono>
#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptveil/core.h"

namespace promptveil {

struct ChatMessage {
  std::string role;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;

  // Content of the first choice. Throws Error(kTransportError) on failure.
  virtual std::string Complete(const std::vector<ChatMessage>& messages) = 0;
};

struct ChatClientOptions {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o-mini";
  // Name of the environment variable holding the API key; empty sends no
  // Authorization header.
  std::string api_key_env = "OPENAI_API_KEY";
  int max_retries = 3;
  double timeout_seconds = 60.0;
  double temperature = 0.0;
  std::chrono::milliseconds initial_backoff{500};
};

// {"model":...,"messages":[{"role":...,"content":...},...],"temperature":...}
std::string BuildChatRequest(std::string_view model, const std::vector<ChatMessage>& messages,
                             double temperature);
// choices[0].message.content; throws Error(kTransportError) when absent.
std::string ParseChatResponse(std::string_view body);

// POSTs to <base_url>/chat/completions. Retries connection failures, 429 and
// 5xx with exponential backoff. The key is read once from the environment and
// never appears in errors or logs.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(ChatClientOptions options);

  std::string Complete(const std::vector<ChatMessage>& messages) override;
  const ChatClientOptions& options() const { return options_; }

 private:
  ChatClientOptions options_;
  std::string origin_;
  std::string path_;
  std::string api_key_;
};

enum class TaskKind { kSentiment, kTopic, kQa, kQualityJudge, kPortraitGeneration };

std::string_view TaskKindName(TaskKind kind);
TaskKind ParseTaskKind(std::string_view name);

// A system prompt plus a user template with {NAME} placeholders. Each
// placeholder appears exactly once; rendering is a single pass so values that
// contain braces are never re-expanded.
struct TaskTemplate {
  TaskKind task = TaskKind::kSentiment;
  std::string system_prompt;
  std::string user_template;
  // Closed label set for classification tasks.
  std::vector<std::string> labels;

  static TaskTemplate Default(TaskKind task);

  std::vector<std::string> Placeholders() const;
  // Throws Error(kUnboundPlaceholder) when a placeholder has no value or a
  // value names no placeholder.
  std::vector<ChatMessage> Render(const std::map<std::string, std::string>& values) const;
};

// Trimmed first non-empty line matched (case-insensitively, surrounding quotes
// and punctuation stripped) against the closed label set.
std::optional<std::string> ExtractLabel(std::string_view response,
                                        std::span<const std::string> labels);
bool DiagnosisMatches(std::string_view response, std::string_view disorder);

struct Transcript {
  std::size_t index = 0;
  std::vector<ChatMessage> request;
  std::string response;
  std::string error;
  bool correct = false;
};

struct UtilityReport {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::size_t failed = 0;
  std::vector<Transcript> transcripts;
};

// Bounded fan-out with a minimum spacing between request starts.
struct FanOutOptions {
  std::size_t max_concurrency = 1;
  std::chrono::milliseconds min_interval{0};
};

// Renders each prompt as TEXT, sends it, and scores the reply against its
// label. Failed calls are excluded from the denominator; more than half
// failing aborts with Error(kTransportError).
UtilityReport RunTask(std::span<const std::string> prompts, std::span<const std::string> labels,
                      const TaskTemplate& task, ChatClient& client,
                      const FanOutOptions& fan_out = {});

struct QualityJudgment {
  int correctness = 0;
  int relevance = 0;
  int completeness = 0;
  int readability = 0;
  int overall = 0;
};

// Reads the four criterion scores and the overall score (each 1-5).
// Throws Error(kUnparseableJudgment).
QualityJudgment ParseJudgment(std::string_view response);

// Asks the judge once and retries once on an unparseable reply.
QualityJudgment JudgeQuality(std::string_view original, std::string_view answer,
                             const TaskTemplate& judge, ChatClient& client);

struct QualityReport {
  std::vector<std::optional<QualityJudgment>> judgments;
  double mean_overall = 0.0;
  std::size_t unparseable = 0;
};

QualityReport JudgeQualityBatch(std::span<const std::string> originals,
                                std::span<const std::string> answers, const TaskTemplate& judge,
                                ChatClient& client);

}  // namespace promptveil

#endif  // PROMPTVEIL_EVALUATION_H_
