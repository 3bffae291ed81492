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

// Line-delimited JSON records for results and reports. Schemas are described
// in docs/records.md.

#ifndef PROMPTVEIL_RECORDS_H_
#define PROMPTVEIL_RECORDS_H_

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "promptveil/attacks.h"
#include "promptveil/evaluation.h"
#include "promptveil/obfuscator.h"

namespace promptveil {

// Timing is left out unless asked for so that records stay byte-stable.
nlohmann::ordered_json ResultToJson(const ObfuscationResult& result, bool include_timing = false);
ObfuscationResult ResultFromJson(const nlohmann::json& j);

// One line per batch item: {"index", "status": "ok", "result"} or
// {"index", "status": "error", "stage", "error"}.
void WriteResultRecords(std::ostream& out, std::span<const BatchItem> items,
                        bool include_timing = false);

struct ResultRecords {
  std::vector<ObfuscationResult> results;
  // Batch index of each entry of `results`.
  std::vector<std::size_t> indices;
  std::size_t failed = 0;
};

// Throws Error(kParseError) naming the line for malformed records.
ResultRecords ReadResultRecords(const std::string& path);

nlohmann::ordered_json AttackReportToJson(const AttackReport& report);
nlohmann::ordered_json UtilityReportToJson(const UtilityReport& report, TaskKind task);
nlohmann::ordered_json QualityReportToJson(const QualityReport& report);

}  // namespace promptveil

#endif  // PROMPTVEIL_RECORDS_H_
