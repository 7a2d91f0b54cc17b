// Copyright 2026 The mlmrc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MLMRC_METRICS_H_
#define MLMRC_METRICS_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "mlmrc/corpus.h"

namespace mlmrc {

// SQuAD-style answer normalization. Steps run in the reference scorer's
// order: lowercase, drop punctuation, drop articles, collapse whitespace.
struct NormalizationPolicy {
  bool lowercase = true;
  bool strip_punctuation = true;
  bool collapse_whitespace = true;
  // Per-language article tokens; languages not listed have none.
  std::map<LanguageCode, std::vector<std::string>> articles = {
      {LanguageCode("en"), {"a", "an", "the"}}};

  std::string Normalize(std::string_view s, const LanguageCode& lang) const;
};

void to_json(nlohmann::json& j, const NormalizationPolicy& policy);
void from_json(const nlohmann::json& j, NormalizationPolicy& policy);

// 1 iff the normalized prediction equals some normalized gold. Throws
// ValidationError when `golds` is empty.
int ExactMatch(std::string_view prediction, std::span<const std::string> golds,
               const NormalizationPolicy& policy, const LanguageCode& lang);

// Bag-of-words F1 with multiset overlap, maximized over golds.
double F1(std::string_view prediction, std::span<const std::string> golds,
          const NormalizationPolicy& policy, const LanguageCode& lang);

struct MetricCell {
  double em = 0.0;
  double f1 = 0.0;
  size_t n = 0;

  friend bool operator==(const MetricCell&, const MetricCell&) = default;
};

void to_json(nlohmann::json& j, const MetricCell& cell);
void from_json(const nlohmann::json& j, MetricCell& cell);

struct MetricGap {
  double em = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  LanguageCode pivot{"en"};
  MetricCell overall;
  std::map<LanguageCode, MetricCell> per_language;
  std::map<std::string, MetricCell> per_answer_type;
  // metric(lang) - metric(pivot); empty when the pivot has no instances.
  std::map<LanguageCode, MetricGap> gaps;
  size_t missing_predictions = 0;
};

void to_json(nlohmann::json& j, const EvalReport& report);
void from_json(const nlohmann::json& j, EvalReport& report);

// Recomputes gaps from per_language against report.pivot.
void ComputeGaps(EvalReport& report);

// Scores every dataset instance. Missing predictions count as EM 0, F1 0.
// Per-type slices use only instances with an answer_type. Gold strings are
// the texts of every answer of an instance.
EvalReport Evaluate(const std::unordered_map<std::string, std::string>& predictions,
                    std::span<const QAInstance> dataset,
                    const NormalizationPolicy& policy,
                    const LanguageCode& pivot = LanguageCode("en"));

// Prediction JSONL: {"id": str, "text": str}.
std::unordered_map<std::string, std::string> LoadPredictions(
    const std::filesystem::path& path);
void SavePredictions(
    const std::vector<std::pair<std::string, std::string>>& predictions,
    const std::filesystem::path& path);

struct ComparisonRow {
  std::string section;  // "language" or "answer_type"
  std::string key;
  std::vector<std::optional<MetricCell>> cells;  // one per run
  // Delta vs run 0 for runs 1..k-1; nullopt if either cell is missing.
  std::vector<std::optional<MetricGap>> deltas;
};

struct Comparison {
  std::vector<std::string> labels;
  std::vector<ComparisonRow> rows;

  // Markdown table with EM/F1 in percent (one decimal) and signed deltas.
  std::string ToMarkdown() const;
};

// Side-by-side per-language and per-answer-type metrics over the union of
// keys, with deltas against the first report.
Comparison CompareRuns(
    std::span<const std::pair<std::string, EvalReport>> reports);

}  // namespace mlmrc

#endif  // MLMRC_METRICS_H_
