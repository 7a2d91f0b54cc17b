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

#include "mlmrc/metrics.h"

#include <cstdio>
#include <set>
#include <sstream>

#include "mlmrc/error.h"
#include "mlmrc/text.h"

namespace mlmrc {

namespace {

std::vector<std::string_view> SplitSpaces(std::string_view s) {
  std::vector<std::string_view> out;
  for (const auto& [b, e] : text::SplitWhitespace(s)) out.push_back(s.substr(b, e - b));
  return out;
}

double TokenF1(std::string_view prediction, std::string_view gold) {
  const auto pred_tokens = SplitSpaces(prediction);
  const auto gold_tokens = SplitSpaces(gold);
  if (pred_tokens.empty() || gold_tokens.empty()) {
    return pred_tokens.empty() && gold_tokens.empty() ? 1.0 : 0.0;
  }
  std::map<std::string_view, int> counts;
  for (auto t : gold_tokens) ++counts[t];
  int overlap = 0;
  for (auto t : pred_tokens) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / pred_tokens.size();
  const double recall = static_cast<double>(overlap) / gold_tokens.size();
  return 2.0 * precision * recall / (precision + recall);
}

void RequireGolds(std::span<const std::string> golds) {
  if (golds.empty()) throw ValidationError("no gold answers to score against");
}

std::string Percent(double x, bool sign) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), sign ? "%+.1f" : "%.1f", 100.0 * x);
  return buf;
}

void Accumulate(MetricCell& cell, double em, double f1) {
  cell.em += em;
  cell.f1 += f1;
  ++cell.n;
}

void Finish(MetricCell& cell) {
  if (cell.n == 0) return;
  cell.em /= static_cast<double>(cell.n);
  cell.f1 /= static_cast<double>(cell.n);
}

}  // namespace

void to_json(nlohmann::json& j, const MetricCell& cell) {
  j = nlohmann::json{{"em", cell.em}, {"f1", cell.f1}, {"n", cell.n}};
}

void from_json(const nlohmann::json& j, MetricCell& cell) {
  cell.em = j.at("em").get<double>();
  cell.f1 = j.at("f1").get<double>();
  cell.n = j.at("n").get<size_t>();
}

std::string NormalizationPolicy::Normalize(std::string_view s,
                                           const LanguageCode& lang) const {
  std::string current;
  current.reserve(s.size());
  size_t pos = 0;
  while (pos < s.size()) {
    char32_t cp = text::DecodeNext(s, pos);
    if (strip_punctuation && text::IsPunctuation(cp)) continue;
    if (lowercase) cp = text::FoldCase(cp);
    text::AppendUtf8(cp, current);
  }

  if (auto it = articles.find(lang); it != articles.end() && !it->second.empty()) {
    const std::set<std::string_view> drop(it->second.begin(), it->second.end());
    std::string kept;
    kept.reserve(current.size());
    size_t copied = 0;
    for (const auto& [b, e] : text::SplitWhitespace(current)) {
      kept.append(current, copied, b - copied);
      const std::string_view word(current.data() + b, e - b);
      if (drop.contains(word)) {
        kept.push_back(' ');
      } else {
        kept.append(word);
      }
      copied = e;
    }
    kept.append(current, copied);
    current = std::move(kept);
  }

  if (!collapse_whitespace) return current;
  std::string out;
  for (auto word : SplitSpaces(current)) {
    if (!out.empty()) out.push_back(' ');
    out.append(word);
  }
  return out;
}

void to_json(nlohmann::json& j, const NormalizationPolicy& policy) {
  nlohmann::json articles = nlohmann::json::object();
  for (const auto& [lang, words] : policy.articles) articles[lang.str()] = words;
  j = nlohmann::json{{"lowercase", policy.lowercase},
                     {"strip_punctuation", policy.strip_punctuation},
                     {"collapse_whitespace", policy.collapse_whitespace},
                     {"articles", articles}};
}

void from_json(const nlohmann::json& j, NormalizationPolicy& policy) {
  policy.lowercase = j.value("lowercase", policy.lowercase);
  policy.strip_punctuation = j.value("strip_punctuation", policy.strip_punctuation);
  policy.collapse_whitespace =
      j.value("collapse_whitespace", policy.collapse_whitespace);
  if (auto it = j.find("articles"); it != j.end()) {
    policy.articles.clear();
    for (const auto& [lang, words] : it->items()) {
      policy.articles[LanguageCode(lang)] = words.get<std::vector<std::string>>();
    }
  }
}

int ExactMatch(std::string_view prediction, std::span<const std::string> golds,
               const NormalizationPolicy& policy, const LanguageCode& lang) {
  RequireGolds(golds);
  const std::string pred = policy.Normalize(prediction, lang);
  for (const auto& gold : golds) {
    if (policy.Normalize(gold, lang) == pred) return 1;
  }
  return 0;
}

double F1(std::string_view prediction, std::span<const std::string> golds,
          const NormalizationPolicy& policy, const LanguageCode& lang) {
  RequireGolds(golds);
  const std::string pred = policy.Normalize(prediction, lang);
  double best = 0.0;
  for (const auto& gold : golds) {
    best = std::max(best, TokenF1(pred, policy.Normalize(gold, lang)));
  }
  return best;
}

void to_json(nlohmann::json& j, const EvalReport& report) {
  nlohmann::json langs = nlohmann::json::object();
  for (const auto& [lang, cell] : report.per_language) langs[lang.str()] = cell;
  nlohmann::json types = nlohmann::json::object();
  for (const auto& [type, cell] : report.per_answer_type) types[type] = cell;
  nlohmann::json gaps = nlohmann::json::object();
  for (const auto& [lang, gap] : report.gaps) {
    gaps[lang.str()] = {{"em", gap.em}, {"f1", gap.f1}};
  }
  j = nlohmann::json{{"pivot", report.pivot},
                     {"overall", report.overall},
                     {"per_language", langs},
                     {"per_answer_type", types},
                     {"gaps", gaps},
                     {"missing_predictions", report.missing_predictions}};
}

void from_json(const nlohmann::json& j, EvalReport& report) {
  report.pivot = j.at("pivot").get<LanguageCode>();
  report.overall = j.at("overall").get<MetricCell>();
  report.per_language.clear();
  for (const auto& [lang, cell] : j.at("per_language").items()) {
    report.per_language[LanguageCode(lang)] = cell.get<MetricCell>();
  }
  report.per_answer_type.clear();
  for (const auto& [type, cell] : j.at("per_answer_type").items()) {
    report.per_answer_type[type] = cell.get<MetricCell>();
  }
  report.missing_predictions = j.value("missing_predictions", size_t{0});
  ComputeGaps(report);
}

void ComputeGaps(EvalReport& report) {
  report.gaps.clear();
  auto pivot = report.per_language.find(report.pivot);
  if (pivot == report.per_language.end() || pivot->second.n == 0) return;
  for (const auto& [lang, cell] : report.per_language) {
    report.gaps[lang] = MetricGap{cell.em - pivot->second.em,
                                  cell.f1 - pivot->second.f1};
  }
}

EvalReport Evaluate(const std::unordered_map<std::string, std::string>& predictions,
                    std::span<const QAInstance> dataset,
                    const NormalizationPolicy& policy, const LanguageCode& pivot) {
  EvalReport report;
  report.pivot = pivot;
  std::vector<std::string> golds;
  for (const auto& instance : dataset) {
    double em = 0.0;
    double f1 = 0.0;
    if (auto it = predictions.find(instance.id); it != predictions.end()) {
      golds.clear();
      for (const auto& answer : instance.answers) golds.push_back(answer.text);
      em = ExactMatch(it->second, golds, policy, instance.lang);
      f1 = F1(it->second, golds, policy, instance.lang);
    } else {
      ++report.missing_predictions;
    }
    Accumulate(report.overall, em, f1);
    Accumulate(report.per_language[instance.lang], em, f1);
    if (instance.answer_type) {
      Accumulate(report.per_answer_type[*instance.answer_type], em, f1);
    }
  }
  Finish(report.overall);
  for (auto& [lang, cell] : report.per_language) Finish(cell);
  for (auto& [type, cell] : report.per_answer_type) Finish(cell);
  ComputeGaps(report);
  return report;
}

std::unordered_map<std::string, std::string> LoadPredictions(
    const std::filesystem::path& path) {
  std::unordered_map<std::string, std::string> out;
  ReadJsonl(path, [&](const nlohmann::json& row, size_t) {
    auto id = row.at("id").get<std::string>();
    if (!out.emplace(id, row.at("text").get<std::string>()).second) {
      throw ValidationError("duplicate prediction for id '" + id + "'");
    }
  });
  return out;
}

void SavePredictions(
    const std::vector<std::pair<std::string, std::string>>& predictions,
    const std::filesystem::path& path) {
  std::vector<nlohmann::json> rows;
  rows.reserve(predictions.size());
  for (const auto& [id, text] : predictions) {
    rows.push_back({{"id", id}, {"text", text}});
  }
  WriteJsonl(path, rows);
}

Comparison CompareRuns(
    std::span<const std::pair<std::string, EvalReport>> reports) {
  Comparison out;
  for (const auto& [label, report] : reports) out.labels.push_back(label);

  const auto add_section = [&](const std::string& section, auto key_of,
                               auto cells_of) {
    std::set<std::string> keys;
    for (const auto& [label, report] : reports) {
      for (const auto& [key, cell] : cells_of(report)) keys.insert(key_of(key));
    }
    for (const auto& key : keys) {
      ComparisonRow row{section, key, {}, {}};
      for (const auto& [label, report] : reports) {
        std::optional<MetricCell> cell;
        for (const auto& [k, c] : cells_of(report)) {
          if (key_of(k) == key) cell = c;
        }
        row.cells.push_back(cell);
      }
      for (size_t r = 1; r < row.cells.size(); ++r) {
        if (row.cells[0] && row.cells[r]) {
          row.deltas.push_back(MetricGap{row.cells[r]->em - row.cells[0]->em,
                                         row.cells[r]->f1 - row.cells[0]->f1});
        } else {
          row.deltas.push_back(std::nullopt);
        }
      }
      out.rows.push_back(std::move(row));
    }
  };
  add_section(
      "language", [](const LanguageCode& k) { return k.str(); },
      [](const EvalReport& r) -> const auto& { return r.per_language; });
  add_section(
      "answer_type", [](const std::string& k) { return k; },
      [](const EvalReport& r) -> const auto& { return r.per_answer_type; });
  return out;
}

std::string Comparison::ToMarkdown() const {
  std::ostringstream md;
  md << "| section | key |";
  for (const auto& label : labels) md << ' ' << label << " EM | " << label << " F1 |";
  for (size_t r = 1; r < labels.size(); ++r) {
    md << " Δ" << labels[r] << " EM | Δ" << labels[r] << " F1 |";
  }
  md << "\n|---|---|";
  const size_t columns = labels.empty() ? 0 : labels.size() * 4 - 2;
  for (size_t c = 0; c < columns; ++c) {
    md << "---|";
  }
  md << '\n';
  for (const auto& row : rows) {
    md << "| " << row.section << " | " << row.key << " |";
    for (const auto& cell : row.cells) {
      if (cell) {
        md << ' ' << Percent(cell->em, false) << " | " << Percent(cell->f1, false)
           << " |";
      } else {
        md << "  |  |";
      }
    }
    for (const auto& delta : row.deltas) {
      if (delta) {
        md << ' ' << Percent(delta->em, true) << " | " << Percent(delta->f1, true)
           << " |";
      } else {
        md << "  |  |";
      }
    }
    md << '\n';
  }
  return md.str();
}

}  // namespace mlmrc
