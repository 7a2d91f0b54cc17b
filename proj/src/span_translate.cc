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

#include "mlmrc/span_translate.h"

#include <fstream>
#include <mutex>

#include "mlmrc/error.h"
#include "mlmrc/parallel.h"
#include "mlmrc/text.h"

namespace mlmrc {

namespace {

enum class RunKind { kSpace, kPunct, kWord };

RunKind Classify(char32_t cp) {
  if (text::IsWhitespace(cp)) return RunKind::kSpace;
  if (text::IsPunctuation(cp)) return RunKind::kPunct;
  return RunKind::kWord;
}

// Positions of every non-overlapping occurrence of `needle`.
std::vector<size_t> FindAll(std::string_view haystack, std::string_view needle) {
  std::vector<size_t> hits;
  for (size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    hits.push_back(pos);
  }
  return hits;
}

// Byte length of the whitespace prefix / suffix of `s`.
size_t LeadingSpace(std::string_view s) {
  size_t pos = 0;
  while (pos < s.size()) {
    size_t next = pos;
    if (!text::IsWhitespace(text::DecodeNext(s, next))) break;
    pos = next;
  }
  return pos;
}

size_t TrailingSpace(std::string_view s) {
  size_t len = 0;
  while (len < s.size()) {
    // Step back to the start of the previous character.
    size_t start = s.size() - len - 1;
    while (start > 0 && !text::IsCharBoundary(s, start)) --start;
    size_t pos = start;
    if (!text::IsWhitespace(text::DecodeNext(s, pos))) break;
    len = s.size() - start;
  }
  return len;
}

}  // namespace

void MarkerScheme::Validate() const {
  if (open.empty() || close.empty()) {
    throw ValidationError("marker strings must be non-empty");
  }
  if (open == close) throw ValidationError("open and close markers are equal");
  if (open.find(close) != std::string::npos ||
      close.find(open) != std::string::npos) {
    throw ValidationError("one marker is a substring of the other");
  }
}

std::string IdentityTranslator::Translate(std::string_view text,
                                          const LanguageCode&,
                                          const LanguageCode&) const {
  return std::string(text);
}

DictionaryTranslator::DictionaryTranslator(
    std::map<std::string, std::string> lexicon)
    : lexicon_(lexicon.begin(), lexicon.end()) {
  for (const auto& [key, value] : lexicon_) {
    if (key.empty()) throw ValidationError("lexicon has an empty source entry");
    max_key_length_ = std::max(max_key_length_, key.size());
  }
}

DictionaryTranslator DictionaryTranslator::FromTsv(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open lexicon " + path.string());
  std::map<std::string, std::string> lexicon;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 'source<TAB>target'");
    }
    lexicon.emplace(line.substr(0, tab), line.substr(tab + 1));
  }
  return DictionaryTranslator(std::move(lexicon));
}

std::string DictionaryTranslator::LookupWord(std::string_view word) const {
  if (auto it = lexicon_.find(word); it != lexicon_.end()) return it->second;
  const std::string folded = text::FoldCase(word);
  if (auto it = lexicon_.find(folded); it != lexicon_.end()) return it->second;
  return std::string(word);
}

std::string DictionaryTranslator::Translate(std::string_view text,
                                            const LanguageCode&,
                                            const LanguageCode&) const {
  std::string out;
  out.reserve(text.size());
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = pos;
    const RunKind kind = Classify(text::DecodeNext(text, end));
    while (end < text.size()) {
      size_t next = end;
      if (Classify(text::DecodeNext(text, next)) != kind) break;
      end = next;
    }
    const std::string_view run = text.substr(pos, end - pos);
    if (kind == RunKind::kSpace) {
      out.append(run);
    } else if (kind == RunKind::kWord) {
      out.append(LookupWord(run));
    } else {
      // Punctuation: longest lexicon key at each position, else one char.
      size_t p = 0;
      while (p < run.size()) {
        bool matched = false;
        const size_t longest = std::min(max_key_length_, run.size() - p);
        for (size_t len = longest; len > 0; --len) {
          if (!text::IsCharBoundary(run, p + len)) continue;
          auto it = lexicon_.find(run.substr(p, len));
          if (it != lexicon_.end()) {
            out.append(it->second);
            p += len;
            matched = true;
            break;
          }
        }
        if (!matched) {
          size_t next = p;
          text::DecodeNext(run, next);
          out.append(run.substr(p, next - p));
          p = next;
        }
      }
    }
    pos = end;
  }
  return out;
}

std::string_view ToString(SkipReason reason) {
  switch (reason) {
    case SkipReason::kMarkerCollision:
      return "marker-collision";
    case SkipReason::kMarkersMissing:
      return "markers-missing";
    case SkipReason::kMarkersReordered:
      return "markers-reordered";
    case SkipReason::kMarkersDuplicated:
      return "markers-duplicated";
    case SkipReason::kEmptyAnswer:
      return "empty-answer";
  }
  return "unknown";
}

TranslationStats TranslationStats::FromCounts(size_t source_count,
                                              size_t kept_count) {
  if (kept_count > source_count) {
    throw ValidationError("kept count exceeds source count");
  }
  TranslationStats stats;
  stats.source_count = source_count;
  stats.kept_count = kept_count;
  stats.skip_ratio =
      source_count == 0
          ? 0.0
          : static_cast<double>(source_count - kept_count) / source_count;
  return stats;
}

void TranslationStats::Add(const TranslateResult& result) {
  ++source_count;
  if (const auto* kept = std::get_if<TranslatedInstance>(&result)) {
    ++kept_count;
    if (kept->trimmed) ++trimmed_count;
  } else {
    ++skipped[static_cast<size_t>(std::get<Skip>(result).reason)];
  }
  skip_ratio = FromCounts(source_count, kept_count).skip_ratio;
}

void TranslationStats::Merge(const TranslationStats& other) {
  source_count += other.source_count;
  kept_count += other.kept_count;
  trimmed_count += other.trimmed_count;
  for (size_t i = 0; i < kSkipReasonCount; ++i) skipped[i] += other.skipped[i];
  skip_ratio = FromCounts(source_count, kept_count).skip_ratio;
}

size_t TranslationStats::skipped_total() const {
  size_t total = 0;
  for (size_t n : skipped) total += n;
  return total;
}

void to_json(nlohmann::json& j, const TranslationStats& stats) {
  nlohmann::json reasons = nlohmann::json::object();
  for (size_t i = 0; i < kSkipReasonCount; ++i) {
    reasons[std::string(ToString(static_cast<SkipReason>(i)))] =
        stats.skipped[i];
  }
  j = nlohmann::json{{"source_count", stats.source_count},
                     {"kept_count", stats.kept_count},
                     {"skip_ratio", stats.skip_ratio},
                     {"skipped", reasons},
                     {"trimmed_count", stats.trimmed_count}};
}

std::optional<std::string> WrapAnswer(const QAInstance& instance,
                                      const MarkerScheme& scheme) {
  const auto& passage = instance.passage;
  if (passage.find(scheme.open) != std::string::npos ||
      passage.find(scheme.close) != std::string::npos) {
    return std::nullopt;
  }
  const AnswerSpan& span = instance.answers.front();
  std::string marked;
  marked.reserve(passage.size() + scheme.open.size() + scheme.close.size());
  marked.append(passage, 0, span.start);
  marked.append(scheme.open);
  marked.append(passage, span.start, span.end - span.start);
  marked.append(scheme.close);
  marked.append(passage, span.end);
  return marked;
}

TranslateResult ExtractMarkedSpan(std::string_view marked_passage,
                                  std::string_view source_answer,
                                  const MarkerScheme& scheme) {
  const auto opens = FindAll(marked_passage, scheme.open);
  const auto closes = FindAll(marked_passage, scheme.close);
  if (opens.empty() || closes.empty()) {
    return Skip{SkipReason::kMarkersMissing};
  }
  if (opens.size() > 1 || closes.size() > 1) {
    return Skip{SkipReason::kMarkersDuplicated};
  }
  const size_t open_at = opens.front();
  const size_t close_at = closes.front();
  if (close_at < open_at + scheme.open.size()) {
    return Skip{SkipReason::kMarkersReordered};
  }

  std::string_view before = marked_passage.substr(0, open_at);
  const size_t inner_begin = open_at + scheme.open.size();
  std::string_view inner =
      marked_passage.substr(inner_begin, close_at - inner_begin);
  std::string_view after =
      marked_passage.substr(close_at + scheme.close.size());

  size_t lead = 0;
  size_t trail = 0;
  if (LeadingSpace(source_answer) == 0) lead = LeadingSpace(inner);
  if (lead < inner.size() && TrailingSpace(source_answer) == 0) {
    trail = TrailingSpace(inner.substr(lead));
  }
  if (lead + trail >= inner.size()) return Skip{SkipReason::kEmptyAnswer};

  TranslatedInstance out;
  out.trimmed = lead > 0 || trail > 0;
  std::string& passage = out.instance.passage;
  passage.reserve(before.size() + inner.size() + after.size());
  passage.append(before);
  passage.append(inner);
  passage.append(after);
  // Removing the markers can splice a new marker out of adjacent text.
  if (passage.find(scheme.open) != std::string::npos ||
      passage.find(scheme.close) != std::string::npos) {
    return Skip{SkipReason::kMarkersDuplicated};
  }
  AnswerSpan span;
  span.start = before.size() + lead;
  span.end = before.size() + inner.size() - trail;
  span.text = passage.substr(span.start, span.end - span.start);
  out.instance.answers.push_back(std::move(span));
  return out;
}

TranslateResult TranslateInstance(const QAInstance& instance,
                                  const LanguageCode& target,
                                  const Translator& translator,
                                  const MarkerScheme& scheme) {
  if (target == instance.lang) {
    throw ValidationError("instance '" + instance.id +
                          "': target language equals source language");
  }
  const auto marked = WrapAnswer(instance, scheme);
  if (!marked) return Skip{SkipReason::kMarkerCollision};

  const std::string translated =
      translator.Translate(*marked, instance.lang, target);
  auto result =
      ExtractMarkedSpan(translated, instance.answers.front().text, scheme);
  if (auto* kept = std::get_if<TranslatedInstance>(&result)) {
    QAInstance& out = kept->instance;
    out.id = instance.id;
    out.lang = target;
    out.question = translator.Translate(instance.question, instance.lang, target);
    out.answer_type = instance.answer_type;
    Validate(out);
  }
  return result;
}

TranslatedDataset TranslateDataset(std::span<const QAInstance> instances,
                                   const LanguageCode& target,
                                   const Translator& translator,
                                   const MarkerScheme& scheme, int jobs) {
  scheme.Validate();
  for (const auto& instance : instances) {
    if (instance.lang != instances.front().lang) {
      throw ValidationError("mixed source languages: '" +
                            instances.front().lang.str() + "' and '" +
                            instance.lang.str() + "'");
    }
  }
  if (!instances.empty() && instances.front().lang == target) {
    throw ValidationError("target language equals source language");
  }

  std::vector<std::optional<TranslateResult>> results(instances.size());
  std::mutex serial;
  const bool concurrent = translator.concurrent();
  ParallelFor(instances.size(), jobs, [&](size_t i) {
    if (concurrent) {
      results[i] = TranslateInstance(instances[i], target, translator, scheme);
    } else {
      std::lock_guard lock(serial);
      results[i] = TranslateInstance(instances[i], target, translator, scheme);
    }
  });

  TranslatedDataset out;
  for (auto& result : results) {
    out.stats.Add(*result);
    if (auto* kept = std::get_if<TranslatedInstance>(&*result)) {
      out.instances.push_back(std::move(kept->instance));
    }
  }
  return out;
}

}  // namespace mlmrc
