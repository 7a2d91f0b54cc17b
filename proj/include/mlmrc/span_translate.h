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

#ifndef MLMRC_SPAN_TRANSLATE_H_
#define MLMRC_SPAN_TRANSLATE_H_

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "mlmrc/corpus.h"

namespace mlmrc {

// Answer markers placed around the gold span before translation.
struct MarkerScheme {
  std::string open = "([";
  std::string close = "])";

  // Both non-empty, distinct, and neither contains the other.
  void Validate() const;
};

// Maps text between languages. Implementations must be deterministic for
// a fixed configuration.
class Translator {
 public:
  virtual ~Translator() = default;
  virtual std::string Translate(std::string_view text,
                                const LanguageCode& source,
                                const LanguageCode& target) const = 0;
  // False if calls must be serialized.
  virtual bool concurrent() const { return true; }
};

// Returns the input unchanged.
class IdentityTranslator final : public Translator {
 public:
  std::string Translate(std::string_view text, const LanguageCode& source,
                        const LanguageCode& target) const override;
};

// Token-by-token lexicon lookup with no reordering. Text is split into
// whitespace runs (kept as is), word runs (looked up whole) and
// punctuation runs (matched greedily against the longest lexicon key).
// Unknown pieces pass through; an empty target deletes the piece.
class DictionaryTranslator final : public Translator {
 public:
  explicit DictionaryTranslator(std::map<std::string, std::string> lexicon);
  // TSV: source TAB target, one entry per line.
  static DictionaryTranslator FromTsv(const std::filesystem::path& path);

  std::string Translate(std::string_view text, const LanguageCode& source,
                        const LanguageCode& target) const override;

 private:
  std::string LookupWord(std::string_view word) const;

  std::map<std::string, std::string, std::less<>> lexicon_;
  size_t max_key_length_ = 0;
};

enum class SkipReason {
  kMarkerCollision,
  kMarkersMissing,
  kMarkersReordered,
  kMarkersDuplicated,
  kEmptyAnswer,
};
inline constexpr size_t kSkipReasonCount = 5;

std::string_view ToString(SkipReason reason);

struct Skip {
  SkipReason reason;
};

struct TranslatedInstance {
  QAInstance instance;
  // Whitespace next to a marker was dropped from the recovered span.
  bool trimmed = false;
};

using TranslateResult = std::variant<TranslatedInstance, Skip>;

struct TranslationStats {
  size_t source_count = 0;
  size_t kept_count = 0;
  double skip_ratio = 0.0;
  std::array<size_t, kSkipReasonCount> skipped{};
  size_t trimmed_count = 0;

  // skip_ratio = (source - kept) / source, defined as 0 for empty input.
  static TranslationStats FromCounts(size_t source_count, size_t kept_count);
  void Add(const TranslateResult& result);
  void Merge(const TranslationStats& other);
  size_t skipped_total() const;
};

void to_json(nlohmann::json& j, const TranslationStats& stats);

// Inserts the open marker at the first answer's start and the close marker
// at its end. nullopt when either marker already occurs in the passage.
std::optional<std::string> WrapAnswer(const QAInstance& instance,
                                      const MarkerScheme& scheme);

// Recovers a span from a translated, marked passage. On success the
// returned instance's passage has the markers removed and its single
// answer is the text between them. `source_answer` decides whether
// whitespace adjacent to the markers is trimmed: leading (trailing)
// whitespace is kept only when the source answer itself began (ended)
// with whitespace.
TranslateResult ExtractMarkedSpan(std::string_view marked_passage,
                                  std::string_view source_answer,
                                  const MarkerScheme& scheme);

// Wraps, translates question and marked passage, and re-extracts the span.
// Throws ValidationError if target equals the instance language.
TranslateResult TranslateInstance(const QAInstance& instance,
                                  const LanguageCode& target,
                                  const Translator& translator,
                                  const MarkerScheme& scheme);

struct TranslatedDataset {
  std::vector<QAInstance> instances;
  TranslationStats stats;
};

// All inputs must share one language (ValidationError otherwise). Output
// order follows input order regardless of `jobs`.
TranslatedDataset TranslateDataset(std::span<const QAInstance> instances,
                                   const LanguageCode& target,
                                   const Translator& translator,
                                   const MarkerScheme& scheme, int jobs = 1);

}  // namespace mlmrc

#endif  // MLMRC_SPAN_TRANSLATE_H_
