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

#ifndef MLMRC_CORPUS_H_
#define MLMRC_CORPUS_H_

#include <compare>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace mlmrc {

// Two lowercase ASCII letters ("en", "de", ...).
class LanguageCode {
 public:
  LanguageCode() = default;
  // Throws ValidationError unless `code` is exactly two of [a-z].
  explicit LanguageCode(std::string_view code);

  static bool IsValid(std::string_view code);

  const std::string& str() const { return code_; }
  bool empty() const { return code_.empty(); }

  friend auto operator<=>(const LanguageCode&, const LanguageCode&) = default;
  friend bool operator==(const LanguageCode&, const LanguageCode&) = default;

 private:
  std::string code_;
};

// [start, end) byte offsets into the owning passage.
struct AnswerSpan {
  size_t start = 0;
  size_t end = 0;
  std::string text;

  friend bool operator==(const AnswerSpan&, const AnswerSpan&) = default;
};

struct QAInstance {
  std::string id;
  LanguageCode lang;  // passage language
  std::string question;
  std::string passage;
  std::vector<AnswerSpan> answers;
  std::optional<std::string> answer_type;
  // Set only on mixed-language instances, where it differs from `lang`.
  std::optional<LanguageCode> q_lang;

  const LanguageCode& question_lang() const { return q_lang ? *q_lang : lang; }

  friend bool operator==(const QAInstance&, const QAInstance&) = default;
};

// Checks the span invariants: 0 <= start < end <= |passage|, offsets on
// UTF-8 character boundaries, and passage[start, end) == text.
// Throws ValidationError naming the instance id.
void ValidateSpan(const AnswerSpan& span, std::string_view passage,
                  std::string_view id);
void Validate(const QAInstance& instance);

struct QueryLogRecord {
  std::string query;
  LanguageCode lang;
  std::vector<std::string> titles;

  friend bool operator==(const QueryLogRecord&,
                         const QueryLogRecord&) = default;
};

struct KnowledgePhraseEntry {
  std::string phrase;  // case-folded tokens joined by single spaces
  LanguageCode lang;
  double score = 0.0;
  int title_hits = 0;
  int token_count = 0;

  friend bool operator==(const KnowledgePhraseEntry&,
                         const KnowledgePhraseEntry&) = default;
};

using ByteRange = std::pair<size_t, size_t>;

struct PassageWithPhrases {
  std::string passage;
  LanguageCode lang;
  std::vector<ByteRange> phrase_spans;  // sorted, non-overlapping

  friend bool operator==(const PassageWithPhrases&,
                         const PassageWithPhrases&) = default;
};

struct Passage {
  std::string text;
  LanguageCode lang;
};

void to_json(nlohmann::json& j, const LanguageCode& lang);
void from_json(const nlohmann::json& j, LanguageCode& lang);
void to_json(nlohmann::json& j, const AnswerSpan& span);
void from_json(const nlohmann::json& j, AnswerSpan& span);
void to_json(nlohmann::json& j, const QAInstance& instance);
void from_json(const nlohmann::json& j, QAInstance& instance);
void to_json(nlohmann::json& j, const QueryLogRecord& record);
void from_json(const nlohmann::json& j, QueryLogRecord& record);
void to_json(nlohmann::json& j, const KnowledgePhraseEntry& entry);
void from_json(const nlohmann::json& j, KnowledgePhraseEntry& entry);
void to_json(nlohmann::json& j, const PassageWithPhrases& p);
void from_json(const nlohmann::json& j, PassageWithPhrases& p);

// Calls `on_line` with each parsed non-blank line. Wraps JSON and field
// errors in ParseError carrying the path and 1-based line number.
void ReadJsonl(const std::filesystem::path& path,
               const std::function<void(const nlohmann::json&, size_t)>&
                   on_line);
// Writes one compact object per line. Throws IoError if the file cannot
// be opened.
void WriteJsonl(const std::filesystem::path& path,
                std::span<const nlohmann::json> rows);

// Loads a QA dataset, validating spans, id uniqueness and (optionally) the
// language of every record.
std::vector<QAInstance> LoadDataset(
    const std::filesystem::path& path,
    std::optional<LanguageCode> expected_lang = std::nullopt);
// Validates every instance before touching the file. Returns count written.
size_t SaveDataset(std::span<const QAInstance> instances,
                   const std::filesystem::path& path);

// Reads the nested SQuAD layout. `answer_start` there counts code points;
// it is converted to a byte offset here. Questions with no answers are
// skipped.
std::vector<QAInstance> ImportSquad(const std::filesystem::path& path,
                                    const LanguageCode& lang);

std::vector<QueryLogRecord> LoadQueryLog(const std::filesystem::path& path);
std::vector<KnowledgePhraseEntry> LoadPhrases(
    const std::filesystem::path& path);
void SavePhrases(std::span<const KnowledgePhraseEntry> phrases,
                 const std::filesystem::path& path);
// Passage JSONL: {"passage": str, "lang": str}.
std::vector<Passage> LoadPassages(const std::filesystem::path& path);
std::vector<PassageWithPhrases> LoadPhraseCorpus(
    const std::filesystem::path& path);
void SavePhraseCorpus(std::span<const PassageWithPhrases> corpus,
                      const std::filesystem::path& path);

// Converts a code-point index into a byte offset; nullopt if out of range.
std::optional<size_t> CodePointToByteOffset(std::string_view s,
                                            size_t code_points);

}  // namespace mlmrc

template <>
struct std::hash<mlmrc::LanguageCode> {
  size_t operator()(const mlmrc::LanguageCode& lang) const noexcept {
    return std::hash<std::string>{}(lang.str());
  }
};

#endif  // MLMRC_CORPUS_H_
