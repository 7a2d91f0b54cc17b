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

#ifndef MLMRC_PHRASE_MINER_H_
#define MLMRC_PHRASE_MINER_H_

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "mlmrc/corpus.h"

namespace mlmrc {

class StopWordList {
 public:
  StopWordList() = default;
  StopWordList(LanguageCode lang, const std::vector<std::string>& words);
  // One word per line; blank lines and lines starting with '#' ignored.
  static StopWordList FromFile(const std::filesystem::path& path,
                               LanguageCode lang);

  // Case-insensitive.
  bool Contains(std::string_view word) const;
  const LanguageCode& lang() const { return lang_; }
  size_t size() const { return words_.size(); }

 private:
  LanguageCode lang_;
  std::unordered_set<std::string> words_;  // case-folded
};

struct MiningConfig {
  int ngram_min = 2;
  int ngram_max = 4;
  double threshold = 0.7;
  // Upper limit accepted for ngram_max.
  int ngram_cap = 4;

  void Validate() const;
};

struct MiningStats {
  size_t query_count = 0;       // records scored (non-empty titles)
  size_t skipped_records = 0;   // records with no titles
  size_t phrase_count = 0;      // unique phrases kept
  size_t occurrence_count = 0;  // (query, phrase) pairs kept before dedup
  double phrases_per_query = 0.0;
  double occurrences_per_query = 0.0;
};

void to_json(nlohmann::json& j, const MiningStats& stats);

// All contiguous n-grams of the case-folded word tokens of `query`, for
// ngram_min <= n <= ngram_max, ordered by start position then length,
// duplicates removed. No stop-word filtering.
std::vector<std::string> EnumerateNgrams(std::string_view query,
                                         const MiningConfig& config);

// EnumerateNgrams minus candidates whose first or last token is a stop
// word (which also covers all-stop-word candidates).
std::vector<std::string> Candidates(std::string_view query,
                                    const MiningConfig& config,
                                    const StopWordList& stops);

// Fraction of titles containing the phrase's token sequence contiguously.
// Throws ValidationError on an empty title list.
double Score(std::string_view phrase, std::span<const std::string> titles);

struct MiningResult {
  std::vector<KnowledgePhraseEntry> phrases;  // first-occurrence order
  MiningStats stats;
};

// Candidates scoring >= threshold; across queries the maximum score wins
// (first query on ties). Throws ValidationError on mixed languages.
MiningResult Mine(std::span<const QueryLogRecord> log,
                  const MiningConfig& config, const StopWordList& stops);

// Locates phrase occurrences in each passage (token-aligned, case-folded,
// and the passage bytes must fold to exactly the phrase). Overlaps are
// resolved longest-first (by token count, then bytes), ties leftmost.
// Passages without any match are dropped; phrases in another language than
// the passage are ignored.
std::vector<PassageWithPhrases> AttachPhrases(
    std::span<const Passage> passages,
    std::span<const KnowledgePhraseEntry> phrases, int jobs = 1);

struct PhraseCorpusStats {
  size_t passage_count = 0;
  size_t phrase_count = 0;         // span occurrences
  size_t unique_phrase_count = 0;  // distinct case-folded phrases
  double avg_tokens_per_phrase = 0.0;
  double avg_phrases_per_passage = 0.0;
};

void to_json(nlohmann::json& j, const PhraseCorpusStats& stats);

PhraseCorpusStats PhraseStats(std::span<const PassageWithPhrases> corpus);

}  // namespace mlmrc

#endif  // MLMRC_PHRASE_MINER_H_
