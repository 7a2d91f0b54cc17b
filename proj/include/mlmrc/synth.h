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

#ifndef MLMRC_SYNTH_H_
#define MLMRC_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mlmrc/corpus.h"

// Deterministic synthetic data for tests, the acceptance suite and the
// bundled pipeline fixture. Everything here is trivially learnable on
// purpose.
namespace mlmrc::synth {

struct MrcOptions {
  size_t count = 64;
  uint64_t seed = 1;
  std::string id_prefix = "q";
  // Each passage holds one number and one name; the question cue decides
  // which is the answer. When false only the number is present.
  bool two_types = true;
  size_t min_filler = 6;
  size_t max_filler = 12;
  // Fraction of passages that already contain the default open marker.
  double marker_collision_rate = 0.0;
};

// English MRC instances with answer types "numeric" and "person".
std::vector<QAInstance> MrcDataset(const MrcOptions& options);

// Word-level lexicon from English to `target` ("de" or "fr") covering every
// word MrcDataset and PhrasePassages can emit.
std::map<std::string, std::string> Lexicon(const LanguageCode& target);

struct PhraseCorpusOptions {
  size_t count = 1000;
  uint64_t seed = 7;
  size_t min_words = 90;
  size_t max_words = 160;
  size_t max_phrases = 2;
};

// Long English passages with phrase spans marked on known two/three-word
// phrases. Phrases stay well below 15% of the tokens.
std::vector<PassageWithPhrases> PhrasePassages(const PhraseCorpusOptions& options);

// Knowledge phrases used by the query-log and passage generators.
std::vector<std::string> KnowledgePhrases(const LanguageCode& lang);
std::vector<std::string> StopWords(const LanguageCode& lang);

// Query log where each query embeds one knowledge phrase that every title
// repeats, plus a distractor bigram that appears in only some titles.
std::vector<QueryLogRecord> QueryLog(const LanguageCode& lang, size_t count,
                                     uint64_t seed);

// Writes a complete pipeline fixture (source data, lexicons, query logs,
// stop words, passages, dev set, pipeline.json) into `dir`.
void WritePipelineFixture(const std::filesystem::path& dir, size_t source_count,
                          uint64_t seed);

}  // namespace mlmrc::synth

#endif  // MLMRC_SYNTH_H_
