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

#ifndef MLMRC_LAKM_MASKER_H_
#define MLMRC_LAKM_MASKER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mlmrc/corpus.h"
#include "mlmrc/subword.h"

namespace mlmrc {

enum class MaskAction { kMask, kRandom, kKeep };

std::string_view ToString(MaskAction action);
MaskAction ParseMaskAction(std::string_view name);

struct Selection {
  int pos = 0;
  MaskAction action = MaskAction::kMask;
  TokenId target = 0;  // original token at `pos`

  friend bool operator==(const Selection&, const Selection&) = default;
};

// Masked LAKM input. tokens[0] is [Start]; selections are sorted by pos.
struct MaskedExample {
  std::vector<TokenId> tokens;
  std::vector<Selection> selections;
  std::vector<int> phrase_positions;  // sorted

  friend bool operator==(const MaskedExample&, const MaskedExample&) = default;
};

void to_json(nlohmann::json& j, const MaskedExample& example);
void from_json(const nlohmann::json& j, MaskedExample& example);

inline constexpr size_t kLakmMaxLength = 256;

// [Start] followed by the passage's subword ids, truncated to `max_length`
// positions. Ranges are parallel to ids; the [Start] range is empty.
TokenizedText PackLakmInput(std::string_view passage, const SubwordVocab& vocab,
                            size_t max_length = kLakmMaxLength);

// Two-step knowledge masking:
//  1. every non-special token whose byte range intersects a phrase span is
//     selected;
//  2. if fewer than floor(ratio * n) are selected (n = non-special tokens
//     after truncation), further non-phrase tokens are drawn uniformly
//     without replacement up to that count.
// Each selection independently becomes [MASK] (80%), a uniformly random
// regular token (10%), or stays unchanged (10%).
// Throws ValidationError if the passage has no tokens.
MaskedExample MaskExample(const PassageWithPhrases& passage,
                          const SubwordVocab& vocab, double ratio,
                          uint64_t seed, size_t max_length = kLakmMaxLength);

// Example i is masked with seed ^ i, so the result does not depend on
// `jobs`.
std::vector<MaskedExample> MaskCorpus(std::span<const PassageWithPhrases> corpus,
                                      const SubwordVocab& vocab, double ratio,
                                      uint64_t seed,
                                      size_t max_length = kLakmMaxLength,
                                      int jobs = 1);

std::vector<MaskedExample> LoadMaskedExamples(const std::filesystem::path& path);
void SaveMaskedExamples(std::span<const MaskedExample> examples,
                        const std::filesystem::path& path);

}  // namespace mlmrc

#endif  // MLMRC_LAKM_MASKER_H_
