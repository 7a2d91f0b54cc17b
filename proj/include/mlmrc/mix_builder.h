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

#ifndef MLMRC_MIX_BUILDER_H_
#define MLMRC_MIX_BUILDER_H_

#include <cstddef>
#include <map>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "mlmrc/corpus.h"

namespace mlmrc {

// A source instance and its surviving translations, all sharing one id.
struct AlignedInstanceGroup {
  QAInstance source;
  std::map<LanguageCode, QAInstance> translations;
};

struct Alignment {
  std::vector<AlignedInstanceGroup> groups;
  size_t dropped = 0;   // source ids with no surviving translation
  size_t orphans = 0;   // translated ids absent from the source dataset
};

using TranslatedSet = std::pair<LanguageCode, std::vector<QAInstance>>;

// Groups translations with their source by id, in source order. Throws
// ValidationError on duplicate ids within any dataset, on a translated set
// whose language equals the source language, or on a record whose lang
// disagrees with its set's tag.
Alignment Align(std::span<const QAInstance> source,
                std::span<const TranslatedSet> translated);

enum class MixMode {
  kPivot,     // only pairs that involve the source language
  kAllPairs,  // every ordered (question lang, passage lang) with l != k
};

MixMode ParseMixMode(std::string_view name);

// Builds mixed-language instances. Each output keeps the passage and span
// of its passage-side member, takes the question of the question-side
// member, sets q_lang, and gets the id "{id}::{q_lang}-{p_lang}".
std::vector<QAInstance> BuildMixed(std::span<const AlignedInstanceGroup> groups,
                                   MixMode mode);

}  // namespace mlmrc

#endif  // MLMRC_MIX_BUILDER_H_
