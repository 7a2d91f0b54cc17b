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

#include "mlmrc/lakm_masker.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "mlmrc/error.h"
#include "mlmrc/parallel.h"
#include "mlmrc/random.h"

namespace mlmrc {

std::string_view ToString(MaskAction action) {
  switch (action) {
    case MaskAction::kMask:
      return "mask";
    case MaskAction::kRandom:
      return "random";
    case MaskAction::kKeep:
      return "keep";
  }
  return "mask";
}

MaskAction ParseMaskAction(std::string_view name) {
  if (name == "mask") return MaskAction::kMask;
  if (name == "random") return MaskAction::kRandom;
  if (name == "keep") return MaskAction::kKeep;
  throw ValidationError("unknown mask action '" + std::string(name) + "'");
}

void to_json(nlohmann::json& j, const MaskedExample& example) {
  nlohmann::json selections = nlohmann::json::array();
  for (const auto& s : example.selections) {
    selections.push_back(
        {{"pos", s.pos}, {"action", ToString(s.action)}, {"target", s.target}});
  }
  j = nlohmann::json{{"tokens", example.tokens},
                     {"selections", std::move(selections)},
                     {"phrase_positions", example.phrase_positions}};
}

void from_json(const nlohmann::json& j, MaskedExample& example) {
  example.tokens = j.at("tokens").get<std::vector<TokenId>>();
  example.selections.clear();
  for (const auto& s : j.at("selections")) {
    Selection sel;
    sel.pos = s.at("pos").get<int>();
    sel.action = ParseMaskAction(s.at("action").get<std::string>());
    sel.target = s.at("target").get<TokenId>();
    if (sel.pos < 0 || sel.pos >= static_cast<int>(example.tokens.size())) {
      throw ValidationError("selection position " + std::to_string(sel.pos) +
                            " outside the token sequence");
    }
    example.selections.push_back(sel);
  }
  example.phrase_positions.clear();
  if (auto it = j.find("phrase_positions"); it != j.end()) {
    example.phrase_positions = it->get<std::vector<int>>();
  }
}

TokenizedText PackLakmInput(std::string_view passage, const SubwordVocab& vocab,
                            size_t max_length) {
  TokenizedText packed;
  packed.ids.push_back(vocab.start_id());
  packed.ranges.emplace_back(0, 0);
  auto body = vocab.Tokenize(passage);
  const size_t keep =
      std::min(body.ids.size(), max_length > 0 ? max_length - 1 : 0);
  packed.ids.insert(packed.ids.end(), body.ids.begin(), body.ids.begin() + keep);
  packed.ranges.insert(packed.ranges.end(), body.ranges.begin(),
                       body.ranges.begin() + keep);
  return packed;
}

MaskedExample MaskExample(const PassageWithPhrases& passage,
                          const SubwordVocab& vocab, double ratio,
                          uint64_t seed, size_t max_length) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw ValidationError("mask ratio must lie in [0, 1]");
  }
  const TokenizedText packed = PackLakmInput(passage.passage, vocab, max_length);
  if (packed.ids.size() < 2) {
    throw ValidationError("passage has no tokens to mask");
  }

  std::vector<int> phrase;
  std::vector<int> others;
  for (size_t i = 1; i < packed.ids.size(); ++i) {
    if (vocab.IsSpecial(packed.ids[i])) continue;
    const auto [begin, end] = packed.ranges[i];
    const bool in_phrase = std::any_of(
        passage.phrase_spans.begin(), passage.phrase_spans.end(),
        [&](const ByteRange& span) { return begin < span.second && span.first < end; });
    (in_phrase ? phrase : others).push_back(static_cast<int>(i));
  }
  const size_t n = phrase.size() + others.size();
  // The epsilon keeps e.g. 0.15 * 60 from flooring to 8.
  const auto budget = static_cast<size_t>(std::floor(ratio * n + 1e-9));

  Rng rng(seed);
  std::vector<int> selected = phrase;
  if (selected.size() < budget) {
    const size_t extra = budget - selected.size();
    for (size_t k = 0; k < extra; ++k) {
      const size_t pick = k + rng.UniformInt(others.size() - k);
      std::swap(others[k], others[pick]);
      selected.push_back(others[k]);
    }
  }
  std::sort(selected.begin(), selected.end());

  MaskedExample example;
  example.tokens = packed.ids;
  example.phrase_positions = std::move(phrase);
  const auto& regular = vocab.regular_ids();
  for (int pos : selected) {
    Selection sel;
    sel.pos = pos;
    sel.target = packed.ids[pos];
    const double u = rng.Uniform01();
    if (u < 0.8) {
      sel.action = MaskAction::kMask;
      example.tokens[pos] = vocab.mask_id();
    } else if (u < 0.9) {
      sel.action = MaskAction::kRandom;
      example.tokens[pos] = regular[rng.UniformInt(regular.size())];
    } else {
      sel.action = MaskAction::kKeep;
    }
    example.selections.push_back(sel);
  }
  return example;
}

std::vector<MaskedExample> MaskCorpus(std::span<const PassageWithPhrases> corpus,
                                      const SubwordVocab& vocab, double ratio,
                                      uint64_t seed, size_t max_length,
                                      int jobs) {
  std::vector<MaskedExample> out(corpus.size());
  ParallelFor(corpus.size(), jobs, [&](size_t i) {
    out[i] = MaskExample(corpus[i], vocab, ratio, seed ^ static_cast<uint64_t>(i),
                         max_length);
  });
  return out;
}

std::vector<MaskedExample> LoadMaskedExamples(const std::filesystem::path& path) {
  std::vector<MaskedExample> examples;
  ReadJsonl(path, [&](const nlohmann::json& row, size_t) {
    examples.push_back(row.get<MaskedExample>());
  });
  return examples;
}

void SaveMaskedExamples(std::span<const MaskedExample> examples,
                        const std::filesystem::path& path) {
  std::vector<nlohmann::json> rows;
  rows.reserve(examples.size());
  for (const auto& e : examples) rows.emplace_back(e);
  WriteJsonl(path, rows);
}

}  // namespace mlmrc
