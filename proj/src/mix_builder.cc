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

#include "mlmrc/mix_builder.h"

#include <string>
#include <unordered_map>
#include <unordered_set>

#include "mlmrc/error.h"

namespace mlmrc {

namespace {

QAInstance MakeMixed(const QAInstance& question_side,
                     const QAInstance& passage_side) {
  QAInstance mixed = passage_side;
  mixed.question = question_side.question;
  mixed.q_lang = question_side.lang;
  mixed.id = passage_side.id + "::" + question_side.lang.str() + "-" +
             passage_side.lang.str();
  return mixed;
}

}  // namespace

Alignment Align(std::span<const QAInstance> source,
                std::span<const TranslatedSet> translated) {
  std::unordered_set<std::string> source_ids;
  for (const auto& instance : source) {
    if (!source_ids.insert(instance.id).second) {
      throw ValidationError("duplicate id '" + instance.id +
                            "' in source dataset");
    }
  }

  Alignment out;
  // id -> lang -> translated instance
  std::unordered_map<std::string, std::map<LanguageCode, const QAInstance*>>
      by_id;
  std::unordered_set<LanguageCode> langs;
  for (const auto& [lang, instances] : translated) {
    if (!langs.insert(lang).second) {
      throw ValidationError("translated language '" + lang.str() +
                            "' given twice");
    }
    if (!source.empty() && lang == source.front().lang) {
      throw ValidationError("translated set '" + lang.str() +
                            "' has the source language");
    }
    std::unordered_set<std::string> ids;
    for (const auto& instance : instances) {
      if (!ids.insert(instance.id).second) {
        throw ValidationError("duplicate id '" + instance.id +
                              "' in translated dataset '" + lang.str() + "'");
      }
      if (instance.lang != lang) {
        throw ValidationError("instance '" + instance.id + "' tagged '" +
                              instance.lang.str() + "' in set '" +
                              lang.str() + "'");
      }
      if (!source_ids.contains(instance.id)) {
        ++out.orphans;
        continue;
      }
      by_id[instance.id][lang] = &instance;
    }
  }

  for (const auto& instance : source) {
    auto it = by_id.find(instance.id);
    if (it == by_id.end()) {
      ++out.dropped;
      continue;
    }
    AlignedInstanceGroup group;
    group.source = instance;
    for (const auto& [lang, member] : it->second) {
      group.translations.emplace(lang, *member);
    }
    out.groups.push_back(std::move(group));
  }
  return out;
}

MixMode ParseMixMode(std::string_view name) {
  if (name == "pivot") return MixMode::kPivot;
  if (name == "all_pairs") return MixMode::kAllPairs;
  throw ValidationError("unknown mix mode '" + std::string(name) +
                        "' (expected pivot or all_pairs)");
}

std::vector<QAInstance> BuildMixed(std::span<const AlignedInstanceGroup> groups,
                                   MixMode mode) {
  std::vector<QAInstance> out;
  for (const auto& group : groups) {
    if (mode == MixMode::kPivot) {
      for (const auto& [lang, translation] : group.translations) {
        out.push_back(MakeMixed(translation, group.source));
        out.push_back(MakeMixed(group.source, translation));
      }
      continue;
    }
    std::vector<const QAInstance*> members{&group.source};
    for (const auto& [lang, translation] : group.translations) {
      members.push_back(&translation);
    }
    if (members.size() < 2) continue;
    for (const QAInstance* question_side : members) {
      for (const QAInstance* passage_side : members) {
        if (question_side == passage_side) continue;
        out.push_back(MakeMixed(*question_side, *passage_side));
      }
    }
  }
  return out;
}

}  // namespace mlmrc
