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

#include <gtest/gtest.h>

#include <set>

#include "mlmrc/error.h"

namespace mlmrc {
namespace {

const LanguageCode kEn("en"), kDe("de"), kFr("fr");

QAInstance Make(const std::string& id, const LanguageCode& lang,
                const std::string& question, const std::string& passage,
                const std::string& answer) {
  QAInstance q;
  q.id = id;
  q.lang = lang;
  q.question = question;
  q.passage = passage;
  const size_t at = passage.find(answer);
  q.answers = {AnswerSpan{at, at + answer.size(), answer}};
  return q;
}

std::vector<QAInstance> Source() {
  return {Make("a", kEn, "who came", "Anna came home", "Anna"),
          Make("b", kEn, "how many", "nine cats", "nine"),
          Make("c", kEn, "who left", "Boris left", "Boris")};
}

TEST(AlignTest, IntersectsById) {
  const auto source = Source();
  const std::vector<TranslatedSet> translated = {
      {kDe, {Make("a", kDe, "wer kam", "Anna kam heim", "Anna"),
             Make("b", kDe, "wie viele", "neun Katzen", "neun")}}};
  const auto aligned = Align(source, translated);
  EXPECT_EQ(aligned.groups.size(), 2u);
  EXPECT_EQ(aligned.dropped, 1u);
}

TEST(AlignTest, NoTranslationsDropsEverything) {
  const auto source = Source();
  const auto aligned = Align(source, {});
  EXPECT_TRUE(aligned.groups.empty());
  EXPECT_EQ(aligned.dropped, 3u);
}

TEST(AlignTest, UnionOfPartialTranslations) {
  const auto source = Source();
  const std::vector<TranslatedSet> translated = {
      {kDe, {Make("a", kDe, "wer kam", "Anna kam", "Anna"),
             Make("b", kDe, "wie viele", "neun Katzen", "neun")}},
      {kFr, {Make("b", kFr, "combien", "neuf chats", "neuf"),
             Make("c", kFr, "qui", "Boris parti", "Boris")}}};
  const auto aligned = Align(source, translated);
  ASSERT_EQ(aligned.groups.size(), 3u);
  const auto langs = [&](size_t i) {
    std::set<std::string> out;
    for (const auto& [lang, _] : aligned.groups[i].translations) out.insert(lang.str());
    return out;
  };
  EXPECT_EQ(aligned.groups[0].source.id, "a");
  EXPECT_EQ(langs(0), (std::set<std::string>{"de"}));
  EXPECT_EQ(langs(1), (std::set<std::string>{"de", "fr"}));
  EXPECT_EQ(langs(2), (std::set<std::string>{"fr"}));
  EXPECT_EQ(aligned.dropped, 0u);
}

TEST(AlignTest, Errors) {
  auto source = Source();
  source.push_back(source.front());
  EXPECT_THROW(Align(source, {}), ValidationError);

  const auto ok = Source();
  const std::vector<TranslatedSet> dup = {
      {kDe, {Make("a", kDe, "q", "Anna", "Anna"), Make("a", kDe, "q", "Anna", "Anna")}}};
  EXPECT_THROW(Align(ok, dup), ValidationError);
  const std::vector<TranslatedSet> pivot_lang = {{kEn, {Make("a", kEn, "q", "Anna", "Anna")}}};
  EXPECT_THROW(Align(ok, pivot_lang), ValidationError);
  const std::vector<TranslatedSet> mistagged = {{kDe, {Make("a", kFr, "q", "Anna", "Anna")}}};
  EXPECT_THROW(Align(ok, mistagged), ValidationError);
}

AlignedInstanceGroup ThreeLanguageGroup() {
  AlignedInstanceGroup g;
  g.source = Make("x", kEn, "who came", "Anna came", "Anna");
  g.translations.emplace(kDe, Make("x", kDe, "wer kam", "Anna kam", "Anna"));
  g.translations.emplace(kFr, Make("x", kFr, "qui est venu", "Anna est venue", "Anna"));
  return g;
}

std::set<std::string> Pairs(const std::vector<QAInstance>& mixed) {
  std::set<std::string> out;
  for (const auto& m : mixed) out.insert(m.question_lang().str() + "-" + m.lang.str());
  return out;
}

TEST(BuildMixedTest, PivotModeFourInstances) {
  const std::vector<AlignedInstanceGroup> groups = {ThreeLanguageGroup()};
  const auto mixed = BuildMixed(groups, MixMode::kPivot);
  ASSERT_EQ(mixed.size(), 4u);
  EXPECT_EQ(Pairs(mixed), (std::set<std::string>{"de-en", "en-de", "fr-en", "en-fr"}));
  for (const auto& m : mixed) {
    EXPECT_NE(m.question_lang(), m.lang);
    EXPECT_NO_THROW(Validate(m));
    EXPECT_EQ(m.id, "x::" + m.question_lang().str() + "-" + m.lang.str());
  }
  // The question comes from the question language and the span from the passage's.
  EXPECT_EQ(mixed[0].question, "wer kam");
  EXPECT_EQ(mixed[0].passage, "Anna came");
}

TEST(BuildMixedTest, AllPairsSixInstances) {
  const std::vector<AlignedInstanceGroup> groups = {ThreeLanguageGroup()};
  const auto mixed = BuildMixed(groups, MixMode::kAllPairs);
  ASSERT_EQ(mixed.size(), 6u);
  EXPECT_EQ(Pairs(mixed), (std::set<std::string>{"de-en", "en-de", "fr-en", "en-fr",
                                                 "de-fr", "fr-de"}));
}

TEST(BuildMixedTest, TwoLanguagesModesAgree) {
  AlignedInstanceGroup g = ThreeLanguageGroup();
  g.translations.erase(kFr);
  const std::vector<AlignedInstanceGroup> groups = {g};
  auto pivot = BuildMixed(groups, MixMode::kPivot);
  auto all = BuildMixed(groups, MixMode::kAllPairs);
  EXPECT_EQ(pivot.size(), 2u);
  EXPECT_EQ(Pairs(pivot), Pairs(all));
}

TEST(BuildMixedTest, EmptyTranslationsContributeNothing) {
  AlignedInstanceGroup g = ThreeLanguageGroup();
  g.translations.clear();
  const std::vector<AlignedInstanceGroup> groups = {g};
  EXPECT_TRUE(BuildMixed(groups, MixMode::kPivot).empty());
  EXPECT_TRUE(BuildMixed(groups, MixMode::kAllPairs).empty());
}

TEST(BuildMixedTest, ParseMode) {
  EXPECT_EQ(ParseMixMode("pivot"), MixMode::kPivot);
  EXPECT_EQ(ParseMixMode("all_pairs"), MixMode::kAllPairs);
  EXPECT_THROW(ParseMixMode("both"), ValidationError);
}

}  // namespace
}  // namespace mlmrc
