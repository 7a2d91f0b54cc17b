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

// Acceptance suite: one line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fuzz.h"
#include "metrics_oracle.h"
#include "mlmrc/lakm_masker.h"
#include "mlmrc/metrics.h"
#include "mlmrc/mix_builder.h"
#include "mlmrc/phrase_miner.h"
#include "mlmrc/pipeline.h"
#include "mlmrc/span_translate.h"
#include "mlmrc/synth.h"
#include "mlmrc/trainer.h"
#include "pipeline_util.h"
#include "toy.h"

namespace mlmrc {
namespace {

const LanguageCode kEn("en");
const LanguageCode kDe("de");
const LanguageCode kFr("fr");
const LanguageCode kEs("es");

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void Check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

std::string Fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

// Skip-ratio arithmetic from kept/source counts.
void SkipRatios(Outcome& out) {
  const double fr = TranslationStats::FromCounts(56616, 52502).skip_ratio;
  const double de = TranslationStats::FromCounts(56616, 51326).skip_ratio;
  out.Check(std::abs(fr - 0.0727) <= 1e-4, "fr ratio");
  out.Check(std::abs(de - 0.0934) <= 1e-4, "de ratio");
  out.detail << "fr " << Fixed(fr, 4) << ", de " << Fixed(de, 4);
}

// Identity translation of fuzzed instances recovers every span.
void MarkerRoundTrip(Outcome& out) {
  Rng rng(2024);
  std::vector<QAInstance> items;
  for (int i = 0; i < 1000; ++i) {
    items.push_back(testing::FuzzInstance(rng, "f" + std::to_string(i)));
  }
  const MarkerScheme scheme;
  const auto result = TranslateDataset(items, kDe, IdentityTranslator{}, scheme);
  size_t recovered = 0, markers = 0;
  for (size_t i = 0; i < result.instances.size() && i < items.size(); ++i) {
    QAInstance back = result.instances[i];
    back.lang = kEn;
    recovered += back == items[i];
    for (const std::string& s : {back.passage, back.answers[0].text}) {
      markers += s.find(scheme.open) != std::string::npos;
      markers += s.find(scheme.close) != std::string::npos;
    }
  }
  out.Check(result.instances.size() == 1000, "kept count");
  out.Check(recovered == 1000, "byte-identical spans");
  out.Check(markers == 0, "no markers");
  out.detail << recovered << "/1000 recovered, " << markers << " markers";
}

// Mixed pairs on a three-language fixture.
void MixConstruction(Outcome& out) {
  synth::MrcOptions options;
  options.count = 120;
  options.seed = 5;
  const auto source = synth::MrcDataset(options);
  std::vector<TranslatedSet> translated;
  for (const auto& lang : {kDe, kFr}) {
    const DictionaryTranslator dict(synth::Lexicon(lang));
    translated.emplace_back(lang,
                            TranslateDataset(source, lang, dict, MarkerScheme{}).instances);
  }
  const auto alignment = Align(source, translated);
  size_t expected_pivot = 0, expected_all = 0;
  for (const auto& g : alignment.groups) {
    const size_t n = 1 + g.translations.size();
    expected_pivot += 2 * g.translations.size();
    expected_all += n * (n - 1);
  }
  const auto pivot = BuildMixed(alignment.groups, MixMode::kPivot);
  const auto all = BuildMixed(alignment.groups, MixMode::kAllPairs);
  size_t valid = 0;
  for (const auto* set : {&pivot, &all}) {
    for (const auto& q : *set) {
      bool ok = q.question_lang() != q.lang;
      try {
        Validate(q);
      } catch (const Error&) {
        ok = false;
      }
      valid += ok;
    }
  }
  out.Check(!alignment.groups.empty(), "aligned groups");
  out.Check(pivot.size() == expected_pivot, "pivot count");
  out.Check(all.size() == expected_all, "all_pairs count");
  out.Check(valid == pivot.size() + all.size(), "validity");
  out.detail << alignment.groups.size() << " groups, pivot " << pivot.size() << "/"
             << expected_pivot << ", all_pairs " << all.size() << "/" << expected_all
             << ", valid " << valid << "/" << pivot.size() + all.size();
}

// Worked mining example plus a threshold sweep.
void PhraseMining(Outcome& out) {
  const StopWordList stops(kEn, {"when", "is", "the", "of", "down", "made", "a", "in"});
  const std::vector<QueryLogRecord> worked = {
      {"when is the myth of George Washington cutting down cherry tree made", kEn,
       {"George Washington and the cherry tree myth",
        "The cherry tree story of George Washington cutting it",
        "Did George Washington cut down a cherry tree? Washington cutting"}}};
  const auto strict = Mine(worked, MiningConfig{}, stops);
  std::map<std::string, double> scores;
  for (const auto& e : strict.phrases) scores[e.phrase] = e.score;
  out.Check(scores.contains("george washington") && scores["george washington"] == 1.0,
            "george washington");
  out.Check(scores.contains("cherry tree") && scores["cherry tree"] == 1.0,
            "cherry tree");
  const std::vector<std::string> titles = worked[0].titles;
  const double partial = Score("washington cutting", titles);
  out.Check(std::abs(partial - 0.6667) < 1e-4, "partial score");
  out.Check(!scores.contains("washington cutting"), "partial excluded");

  // Reference counts; only their direction is compared.
  const std::vector<double> reference = {1335470965, 81507997, 42688684,
                                         28639557,   14384400, 9516323};
  const auto log = synth::QueryLog(kEn, 400, 17);
  const StopWordList synth_stops(kEn, synth::StopWords(kEn));
  std::vector<size_t> counts;
  std::vector<double> per_query;
  for (double t : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9}) {
    const auto r = Mine(log, MiningConfig{2, 4, t, 4}, synth_stops);
    counts.push_back(r.stats.phrase_count);
    per_query.push_back(r.stats.phrases_per_query);
  }
  bool monotone = true;
  for (size_t i = 1; i < counts.size(); ++i) {
    monotone &= counts[i] <= counts[i - 1] && per_query[i] <= per_query[i - 1];
    monotone &= reference[i] <= reference[i - 1];
  }
  out.Check(monotone, "non-increasing sweep");
  out.detail << "scores 1.0/1.0, partial " << Fixed(partial, 4) << " excluded; sweep";
  for (size_t c : counts) out.detail << ' ' << c;
}

// Masking statistics over a large synthetic corpus.
void MaskingStatistics(Outcome& out) {
  synth::PhraseCorpusOptions options;
  options.count = 10000;
  options.seed = 11;
  const auto corpus = synth::PhrasePassages(options);
  std::vector<std::string> texts;
  for (const auto& p : corpus) texts.push_back(p.passage);
  const auto vocab = SubwordVocab::Build(texts, 600);
  const auto masked = MaskCorpus(corpus, vocab, 0.15, 123);
  size_t selected = 0, positions = 0, phrase_tokens = 0, phrase_missed = 0;
  size_t actions[3] = {0, 0, 0};
  for (size_t i = 0; i < masked.size(); ++i) {
    const auto& ex = masked[i];
    selected += ex.selections.size();
    positions += ex.tokens.size() - 1;
    std::set<int> chosen;
    for (const auto& s : ex.selections) {
      chosen.insert(s.pos);
      ++actions[static_cast<int>(s.action)];
    }
    // Brute-force scan of every packed token against every phrase span.
    const auto packed = PackLakmInput(corpus[i].passage, vocab);
    for (size_t t = 1; t < packed.ids.size(); ++t) {
      for (const auto& [b, e] : corpus[i].phrase_spans) {
        if (packed.ranges[t].first < e && b < packed.ranges[t].second) {
          ++phrase_tokens;
          phrase_missed += !chosen.contains(static_cast<int>(t));
          break;
        }
      }
    }
  }
  const double fraction = double(selected) / double(positions);
  const double mask = 100.0 * actions[0] / selected;
  const double random = 100.0 * actions[1] / selected;
  const double keep = 100.0 * actions[2] / selected;
  out.Check(fraction >= 0.14 && fraction <= 0.15, "selected fraction");
  out.Check(std::abs(mask - 80) <= 1.5, "mask share");
  out.Check(std::abs(random - 10) <= 1.0, "random share");
  out.Check(std::abs(keep - 10) <= 1.0, "keep share");
  out.Check(phrase_tokens > 0 && phrase_missed == 0, "phrase coverage");
  out.detail << "fraction " << Fixed(fraction, 4) << ", actions " << Fixed(mask, 2)
             << "/" << Fixed(random, 2) << "/" << Fixed(keep, 2) << ", phrase tokens "
             << phrase_tokens - phrase_missed << "/" << phrase_tokens;
}

// Analytic against central-difference gradients.
void Gradients(Outcome& out) {
  using namespace testing_toy;
  const auto vocab = ToyVocab();
  double worst = 0.0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    ModelParams params = RandomPoint(ToyConfig(vocab.size(), seed, 2), seed);
    const auto mrc_batch = ToyMrcBatch(vocab, seed);
    const auto lakm_batch = ToyLakmBatch(vocab, seed);
    const auto mrc = CheckGradient(
        params,
        [&](const ModelParams& p, std::vector<double>* g) {
          return MrcLoss(mrc_batch, p, g);
        },
        1e-4);
    const auto lakm = CheckGradient(
        params,
        [&](const ModelParams& p, std::vector<double>* g) {
          return LakmLoss(lakm_batch, p, g);
        },
        1e-4);
    worst = std::max({worst, mrc.relative_error, lakm.relative_error});
    out.Check(mrc.relative_error < 1e-4, "mrc seed " + std::to_string(seed));
    out.Check(lakm.relative_error < 1e-4, "lakm seed " + std::to_string(seed));
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2e", worst);
  out.detail << "10 points x 2 losses, worst relative error " << buf;
}

// Uniform losses, schedule order and joint fitting.
void TrainerBehavior(Outcome& out) {
  using namespace testing_toy;
  const auto toy_vocab = ToyVocab();
  const ModelParams zero(ToyConfig(toy_vocab.size(), 1), ParamInit::kZero);
  double worst_uniform = 0.0;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const auto mrc_batch = ToyMrcBatch(toy_vocab, seed);
    double want = 0.0;
    for (const auto& f : mrc_batch) want += 2.0 * std::log(double(f.ids.size()));
    want /= double(mrc_batch.size());
    worst_uniform = std::max(worst_uniform,
                             std::abs(MrcLoss(mrc_batch, zero, nullptr) - want));
    const auto lakm_batch = ToyLakmBatch(toy_vocab, seed);
    double selections = 0.0;
    for (const auto& e : lakm_batch) selections += double(e.selections.size());
    want = selections / double(lakm_batch.size()) * std::log(double(toy_vocab.size()));
    worst_uniform = std::max(worst_uniform,
                             std::abs(LakmLoss(lakm_batch, zero, nullptr) - want));
  }
  out.Check(worst_uniform <= 1e-9, "uniform losses");

  auto order = MakeJointSetup(2);
  order.data.mix = order.data.main;
  for (auto& q : order.data.mix) q.q_lang = kDe;
  order.train.tasks = {Task::kMainMrc, Task::kMixMrc, Task::kLakm};
  order.train.max_steps = 30;
  ModelParams order_params(order.encoder, ParamInit::kRandom);
  const auto schedule = Train(order.data, order.vocab, order_params, order.train);
  bool round_robin = schedule.curve.size() == 30;
  for (size_t i = 0; round_robin && i < 30; ++i) {
    round_robin = schedule.curve[i].task == order.train.tasks[i % 3];
  }
  out.Check(round_robin, "round-robin order");

  auto joint = MakeJointSetup(1);
  ModelParams params(joint.encoder, ParamInit::kRandom);
  const auto result = Train(joint.data, joint.vocab, params, joint.train);
  const double em = TrainingSetEm(joint.data.main, joint.vocab, params);
  out.Check(result.curve.size() <= 2000, "step budget");
  out.Check(em >= 0.95, "training-set EM");
  out.detail << "uniform max error " << worst_uniform << ", 30-step order ok="
             << round_robin << ", EM " << Fixed(em, 4) << " after "
             << result.curve.size() << " steps (main+lakm)";
}

// EM/F1 against a reference scorer and fixed cases.
void MetricsOracle(Outcome& out) {
  const NormalizationPolicy policy;
  Rng rng(99);
  size_t em_mismatch = 0;
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const std::string pred = testing_oracle::RandomAnswer(rng);
    std::vector<std::string> golds;
    const int k = 1 + static_cast<int>(rng.UniformInt(3));
    for (int g = 0; g < k; ++g) golds.push_back(testing_oracle::RandomAnswer(rng));
    em_mismatch += ExactMatch(pred, golds, policy, kEn) != testing_oracle::Em(pred, golds);
    worst = std::max(worst, std::abs(F1(pred, golds, policy, kEn) -
                                     testing_oracle::F1(pred, golds)));
  }
  out.Check(em_mismatch == 0 && worst <= 1e-12, "oracle agreement");

  const std::vector<std::string> dose = {"50 to 100 mg"};
  const int dose_em = ExactMatch("100 mg", dose, policy, kEn);
  const double dose_f1 = F1("100 mg", dose, policy, kEn);
  // 0.6667 is 2/3 at four decimals.
  out.Check(dose_em == 0 && std::abs(dose_f1 - 2.0 / 3.0) <= 1e-6 &&
                Fixed(dose_f1, 4) == "0.6667",
            "dose case");

  std::vector<QAInstance> data;
  std::unordered_map<std::string, std::string> preds;
  for (int i = 0; i < 1000; ++i) {
    for (const auto& [lang, hits] : {std::pair{kEn, 624}, std::pair{kEs, 498}}) {
      QAInstance q;
      q.id = lang.str() + std::to_string(i);
      q.lang = lang;
      q.question = "q";
      q.passage = "yes";
      q.answers = {{0, 3, "yes"}};
      data.push_back(q);
      preds[q.id] = i < hits ? "yes" : "no";
    }
  }
  const auto report = Evaluate(preds, data, policy);
  const double gap = 100.0 * report.gaps.at(kEs).em;
  out.Check(Fixed(gap, 1) == "-12.6" && std::abs(gap + 12.6) <= 1e-12, "gap");
  out.detail << "500 pairs, EM mismatches " << em_mismatch << ", max F1 diff " << worst
             << "; dose EM " << dose_em << " F1 " << Fixed(dose_f1, 6) << "; gap "
             << Fixed(gap, 1);
}

// Two full pipeline runs on copies of the bundled fixture.
void EndToEndDeterminism(Outcome& out) {
  testing::TempDir a, b;
  const auto fa = testing::CopyFixture(a.path());
  const auto fb = testing::CopyFixture(b.path());
  RunPipeline(LoadPipelineConfig(fa / "pipeline.json"));
  RunPipeline(LoadPipelineConfig(fb / "pipeline.json"));
  const auto sa = testing::Snapshot(fa / "out");
  const auto sb = testing::Snapshot(fb / "out");
  size_t differing = 0;
  for (const auto& [name, bytes] : sa) {
    differing += !sb.contains(name) || sb.at(name) != bytes;
  }
  out.Check(!sa.empty() && sa.size() == sb.size() && differing == 0, "identical");
  out.detail << sa.size() << " artifacts, " << differing << " differ";
}

struct Criterion {
  int number;
  double limit_seconds;
  std::function<void(Outcome&)> run;
};

}  // namespace
}  // namespace mlmrc

int main() {
  using namespace mlmrc;
  const std::vector<Criterion> criteria = {
      {1, 1.0, SkipRatios},        {2, 5.0, MarkerRoundTrip},
      {3, 5.0, MixConstruction},   {4, 5.0, PhraseMining},
      {5, 30.0, MaskingStatistics}, {6, 60.0, Gradients},
      {7, 300.0, TrainerBehavior}, {8, 5.0, MetricsOracle},
      {9, 300.0, EndToEndDeterminism}};
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << "[exception: " << e.what() << "]";
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > c.limit_seconds) {
      out.pass = false;
      out.detail << " [over time limit " << c.limit_seconds << " s]";
    }
    failures += !out.pass;
    std::printf("criterion %d: %s (%s; %.2f s)\n", c.number, out.pass ? "PASS" : "FAIL",
                out.detail.str().c_str(), seconds);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
