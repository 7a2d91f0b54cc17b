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

// mlmrc: command-line entry point for every pipeline stage.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mlmrc/corpus.h"
#include "mlmrc/error.h"
#include "mlmrc/lakm_masker.h"
#include "mlmrc/metrics.h"
#include "mlmrc/mix_builder.h"
#include "mlmrc/model.h"
#include "mlmrc/phrase_miner.h"
#include "mlmrc/pipeline.h"
#include "mlmrc/span_translate.h"
#include "mlmrc/subword.h"
#include "mlmrc/synth.h"
#include "mlmrc/trainer.h"

namespace {

using namespace mlmrc;
using nlohmann::json;
namespace fs = std::filesystem;

enum class Level { kError, kWarn, kInfo, kDebug };
Level g_level = Level::kInfo;

void Log(Level level, const std::string& msg) {
  static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
  if (level > g_level) return;
  std::fprintf(stderr, "[%s] %s\n", kNames[static_cast<int>(level)], msg.c_str());
}

void Info(const std::string& msg) { Log(Level::kInfo, msg); }

void WriteJson(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

json ReadJson(const fs::path& path) { return LoadConfigDocument(path); }

// Splits "key=value"; both sides must be non-empty.
std::pair<std::string, std::string> SplitAssignment(const std::string& arg,
                                                    const char* flag) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size()) {
    throw ValidationError(std::string(flag) + " expects key=value, got '" + arg +
                          "'");
  }
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

struct Globals {
  uint64_t seed = 0;
  bool seed_given = false;
  int jobs = 1;
  std::string log_level = "info";
};

int RunTranslate(const std::string& in, const std::string& target,
                 const std::string& translator_spec, const MarkerScheme& markers,
                 const std::string& out, const std::string& stats_path, int jobs) {
  const auto source = LoadDataset(in);
  const auto translator = MakeTranslator(translator_spec);
  const auto result =
      TranslateDataset(source, LanguageCode(target), *translator, markers, jobs);
  SaveDataset(result.instances, out);
  if (!stats_path.empty()) WriteJson(stats_path, json(result.stats));
  Info("translated " + std::to_string(result.stats.kept_count) + "/" +
       std::to_string(result.stats.source_count) + " instances");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-lingual MRC auxiliary-task toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")
      ->each([&g](const std::string&) { g.seed_given = true; });
  app.add_option("--jobs", g.jobs, "Worker threads within a stage")
      ->check(CLI::PositiveNumber);
  app.add_option("--log-level", g.log_level, "error|warn|info|debug")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

  std::function<int()> action;

  // translate
  auto* translate = app.add_subcommand("translate", "Translate an MRC dataset");
  std::string tr_in, tr_target, tr_spec = "identity", tr_out, tr_stats;
  MarkerScheme tr_markers;
  translate->add_option("--in", tr_in)->required();
  translate->add_option("--target", tr_target)->required();
  translate->add_option("--translator", tr_spec, "identity | dict:<lexicon.tsv>");
  translate->add_option("--open", tr_markers.open);
  translate->add_option("--close", tr_markers.close);
  translate->add_option("--out", tr_out)->required();
  translate->add_option("--stats", tr_stats);
  translate->callback([&] {
    action = [&] {
      tr_markers.Validate();
      return RunTranslate(tr_in, tr_target, tr_spec, tr_markers, tr_out, tr_stats,
                          g.jobs);
    };
  });

  // mix
  auto* mix = app.add_subcommand("mix", "Build mixed-language MRC pairs");
  std::string mix_source, mix_mode = "pivot", mix_out;
  std::vector<std::string> mix_translated;
  mix->add_option("--source", mix_source)->required();
  mix->add_option("--translated", mix_translated, "<lang>=<jsonl>, repeatable")
      ->required();
  mix->add_option("--mode", mix_mode)->check(CLI::IsMember({"pivot", "all_pairs"}));
  mix->add_option("--out", mix_out)->required();
  mix->callback([&] {
    action = [&] {
      const auto source = LoadDataset(mix_source);
      std::vector<TranslatedSet> translated;
      for (const auto& arg : mix_translated) {
        const auto [lang, path] = SplitAssignment(arg, "--translated");
        translated.emplace_back(LanguageCode(lang), LoadDataset(path, LanguageCode(lang)));
      }
      const auto aligned = Align(source, translated);
      const auto mixed = BuildMixed(aligned.groups, ParseMixMode(mix_mode));
      SaveDataset(mixed, mix_out);
      Info("groups " + std::to_string(aligned.groups.size()) + ", dropped " +
           std::to_string(aligned.dropped) + ", orphans " +
           std::to_string(aligned.orphans) + ", mixed " +
           std::to_string(mixed.size()));
      return 0;
    };
  });

  // mine
  auto* mine = app.add_subcommand("mine", "Mine knowledge phrases from a query log");
  std::string mine_log, mine_stops, mine_ngram = "2:4", mine_out, mine_stats;
  double mine_threshold = 0.7;
  mine->add_option("--log", mine_log)->required();
  mine->add_option("--stops", mine_stops)->required();
  mine->add_option("--threshold", mine_threshold);
  mine->add_option("--ngram", mine_ngram, "min:max");
  mine->add_option("--out", mine_out)->required();
  mine->add_option("--stats", mine_stats);
  mine->callback([&] {
    action = [&] {
      MiningConfig config;
      config.threshold = mine_threshold;
      const auto colon = mine_ngram.find(':');
      try {
        if (colon == std::string::npos) throw std::invalid_argument("no colon");
        size_t used = 0;
        config.ngram_min = std::stoi(mine_ngram.substr(0, colon), &used);
        if (used != colon) throw std::invalid_argument("trailing");
        const std::string hi = mine_ngram.substr(colon + 1);
        config.ngram_max = std::stoi(hi, &used);
        if (used != hi.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ValidationError("--ngram expects min:max, got '" + mine_ngram + "'");
      }
      config.Validate();
      const auto records = LoadQueryLog(mine_log);
      if (records.empty()) throw ValidationError("query log is empty");
      const auto stops = StopWordList::FromFile(mine_stops, records.front().lang);
      const auto result = Mine(records, config, stops);
      SavePhrases(result.phrases, mine_out);
      if (!mine_stats.empty()) WriteJson(mine_stats, json(result.stats));
      Info("mined " + std::to_string(result.stats.phrase_count) + " phrases from " +
           std::to_string(result.stats.query_count) + " queries");
      return 0;
    };
  });

  // attach
  auto* attach = app.add_subcommand("attach", "Attach phrase spans to passages");
  std::string at_passages, at_out;
  std::vector<std::string> at_phrases;
  attach->add_option("--passages", at_passages)->required();
  attach->add_option("--phrases", at_phrases, "phrase JSONL, repeatable")->required();
  attach->add_option("--out", at_out)->required();
  attach->callback([&] {
    action = [&] {
      const auto passages = LoadPassages(at_passages);
      std::vector<KnowledgePhraseEntry> phrases;
      for (const auto& path : at_phrases) {
        auto more = LoadPhrases(path);
        phrases.insert(phrases.end(), more.begin(), more.end());
      }
      const auto corpus = AttachPhrases(passages, phrases, g.jobs);
      SavePhraseCorpus(corpus, at_out);
      Info("kept " + std::to_string(corpus.size()) + "/" +
           std::to_string(passages.size()) + " passages");
      return 0;
    };
  });

  // build-vocab
  auto* build_vocab = app.add_subcommand("build-vocab", "Build a subword vocabulary");
  std::vector<std::string> bv_datasets, bv_corpora;
  std::string bv_out;
  size_t bv_size = 2000;
  build_vocab->add_option("--dataset", bv_datasets, "MRC JSONL, repeatable");
  build_vocab->add_option("--corpus", bv_corpora, "phrase corpus JSONL, repeatable");
  build_vocab->add_option("--size", bv_size);
  build_vocab->add_option("--out", bv_out)->required();
  build_vocab->callback([&] {
    action = [&] {
      std::vector<std::string> texts;
      for (const auto& path : bv_datasets) {
        for (auto& instance : LoadDataset(path)) {
          texts.push_back(std::move(instance.question));
          texts.push_back(std::move(instance.passage));
        }
      }
      for (const auto& path : bv_corpora) {
        for (auto& p : LoadPhraseCorpus(path)) texts.push_back(std::move(p.passage));
      }
      if (texts.empty()) throw ValidationError("no text given to build-vocab");
      const auto vocab = SubwordVocab::Build(texts, bv_size);
      vocab.Save(bv_out);
      Info("vocabulary of " + std::to_string(vocab.size()) + " tokens");
      return 0;
    };
  });

  // mask
  auto* mask = app.add_subcommand("mask", "Mask a phrase corpus");
  std::string mk_corpus, mk_vocab, mk_out;
  double mk_ratio = 0.15;
  size_t mk_max_len = kLakmMaxLength;
  mask->add_option("--corpus", mk_corpus)->required();
  mask->add_option("--vocab", mk_vocab)->required();
  mask->add_option("--ratio", mk_ratio)->check(CLI::Range(0.0, 1.0));
  mask->add_option("--max-len", mk_max_len);
  mask->add_option("--out", mk_out)->required();
  mask->callback([&] {
    action = [&] {
      const auto corpus = LoadPhraseCorpus(mk_corpus);
      const auto vocab = SubwordVocab::Load(mk_vocab);
      const auto masked = MaskCorpus(corpus, vocab, mk_ratio, g.seed, mk_max_len, g.jobs);
      SaveMaskedExamples(masked, mk_out);
      Info("masked " + std::to_string(masked.size()) + " examples");
      return 0;
    };
  });

  // train
  auto* train = app.add_subcommand("train", "Train the span-extraction model");
  std::vector<std::string> tn_tasks;
  std::string tn_vocab, tn_config, tn_out, tn_curves, tn_dev;
  train->add_option("--task", tn_tasks, "main|mix|lakm=<jsonl>, repeatable")->required();
  train->add_option("--vocab", tn_vocab)->required();
  train->add_option("--config", tn_config, "TOML or JSON with encoder/train tables");
  train->add_option("--dev", tn_dev, "dev set for early stopping");
  train->add_option("--out", tn_out)->required();
  train->add_option("--curves", tn_curves);
  train->callback([&] {
    action = [&] {
      json doc = tn_config.empty() ? json::object() : ReadJson(tn_config);
      EncoderConfig encoder;
      TrainConfig config;
      encoder.seed = g.seed;
      config.seed = g.seed;
      try {
        if (auto it = doc.find("encoder"); it != doc.end()) it->get_to(encoder);
        if (auto it = doc.find("train"); it != doc.end()) it->get_to(config);
      } catch (const json::exception& e) {
        throw ValidationError(tn_config + ": " + e.what());
      }
      if (g.seed_given) {
        encoder.seed = g.seed;
        config.seed = g.seed;
      }
      const auto vocab = SubwordVocab::Load(tn_vocab);
      encoder.vocab_size = static_cast<int>(vocab.size());
      TrainData data;
      std::vector<Task> tasks;
      for (const auto& arg : tn_tasks) {
        const auto [name, path] = SplitAssignment(arg, "--task");
        const Task task = ParseTask(name);
        if (std::find(tasks.begin(), tasks.end(), task) != tasks.end()) {
          throw ValidationError("task '" + name + "' given twice");
        }
        tasks.push_back(task);
        switch (task) {
          case Task::kMainMrc: data.main = LoadDataset(path); break;
          case Task::kMixMrc: data.mix = LoadDataset(path); break;
          case Task::kLakm: data.lakm = LoadMaskedExamples(path); break;
        }
      }
      config.tasks = tasks;
      if (!tn_dev.empty()) data.dev = LoadDataset(tn_dev);
      config.Validate();
      encoder.Validate();
      ModelParams params(encoder, ParamInit::kRandom);
      const auto result = Train(data, vocab, params, config, [](const std::string& m) {
        Log(Level::kDebug, m);
      });
      params.Save(tn_out);
      if (!tn_curves.empty()) WriteCurves(result.curve, tn_curves);
      if (!result.curve.empty()) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%zu steps, final loss %.6f",
                      result.curve.size(), result.curve.back().loss);
        Info(buf);
      }
      return 0;
    };
  });

  // predict
  auto* predict = app.add_subcommand("predict", "Predict answer spans");
  std::string pr_model, pr_vocab, pr_in, pr_out;
  predict->add_option("--model", pr_model)->required();
  predict->add_option("--vocab", pr_vocab)->required();
  predict->add_option("--in", pr_in)->required();
  predict->add_option("--out", pr_out)->required();
  predict->callback([&] {
    action = [&] {
      const auto params = ModelParams::Load(pr_model);
      const auto vocab = SubwordVocab::Load(pr_vocab);
      if (vocab.size() != static_cast<size_t>(params.config().vocab_size)) {
        throw ValidationError("vocabulary size does not match the model");
      }
      std::vector<std::pair<std::string, std::string>> predictions;
      for (const auto& instance : LoadDataset(pr_in)) {
        const auto span = PredictSpan(instance, vocab, params);
        predictions.emplace_back(instance.id, span ? span->text : std::string());
      }
      SavePredictions(predictions, pr_out);
      return 0;
    };
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Score predictions");
  std::string ev_pred, ev_gold, ev_policy, ev_report, ev_pivot = "en";
  eval->add_option("--pred", ev_pred)->required();
  eval->add_option("--gold", ev_gold)->required();
  eval->add_option("--policy", ev_policy);
  eval->add_option("--pivot", ev_pivot);
  eval->add_option("--report", ev_report)->required();
  eval->callback([&] {
    action = [&] {
      NormalizationPolicy policy;
      if (!ev_policy.empty()) {
        try {
          ReadJson(ev_policy).get_to(policy);
        } catch (const json::exception& e) {
          throw ValidationError(ev_policy + ": " + e.what());
        }
      }
      const auto report = Evaluate(LoadPredictions(ev_pred), LoadDataset(ev_gold),
                                   policy, LanguageCode(ev_pivot));
      WriteJson(ev_report, json(report));
      char buf[96];
      std::snprintf(buf, sizeof(buf), "EM %.1f F1 %.1f over %zu",
                    100.0 * report.overall.em, 100.0 * report.overall.f1,
                    report.overall.n);
      Info(buf);
      return 0;
    };
  });

  // compare
  auto* compare = app.add_subcommand("compare", "Compare evaluation reports");
  std::vector<std::string> cmp_reports;
  std::string cmp_out;
  compare->add_option("--report", cmp_reports, "<label>=<json>, repeatable")->required();
  compare->add_option("--out", cmp_out)->required();
  compare->callback([&] {
    action = [&] {
      std::vector<std::pair<std::string, EvalReport>> reports;
      for (const auto& arg : cmp_reports) {
        const auto [label, path] = SplitAssignment(arg, "--report");
        try {
          reports.emplace_back(label, ReadJson(path).get<EvalReport>());
        } catch (const json::exception& e) {
          throw ValidationError(path + ": " + e.what());
        }
      }
      std::ofstream out(cmp_out, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot open " + cmp_out + " for writing");
      out << CompareRuns(reports).ToMarkdown();
      return 0;
    };
  });

  // import-squad
  auto* import = app.add_subcommand("import-squad", "Convert SQuAD JSON to JSONL");
  std::string im_in, im_lang = "en", im_out;
  import->add_option("--in", im_in)->required();
  import->add_option("--lang", im_lang);
  import->add_option("--out", im_out)->required();
  import->callback([&] {
    action = [&] {
      const auto instances = ImportSquad(im_in, LanguageCode(im_lang));
      SaveDataset(instances, im_out);
      Info("imported " + std::to_string(instances.size()) + " instances");
      return 0;
    };
  });

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic pipeline fixture");
  std::string sy_out;
  size_t sy_count = 200;
  synth_cmd->add_option("--out", sy_out)->required();
  synth_cmd->add_option("--count", sy_count);
  synth_cmd->callback([&] {
    action = [&] {
      synth::WritePipelineFixture(sy_out, sy_count, g.seed_given ? g.seed : 1);
      return 0;
    };
  });

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage end to end");
  std::string pl_config;
  bool pl_force = false;
  pipeline->add_option("--config", pl_config, "TOML or JSON")->required();
  pipeline->add_flag("--force", pl_force, "Rerun up-to-date stages");
  pipeline->callback([&] {
    action = [&] {
      json doc = LoadConfigDocument(pl_config);
      if (g.seed_given) {
        doc["seed"] = g.seed;
        if (doc.contains("encoder")) doc["encoder"].erase("seed");
        if (doc.contains("train")) doc["train"].erase("seed");
      }
      if (app.get_option("--jobs")->count() > 0) doc["jobs"] = g.jobs;
      const auto config =
          PipelineConfigFromJson(doc, fs::absolute(pl_config).parent_path());
      const auto result = RunPipeline(config, pl_force, Info);
      size_t skipped = 0;
      for (const auto& s : result.stages) skipped += s.skipped;
      Info("pipeline finished: " + std::to_string(result.stages.size()) +
           " stages, " + std::to_string(skipped) + " skipped");
      return 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  static const std::map<std::string, Level> kLevels = {
      {"error", Level::kError}, {"warn", Level::kWarn},
      {"info", Level::kInfo},   {"debug", Level::kDebug}};
  g_level = kLevels.at(g.log_level);

  try {
    return action();
  } catch (const StageError& e) {
    Log(Level::kError, e.what());
    return 3;
  } catch (const ValidationError& e) {
    Log(Level::kError, e.what());
    return 2;
  } catch (const ParseError& e) {
    Log(Level::kError, e.what());
    return 2;
  } catch (const std::exception& e) {
    Log(Level::kError, e.what());
    return 3;
  }
}
