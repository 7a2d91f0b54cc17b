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

#include "mlmrc/pipeline.h"

#include <gtest/gtest.h>

#include <fstream>

#include "mlmrc/corpus.h"
#include "pipeline_util.h"

namespace mlmrc {
namespace {

namespace fs = std::filesystem;
using testing::CopyFixture;
using testing::ReadFile;
using testing::RunCli;
using testing::Snapshot;
using testing::TempDir;
using testing::WriteFile;

std::map<std::string, bool> Skips(const PipelineResult& result) {
  std::map<std::string, bool> out;
  for (const auto& s : result.stages) out[s.name] = s.skipped;
  return out;
}

nlohmann::json ReadJson(const fs::path& path) {
  return nlohmann::json::parse(ReadFile(path));
}

void WriteJson(const fs::path& path, const nlohmann::json& j) {
  WriteFile(path, j.dump(2));
}

TEST(PipelineConfigTest, LoadsFixtureAndResolvesPaths) {
  TempDir dir;
  const auto fx = CopyFixture(dir.path());
  const auto config = LoadPipelineConfig(fx / "pipeline.json");
  EXPECT_EQ(config.pivot, LanguageCode("en"));
  EXPECT_EQ(config.languages.size(), 3u);
  EXPECT_EQ(config.out_dir, fx / "out");
  EXPECT_EQ(config.source, fx / "source_en.jsonl");
  EXPECT_EQ(config.train.seed, config.seed);
  EXPECT_EQ(config.encoder.seed, config.seed);
  EXPECT_EQ(config.train.tasks.size(), 3u);
}

TEST(PipelineConfigTest, RejectsInconsistentConfigs) {
  TempDir dir;
  const auto fx = CopyFixture(dir.path());
  const auto base = ReadJson(fx / "pipeline.json");

  auto bad = base;
  bad["pivot"] = "es";
  EXPECT_THROW(PipelineConfigFromJson(bad, fx), ValidationError);
  bad = base;
  bad["translators"].erase("fr");
  EXPECT_THROW(PipelineConfigFromJson(bad, fx), ValidationError);
  bad = base;
  bad["translators"]["fr"] = "google";
  EXPECT_THROW(PipelineConfigFromJson(bad, fx), ValidationError);
  bad = base;
  bad["stop_words"].erase("de");
  EXPECT_THROW(PipelineConfigFromJson(bad, fx), ValidationError);
  bad = base;
  bad["mask_ratio"] = 1.5;
  EXPECT_THROW(PipelineConfigFromJson(bad, fx), ValidationError);
  bad = base;
  bad["encoder"]["heads"] = 3;
  EXPECT_THROW(PipelineConfigFromJson(bad, fx), ValidationError);
  bad = base;
  bad["mix_mode"] = "some";
  EXPECT_THROW(PipelineConfigFromJson(bad, fx), ValidationError);

  WriteFile(fx / "broken.json", "{\"seed\": ");
  EXPECT_THROW(LoadPipelineConfig(fx / "broken.json"), ParseError);
  EXPECT_THROW(LoadPipelineConfig(fx / "missing.json"), IoError);
}

TEST(PipelineTest, RunsEveryStageAndWritesArtifacts) {
  TempDir dir;
  const auto fx = CopyFixture(dir.path());
  const auto config = LoadPipelineConfig(fx / "pipeline.json");
  const auto result = RunPipeline(config);
  const std::vector<std::string> expected = {
      "translate_de", "translate_fr", "mix",  "mine_de", "mine_en", "mine_fr",
      "attach",       "vocab",        "mask", "train",   "eval"};
  ASSERT_EQ(result.stages.size(), expected.size());
  for (size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(result.stages[i].name, expected[i]);
    EXPECT_FALSE(result.stages[i].skipped);
  }
  const fs::path out = fx / "out";
  for (const char* f :
       {"manifest.json", "translated/de.jsonl", "translated/fr.jsonl", "mix.jsonl",
        "phrases/en.jsonl", "lakm_corpus.jsonl", "vocab.txt", "masked.jsonl",
        "model.bin", "curves.csv", "predictions.jsonl", "report.json",
        "stats/translate_de.json", "stats/mix.json", "stats/mine_en.json",
        "stats/attach.json", "stats/train.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const auto mix = LoadDataset(out / "mix.jsonl");
  ASSERT_FALSE(mix.empty());
  for (const auto& q : mix) {
    ASSERT_TRUE(q.q_lang.has_value());
    ASSERT_NE(*q.q_lang, q.lang);
  }
  const auto report = ReadJson(out / "report.json");
  EXPECT_TRUE(report["per_language"].contains("de"));
  EXPECT_TRUE(report["gaps"].contains("fr"));
  EXPECT_EQ(result.manifest, ReadJson(out / "manifest.json"));
}

TEST(PipelineTest, TwoRunsAreByteIdentical) {
  TempDir a, b;
  const auto fa = CopyFixture(a.path());
  const auto fb = CopyFixture(b.path());
  RunPipeline(LoadPipelineConfig(fa / "pipeline.json"));
  RunPipeline(LoadPipelineConfig(fb / "pipeline.json"));
  const auto sa = Snapshot(fa / "out");
  const auto sb = Snapshot(fb / "out");
  ASSERT_EQ(sa.size(), sb.size());
  for (const auto& [name, bytes] : sa) {
    ASSERT_TRUE(sb.contains(name)) << name;
    EXPECT_TRUE(sb.at(name) == bytes) << name;
  }
}

TEST(PipelineTest, ParallelJobsMatchSerial) {
  TempDir a, b;
  const auto fa = CopyFixture(a.path());
  const auto fb = CopyFixture(b.path());
  auto serial = LoadPipelineConfig(fa / "pipeline.json");
  auto parallel = LoadPipelineConfig(fb / "pipeline.json");
  parallel.jobs = 3;
  RunPipeline(serial);
  RunPipeline(parallel);
  EXPECT_EQ(Snapshot(fa / "out"), Snapshot(fb / "out"));
}

TEST(PipelineTest, RerunSkipsUpToDateStagesAndForceReruns) {
  TempDir dir;
  const auto fx = CopyFixture(dir.path());
  const auto config = LoadPipelineConfig(fx / "pipeline.json");
  RunPipeline(config);
  const auto before = Snapshot(fx / "out");
  const auto again = RunPipeline(config);
  for (const auto& s : again.stages) EXPECT_TRUE(s.skipped) << s.name;
  EXPECT_EQ(Snapshot(fx / "out"), before);
  const auto forced = RunPipeline(config, /*force=*/true);
  for (const auto& s : forced.stages) EXPECT_FALSE(s.skipped) << s.name;
  EXPECT_EQ(Snapshot(fx / "out"), before);
}

TEST(PipelineTest, ChangedInputsInvalidateDependentStagesOnly) {
  TempDir dir;
  const auto fx = CopyFixture(dir.path());
  const auto config = LoadPipelineConfig(fx / "pipeline.json");
  RunPipeline(config);

  // A dev-set change only affects scoring.
  std::string dev = ReadFile(fx / "dev.jsonl");
  dev = dev.substr(0, dev.rfind('\n', dev.size() - 2) + 1);
  WriteFile(fx / "dev.jsonl", dev);
  auto skips = Skips(RunPipeline(config));
  for (const auto& [name, skipped] : skips) {
    EXPECT_EQ(skipped, name != "eval") << name;
  }

  // A lexicon change reruns its translation and everything downstream of it.
  std::string lexicon = ReadFile(fx / "lexicon_de.tsv");
  const size_t at = lexicon.find("\tund\n");
  ASSERT_NE(at, std::string::npos);
  lexicon.replace(at, 5, "\tsowie\n");
  WriteFile(fx / "lexicon_de.tsv", lexicon);
  skips = Skips(RunPipeline(config));
  EXPECT_FALSE(skips["translate_de"]);
  EXPECT_TRUE(skips["translate_fr"]);
  EXPECT_FALSE(skips["mix"]);
  EXPECT_TRUE(skips["mine_de"]);
  EXPECT_TRUE(skips["mine_en"]);
  EXPECT_TRUE(skips["attach"]);
  EXPECT_FALSE(skips["vocab"]);
  EXPECT_FALSE(skips["train"]);
  EXPECT_FALSE(skips["eval"]);
}

TEST(PipelineTest, TamperedOutputIsRebuilt) {
  TempDir dir;
  const auto fx = CopyFixture(dir.path());
  const auto config = LoadPipelineConfig(fx / "pipeline.json");
  RunPipeline(config);
  const std::string original = ReadFile(fx / "out" / "mix.jsonl");
  WriteFile(fx / "out" / "mix.jsonl", "tampered\n");
  const auto skips = Skips(RunPipeline(config));
  EXPECT_FALSE(skips.at("mix"));
  EXPECT_TRUE(skips.at("translate_de"));
  EXPECT_EQ(ReadFile(fx / "out" / "mix.jsonl"), original);
}

TEST(PipelineTest, StageFailureRemovesPartialOutputs) {
  TempDir dir;
  const auto fx = CopyFixture(dir.path());
  const auto config = LoadPipelineConfig(fx / "pipeline.json");
  std::ofstream(fx / "lexicon_fr.tsv", std::ios::app) << "no tab on this line\n";
  try {
    RunPipeline(config);
    FAIL() << "expected a stage error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "translate_fr");
  }
  EXPECT_TRUE(fs::exists(fx / "out" / "translated" / "de.jsonl"));
  EXPECT_FALSE(fs::exists(fx / "out" / "translated" / "fr.jsonl"));
  EXPECT_FALSE(fs::exists(fx / "out" / "stats" / "translate_fr.json"));
  EXPECT_FALSE(fs::exists(fx / "out" / "mix.jsonl"));
  const auto manifest = ReadJson(fx / "out" / "manifest.json");
  EXPECT_TRUE(manifest.contains("translate_de"));
  EXPECT_FALSE(manifest.contains("translate_fr"));
}

TEST(PipelineTest, TomlConfigGivesSameArtifacts) {
  TempDir a, b;
  const auto fa = CopyFixture(a.path());
  const auto fb = CopyFixture(b.path());
  WriteFile(fb / "pipeline.toml", R"toml(seed = 1
jobs = 1
pivot = "en"
languages = ["en", "de", "fr"]
out_dir = "out"
source = "source_en.jsonl"
dev = "dev.jsonl"
passages = "passages.jsonl"
mix_mode = "pivot"
mask_ratio = 0.15
vocab_size = 400

[markers]
open = "(["
close = "])"

[translators]
de = "dict:lexicon_de.tsv"
fr = "dict:lexicon_fr.tsv"

[query_logs]
en = "querylog_en.jsonl"
de = "querylog_de.jsonl"
fr = "querylog_fr.jsonl"

[stop_words]
en = "stops_en.txt"
de = "stops_de.txt"
fr = "stops_fr.txt"

[mining]
threshold = 0.7
ngram_min = 2
ngram_max = 4

[encoder]
embed_dim = 16
layers = 1
heads = 2
max_len_mrc = 64
max_len_lakm = 64

[train]
batch_size = 8
learning_rate = 0.01
max_steps = 150
tasks = ["main", "mix", "lakm"]
)toml");
  RunPipeline(LoadPipelineConfig(fa / "pipeline.json"));
  RunPipeline(LoadPipelineConfig(fb / "pipeline.toml"));
  EXPECT_EQ(Snapshot(fa / "out"), Snapshot(fb / "out"));
}

TEST(CliTest, PipelineExitCodes) {
  TempDir dir;
  const auto fx = CopyFixture(dir.path());
  const std::string cfg = "'" + (fx / "pipeline.json").string() + "'";
  EXPECT_EQ(RunCli("pipeline --config " + cfg, dir / "run1.log"), 0)
      << ReadFile(dir / "run1.log");
  const auto first = Snapshot(fx / "out");
  EXPECT_EQ(RunCli("pipeline --config " + cfg, dir / "run2.log"), 0);
  EXPECT_NE(ReadFile(dir / "run2.log").find("skipped"), std::string::npos);
  EXPECT_EQ(RunCli("--log-level debug pipeline --force --config " + cfg), 0);
  EXPECT_EQ(Snapshot(fx / "out"), first);

  auto bad = ReadJson(fx / "pipeline.json");
  bad["pivot"] = "es";
  bad["out_dir"] = "bad_out";
  WriteJson(fx / "bad.json", bad);
  EXPECT_EQ(RunCli("pipeline --config '" + (fx / "bad.json").string() + "'"), 2);
  EXPECT_FALSE(fs::exists(fx / "bad_out"));

  auto failing = ReadJson(fx / "pipeline.json");
  failing["out_dir"] = "fail_out";
  failing["translators"]["de"] = "dict:broken.tsv";
  WriteFile(fx / "broken.tsv", "oops\n");
  WriteJson(fx / "failing.json", failing);
  EXPECT_EQ(RunCli("pipeline --config '" + (fx / "failing.json").string() + "'",
                   dir / "fail.log"),
            3);
  EXPECT_NE(ReadFile(dir / "fail.log").find("translate_de"), std::string::npos);
  EXPECT_FALSE(fs::exists(fx / "fail_out" / "translated" / "de.jsonl"));
}

TEST(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(RunCli(""), 2);
  EXPECT_EQ(RunCli("frobnicate"), 2);
  EXPECT_EQ(RunCli("translate --in x.jsonl"), 2);
  EXPECT_EQ(RunCli("--jobs 0 synth --out /tmp/never"), 2);
  EXPECT_EQ(RunCli("mix --source a --out b --mode sideways"), 2);
}

TEST(CliTest, StageSubcommandsChain) {
  TempDir dir;
  const auto fx = CopyFixture(dir.path());
  const auto p = [&](const std::string& name) {
    return "'" + (fx / name).string() + "'";
  };
  const auto o = [&](const std::string& name) {
    return "'" + (dir / name).string() + "'";
  };
  ASSERT_EQ(RunCli("translate --in " + p("source_en.jsonl") +
                   " --target de --translator dict:" + p("lexicon_de.tsv") +
                   " --out " + o("de.jsonl") + " --stats " + o("de_stats.json")),
            0);
  const auto stats = ReadJson(dir / "de_stats.json");
  EXPECT_EQ(stats["source_count"].get<int>(), 200);
  EXPECT_GT(stats["kept_count"].get<int>(), 0);
  ASSERT_EQ(RunCli("translate --in " + p("source_en.jsonl") +
                   " --target fr --translator dict:" + p("lexicon_fr.tsv") +
                   " --out " + o("fr.jsonl")),
            0);
  ASSERT_EQ(RunCli("mix --source " + p("source_en.jsonl") + " --translated de=" +
                   o("de.jsonl") + " --translated fr=" + o("fr.jsonl") +
                   " --mode all_pairs --out " + o("mix.jsonl")),
            0);
  EXPECT_FALSE(LoadDataset(dir / "mix.jsonl").empty());
  ASSERT_EQ(RunCli("mine --log " + p("querylog_en.jsonl") + " --stops " +
                   p("stops_en.txt") + " --threshold 0.7 --ngram 2:4 --out " +
                   o("phr.jsonl") + " --stats " + o("mine.json")),
            0);
  ASSERT_EQ(RunCli("attach --passages " + p("passages.jsonl") + " --phrases " +
                   o("phr.jsonl") + " --out " + o("corpus.jsonl")),
            0);
  ASSERT_EQ(RunCli("build-vocab --dataset " + p("source_en.jsonl") + " --corpus " +
                   o("corpus.jsonl") + " --size 400 --out " + o("vocab.txt")),
            0);
  ASSERT_EQ(RunCli("--seed 3 mask --corpus " + o("corpus.jsonl") + " --vocab " +
                   o("vocab.txt") + " --ratio 0.15 --max-len 64 --out " +
                   o("masked.jsonl")),
            0);
  WriteFile(dir / "train.toml",
            "[encoder]\nembed_dim = 16\nlayers = 1\nheads = 2\nmax_len_mrc = 64\n"
            "max_len_lakm = 64\n[train]\nmax_steps = 20\nlearning_rate = 0.01\n");
  ASSERT_EQ(RunCli("train --task main=" + p("source_en.jsonl") + " --task lakm=" +
                   o("masked.jsonl") + " --vocab " + o("vocab.txt") + " --config " +
                   o("train.toml") + " --out " + o("model.bin") + " --curves " +
                   o("curves.csv"), dir / "train.log"),
            0)
      << ReadFile(dir / "train.log");
  const std::string curves = ReadFile(dir / "curves.csv");
  EXPECT_EQ(std::count(curves.begin(), curves.end(), '\n'), 21);
  ASSERT_EQ(RunCli("predict --model " + o("model.bin") + " --vocab " +
                   o("vocab.txt") + " --in " + p("dev.jsonl") + " --out " +
                   o("pred.jsonl")),
            0);
  ASSERT_EQ(RunCli("eval --pred " + o("pred.jsonl") + " --gold " + p("dev.jsonl") +
                   " --report " + o("a.json")),
            0);
  ASSERT_EQ(RunCli("eval --pred " + o("pred.jsonl") + " --gold " + p("dev.jsonl") +
                   " --pivot de --report " + o("b.json")),
            0);
  EXPECT_EQ(ReadJson(dir / "b.json")["pivot"], "de");
  ASSERT_EQ(RunCli("compare --report a=" + o("a.json") + " --report b=" +
                   o("b.json") + " --out " + o("cmp.md")),
            0);
  const std::string md = ReadFile(dir / "cmp.md");
  EXPECT_NE(md.find("| language | en |"), std::string::npos) << md;
  EXPECT_NE(md.find("+0.0"), std::string::npos) << md;
}

}  // namespace
}  // namespace mlmrc
