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

#include <openssl/evp.h>

#include <fstream>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

#include "mlmrc/lakm_masker.h"
#include "mlmrc/subword.h"

namespace mlmrc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path Resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

template <typename T>
T Get(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<T>();
}

struct Stage {
  std::string name;
  std::vector<fs::path> inputs;
  json params;
  std::vector<fs::path> outputs;
  std::function<void()> run;
};

std::string ManifestKey(const fs::path& path, const fs::path& out_dir) {
  return path.lexically_relative(out_dir).generic_string();
}

void WriteJsonFile(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

json ReadJsonFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace

std::string Sha256File(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 initialization failed");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, in.gcount());
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xF]);
  }
  return hex;
}

json LoadConfigDocument(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string content = buffer.str();

  const auto parse_toml = [&]() {
    try {
      std::ostringstream converted;
      converted << toml::json_formatter{toml::parse(content, path.string())};
      return json::parse(converted.str());
    } catch (const toml::parse_error& e) {
      throw ParseError(path.string() + ": invalid TOML: " +
                       std::string(e.description()));
    }
  };
  const std::string ext = path.extension().string();
  if (ext == ".toml") return parse_toml();
  try {
    return json::parse(content);
  } catch (const json::exception& e) {
    if (ext == ".json") {
      throw ParseError(path.string() + ": invalid JSON: " + e.what());
    }
  }
  return parse_toml();
}

void PipelineConfig::Validate() const {
  if (languages.empty()) throw ValidationError("no languages configured");
  if (std::find(languages.begin(), languages.end(), pivot) == languages.end()) {
    throw ValidationError("pivot language '" + pivot.str() +
                          "' is not among the configured languages");
  }
  for (const auto& lang : languages) {
    if (lang != pivot && !translators.contains(lang)) {
      throw ValidationError("no translator configured for '" + lang.str() + "'");
    }
  }
  for (const auto& [lang, spec] : translators) {
    if (lang == pivot) throw ValidationError("translator given for the pivot");
    if (std::find(languages.begin(), languages.end(), lang) == languages.end()) {
      throw ValidationError("translator for unconfigured language '" +
                            lang.str() + "'");
    }
    if (spec != "identity" && spec.rfind("dict:", 0) != 0) {
      throw ValidationError("translator '" + spec +
                            "' must be 'identity' or 'dict:<lexicon>'");
    }
  }
  for (const auto& [lang, log] : query_logs) {
    if (std::find(languages.begin(), languages.end(), lang) == languages.end()) {
      throw ValidationError("query log for unconfigured language '" +
                            lang.str() + "'");
    }
    if (!stop_words.contains(lang)) {
      throw ValidationError("no stop-word list for '" + lang.str() + "'");
    }
  }
  if (out_dir.empty()) throw ValidationError("out_dir is required");
  if (source.empty()) throw ValidationError("source dataset is required");
  if (dev.empty()) throw ValidationError("dev dataset is required");
  if (jobs < 1) throw ValidationError("jobs must be >= 1");
  if (!(mask_ratio >= 0.0 && mask_ratio <= 1.0)) {
    throw ValidationError("mask_ratio must lie in [0, 1]");
  }
  markers.Validate();
  mining.Validate();
  train.Validate();
  EncoderConfig probe = encoder;
  probe.vocab_size = 1;
  probe.Validate();
}

PipelineConfig PipelineConfigFromJson(const json& j, const fs::path& base_dir) {
  PipelineConfig c;
  try {
    c.seed = Get<uint64_t>(j, "seed", 0);
    c.jobs = Get<int>(j, "jobs", 1);
    c.pivot = LanguageCode(Get<std::string>(j, "pivot", "en"));
    for (const auto& lang : j.at("languages")) {
      c.languages.emplace_back(lang.get<std::string>());
    }
    c.out_dir = Resolve(base_dir, Get<std::string>(j, "out_dir", "out"));
    c.source = Resolve(base_dir, j.at("source").get<std::string>());
    if (auto it = j.find("translators"); it != j.end()) {
      for (const auto& [lang, spec] : it->items()) {
        std::string value = spec.get<std::string>();
        if (value.rfind("dict:", 0) == 0) {
          value = "dict:" + Resolve(base_dir, value.substr(5)).string();
        }
        c.translators[LanguageCode(lang)] = value;
      }
    }
    if (auto it = j.find("markers"); it != j.end()) {
      c.markers.open = Get<std::string>(*it, "open", c.markers.open);
      c.markers.close = Get<std::string>(*it, "close", c.markers.close);
    }
    c.mix_mode = ParseMixMode(Get<std::string>(j, "mix_mode", "pivot"));
    if (auto it = j.find("query_logs"); it != j.end()) {
      for (const auto& [lang, path] : it->items()) {
        c.query_logs[LanguageCode(lang)] = Resolve(base_dir, path.get<std::string>());
      }
    }
    if (auto it = j.find("stop_words"); it != j.end()) {
      for (const auto& [lang, path] : it->items()) {
        c.stop_words[LanguageCode(lang)] = Resolve(base_dir, path.get<std::string>());
      }
    }
    if (auto it = j.find("passages"); it != j.end()) {
      c.passages = Resolve(base_dir, it->get<std::string>());
    }
    if (auto it = j.find("mining"); it != j.end()) {
      c.mining.threshold = Get<double>(*it, "threshold", c.mining.threshold);
      c.mining.ngram_min = Get<int>(*it, "ngram_min", c.mining.ngram_min);
      c.mining.ngram_max = Get<int>(*it, "ngram_max", c.mining.ngram_max);
      c.mining.ngram_cap = Get<int>(*it, "ngram_cap", c.mining.ngram_cap);
    }
    c.vocab_size = Get<size_t>(j, "vocab_size", c.vocab_size);
    c.mask_ratio = Get<double>(j, "mask_ratio", c.mask_ratio);
    c.encoder.seed = c.seed;
    c.train.seed = c.seed;
    if (auto it = j.find("encoder"); it != j.end()) it->get_to(c.encoder);
    if (auto it = j.find("train"); it != j.end()) it->get_to(c.train);
    c.dev = Resolve(base_dir, j.at("dev").get<std::string>());
    if (auto it = j.find("policy"); it != j.end()) it->get_to(c.policy);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("pipeline config: ") + e.what());
  }
  if (!c.query_logs.empty() && c.passages.empty()) {
    throw ValidationError("query logs given but no passages to attach phrases to");
  }
  c.Validate();
  return c;
}

PipelineConfig LoadPipelineConfig(const fs::path& path) {
  return PipelineConfigFromJson(LoadConfigDocument(path),
                                fs::absolute(path).parent_path());
}

std::unique_ptr<Translator> MakeTranslator(const std::string& spec) {
  if (spec == "identity") return std::make_unique<IdentityTranslator>();
  if (spec.rfind("dict:", 0) == 0) {
    return std::make_unique<DictionaryTranslator>(
        DictionaryTranslator::FromTsv(spec.substr(5)));
  }
  throw ValidationError("unknown translator '" + spec + "'");
}

PipelineResult RunPipeline(const PipelineConfig& config, bool force,
                           const std::function<void(const std::string&)>& log) {
  config.Validate();
  const auto note = [&](const std::string& msg) {
    if (log) log(msg);
  };
  const fs::path out = config.out_dir;
  fs::create_directories(out / "translated");
  fs::create_directories(out / "phrases");
  fs::create_directories(out / "stats");

  std::vector<LanguageCode> targets;
  for (const auto& lang : config.languages) {
    if (lang != config.pivot) targets.push_back(lang);
  }
  const auto translated_path = [&](const LanguageCode& lang) {
    return out / "translated" / (lang.str() + ".jsonl");
  };
  std::vector<fs::path> translated_files;
  for (const auto& lang : targets) translated_files.push_back(translated_path(lang));

  std::vector<Stage> stages;

  for (const auto& lang : targets) {
    Stage s;
    s.name = "translate_" + lang.str();
    s.inputs = {config.source};
    const std::string& spec = config.translators.at(lang);
    if (spec.rfind("dict:", 0) == 0) s.inputs.emplace_back(spec.substr(5));
    s.params = {{"target", lang.str()},
                {"translator", spec.rfind("dict:", 0) == 0 ? "dict" : spec},
                {"open", config.markers.open},
                {"close", config.markers.close}};
    s.outputs = {translated_path(lang), out / "stats" / (s.name + ".json")};
    s.run = [&config, lang, spec, outputs = s.outputs] {
      const auto source = LoadDataset(config.source, config.pivot);
      const auto translator = MakeTranslator(spec);
      auto result =
          TranslateDataset(source, lang, *translator, config.markers, config.jobs);
      SaveDataset(result.instances, outputs[0]);
      WriteJsonFile(outputs[1], json(result.stats));
    };
    stages.push_back(std::move(s));
  }

  {
    Stage s;
    s.name = "mix";
    s.inputs = {config.source};
    s.inputs.insert(s.inputs.end(), translated_files.begin(), translated_files.end());
    s.params = {{"mode", config.mix_mode == MixMode::kPivot ? "pivot" : "all_pairs"}};
    s.outputs = {out / "mix.jsonl", out / "stats" / "mix.json"};
    s.run = [&config, &targets, translated_path, outputs = s.outputs] {
      const auto source = LoadDataset(config.source, config.pivot);
      std::vector<TranslatedSet> translated;
      for (const auto& lang : targets) {
        translated.emplace_back(lang, LoadDataset(translated_path(lang), lang));
      }
      const auto aligned = Align(source, translated);
      const auto mixed = BuildMixed(aligned.groups, config.mix_mode);
      SaveDataset(mixed, outputs[0]);
      WriteJsonFile(outputs[1], {{"groups", aligned.groups.size()},
                                 {"dropped", aligned.dropped},
                                 {"orphans", aligned.orphans},
                                 {"mixed", mixed.size()}});
    };
    stages.push_back(std::move(s));
  }

  std::vector<fs::path> phrase_files;
  for (const auto& [lang, log_path] : config.query_logs) {
    Stage s;
    s.name = "mine_" + lang.str();
    s.inputs = {log_path, config.stop_words.at(lang)};
    s.params = {{"threshold", config.mining.threshold},
                {"ngram_min", config.mining.ngram_min},
                {"ngram_max", config.mining.ngram_max}};
    s.outputs = {out / "phrases" / (lang.str() + ".jsonl"),
                 out / "stats" / (s.name + ".json")};
    phrase_files.push_back(s.outputs[0]);
    s.run = [&config, lang, log_path, outputs = s.outputs] {
      const auto records = LoadQueryLog(log_path);
      const auto stops = StopWordList::FromFile(config.stop_words.at(lang), lang);
      for (const auto& r : records) {
        if (r.lang != lang) {
          throw ValidationError("query log record in '" + r.lang.str() +
                                "' inside the '" + lang.str() + "' log");
        }
      }
      const auto result = Mine(records, config.mining, stops);
      SavePhrases(result.phrases, outputs[0]);
      WriteJsonFile(outputs[1], json(result.stats));
    };
    stages.push_back(std::move(s));
  }

  const fs::path corpus_path = out / "lakm_corpus.jsonl";
  const bool have_lakm = !config.query_logs.empty();
  if (have_lakm) {
    Stage s;
    s.name = "attach";
    s.inputs = {config.passages};
    s.inputs.insert(s.inputs.end(), phrase_files.begin(), phrase_files.end());
    s.outputs = {corpus_path, out / "stats" / "attach.json"};
    s.run = [&config, phrase_files, outputs = s.outputs] {
      const auto passages = LoadPassages(config.passages);
      std::vector<KnowledgePhraseEntry> phrases;
      for (const auto& file : phrase_files) {
        auto more = LoadPhrases(file);
        phrases.insert(phrases.end(), more.begin(), more.end());
      }
      const auto corpus = AttachPhrases(passages, phrases, config.jobs);
      SavePhraseCorpus(corpus, outputs[0]);
      WriteJsonFile(outputs[1], json(PhraseStats(corpus)));
    };
    stages.push_back(std::move(s));
  }

  const fs::path vocab_path = out / "vocab.txt";
  {
    Stage s;
    s.name = "vocab";
    s.inputs = {config.source};
    s.inputs.insert(s.inputs.end(), translated_files.begin(), translated_files.end());
    if (have_lakm) s.inputs.push_back(corpus_path);
    s.params = {{"max_size", config.vocab_size}};
    s.outputs = {vocab_path};
    s.run = [&config, files = s.inputs, have_lakm, corpus_path, outputs = s.outputs] {
      std::vector<std::string> texts;
      for (const auto& file : files) {
        if (have_lakm && file == corpus_path) {
          for (auto& p : LoadPhraseCorpus(file)) texts.push_back(std::move(p.passage));
          continue;
        }
        for (auto& instance : LoadDataset(file)) {
          texts.push_back(std::move(instance.question));
          texts.push_back(std::move(instance.passage));
        }
      }
      SubwordVocab::Build(texts, config.vocab_size).Save(outputs[0]);
    };
    stages.push_back(std::move(s));
  }

  const fs::path masked_path = out / "masked.jsonl";
  if (have_lakm) {
    Stage s;
    s.name = "mask";
    s.inputs = {corpus_path, vocab_path};
    s.params = {{"ratio", config.mask_ratio},
                {"seed", config.seed},
                {"max_len", config.encoder.max_len_lakm}};
    s.outputs = {masked_path};
    s.run = [&config, corpus_path, vocab_path, outputs = s.outputs] {
      const auto corpus = LoadPhraseCorpus(corpus_path);
      const auto vocab = SubwordVocab::Load(vocab_path);
      const auto masked =
          MaskCorpus(corpus, vocab, config.mask_ratio, config.seed,
                     static_cast<size_t>(config.encoder.max_len_lakm), config.jobs);
      SaveMaskedExamples(masked, outputs[0]);
    };
    stages.push_back(std::move(s));
  }

  const fs::path model_path = out / "model.bin";
  {
    Stage s;
    s.name = "train";
    s.inputs = {config.source, out / "mix.jsonl", vocab_path};
    s.inputs.insert(s.inputs.end(), translated_files.begin(), translated_files.end());
    if (have_lakm) s.inputs.push_back(masked_path);
    s.params = {{"encoder", config.encoder}, {"train", config.train}};
    s.outputs = {model_path, out / "curves.csv", out / "stats" / "train.json"};
    s.run = [&config, &targets, translated_path, have_lakm, masked_path, vocab_path,
             note, outputs = s.outputs, mix_path = out / "mix.jsonl"] {
      const auto vocab = SubwordVocab::Load(vocab_path);
      TrainData data;
      data.main = LoadDataset(config.source, config.pivot);
      for (const auto& lang : targets) {
        for (auto& instance : LoadDataset(translated_path(lang), lang)) {
          instance.id += "::" + lang.str();
          data.main.push_back(std::move(instance));
        }
      }
      data.mix = LoadDataset(mix_path);
      if (have_lakm) data.lakm = LoadMaskedExamples(masked_path);
      TrainConfig train = config.train;
      std::erase_if(train.tasks, [&](Task t) {
        return (t == Task::kLakm && data.lakm.empty()) ||
               (t == Task::kMixMrc && data.mix.empty());
      });
      EncoderConfig encoder = config.encoder;
      encoder.vocab_size = static_cast<int>(vocab.size());
      ModelParams params(encoder, ParamInit::kRandom);
      const auto result = Train(data, vocab, params, train, note);
      params.Save(outputs[0]);
      WriteCurves(result.curve, outputs[1]);
      json stats = {{"steps", result.curve.size()}, {"epochs", result.epochs},
                    {"skipped", result.skipped}};
      if (!result.curve.empty()) {
        stats["first_loss"] = result.curve.front().loss;
        stats["last_loss"] = result.curve.back().loss;
      }
      WriteJsonFile(outputs[2], stats);
    };
    stages.push_back(std::move(s));
  }

  {
    Stage s;
    s.name = "eval";
    s.inputs = {model_path, vocab_path, config.dev};
    s.params = {{"policy", config.policy}, {"pivot", config.pivot}};
    s.outputs = {out / "predictions.jsonl", out / "report.json"};
    s.run = [&config, model_path, vocab_path, outputs = s.outputs] {
      const auto params = ModelParams::Load(model_path);
      const auto vocab = SubwordVocab::Load(vocab_path);
      const auto dev = LoadDataset(config.dev);
      std::vector<std::pair<std::string, std::string>> predictions;
      std::unordered_map<std::string, std::string> by_id;
      for (const auto& instance : dev) {
        const auto span = PredictSpan(instance, vocab, params);
        const std::string text = span ? span->text : std::string();
        predictions.emplace_back(instance.id, text);
        by_id.emplace(instance.id, text);
      }
      SavePredictions(predictions, outputs[0]);
      WriteJsonFile(outputs[1],
                    json(Evaluate(by_id, dev, config.policy, config.pivot)));
    };
    stages.push_back(std::move(s));
  }

  const fs::path manifest_path = out / "manifest.json";
  json manifest = json::object();
  if (fs::exists(manifest_path)) {
    try {
      manifest = ReadJsonFile(manifest_path);
    } catch (const Error&) {
      manifest = json::object();
    }
  }
  // Drop entries for stages that no longer exist in this configuration.
  {
    json kept = json::object();
    for (const auto& s : stages) {
      if (manifest.contains(s.name)) kept[s.name] = manifest[s.name];
    }
    manifest = std::move(kept);
  }

  PipelineResult result;
  for (const auto& stage : stages) {
    json inputs = json::object();
    for (const auto& in : stage.inputs) {
      if (!fs::exists(in)) {
        throw StageError(stage.name, "missing input " + in.string());
      }
      inputs[ManifestKey(in, out)] = Sha256File(in);
    }

    bool up_to_date = false;
    if (!force && manifest.contains(stage.name)) {
      const json& entry = manifest[stage.name];
      up_to_date = entry.value("inputs", json()) == inputs &&
                   entry.value("params", json()) == stage.params;
      if (up_to_date) {
        const json recorded = entry.value("outputs", json::object());
        for (const auto& o : stage.outputs) {
          const auto key = ManifestKey(o, out);
          if (!fs::exists(o) || !recorded.contains(key) ||
              recorded[key] != Sha256File(o)) {
            up_to_date = false;
            break;
          }
        }
      }
    }
    if (up_to_date) {
      note("stage " + stage.name + ": up to date, skipped");
      result.stages.push_back(StageReport{stage.name, true});
      continue;
    }

    note("stage " + stage.name + ": running");
    manifest.erase(stage.name);
    try {
      stage.run();
    } catch (const std::exception& e) {
      for (const auto& o : stage.outputs) {
        std::error_code ec;
        fs::remove(o, ec);
      }
      WriteJsonFile(manifest_path, manifest);
      throw StageError(stage.name, e.what());
    }
    json outputs = json::object();
    for (const auto& o : stage.outputs) outputs[ManifestKey(o, out)] = Sha256File(o);
    manifest[stage.name] = {
        {"inputs", inputs}, {"params", stage.params}, {"outputs", outputs}};
    WriteJsonFile(manifest_path, manifest);
    result.stages.push_back(StageReport{stage.name, false});
  }
  result.manifest = manifest;
  return result;
}

}  // namespace mlmrc
