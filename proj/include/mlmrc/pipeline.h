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

#ifndef MLMRC_PIPELINE_H_
#define MLMRC_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mlmrc/corpus.h"
#include "mlmrc/error.h"
#include "mlmrc/metrics.h"
#include "mlmrc/mix_builder.h"
#include "mlmrc/model.h"
#include "mlmrc/phrase_miner.h"
#include "mlmrc/span_translate.h"
#include "mlmrc/trainer.h"

namespace mlmrc {

// Raised when a pipeline stage fails; carries the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PipelineConfig {
  uint64_t seed = 0;
  int jobs = 1;
  LanguageCode pivot{"en"};
  std::vector<LanguageCode> languages;
  std::filesystem::path out_dir;

  std::filesystem::path source;  // pivot-language MRC dataset
  // Non-pivot language -> "identity" or "dict:<lexicon.tsv>".
  std::map<LanguageCode, std::string> translators;
  MarkerScheme markers;
  MixMode mix_mode = MixMode::kPivot;

  std::map<LanguageCode, std::filesystem::path> query_logs;
  std::map<LanguageCode, std::filesystem::path> stop_words;
  std::filesystem::path passages;
  MiningConfig mining;

  size_t vocab_size = 2000;
  double mask_ratio = 0.15;
  EncoderConfig encoder;  // vocab_size is filled from the built vocab
  TrainConfig train;

  std::filesystem::path dev;  // multilingual evaluation set
  NormalizationPolicy policy;

  // pivot in languages, every non-pivot language has a translator, query
  // logs only for configured languages, stage parameters within range.
  void Validate() const;
};

// Parses JSON or TOML (by extension, falling back to content sniffing).
// Relative paths resolve against the config file's directory. Throws
// ValidationError on bad values and ParseError on bad syntax.
PipelineConfig LoadPipelineConfig(const std::filesystem::path& path);
PipelineConfig PipelineConfigFromJson(const nlohmann::json& j,
                                      const std::filesystem::path& base_dir);

// Reads a JSON or TOML file into JSON.
nlohmann::json LoadConfigDocument(const std::filesystem::path& path);

// Lowercase hex SHA-256 of a file's bytes.
std::string Sha256File(const std::filesystem::path& path);

struct StageReport {
  std::string name;
  bool skipped = false;
};

struct PipelineResult {
  std::vector<StageReport> stages;
  nlohmann::json manifest;  // also written to out_dir/manifest.json
};

// Runs translate -> mix -> mine -> attach -> vocab -> mask -> train -> eval.
// A stage is skipped when the manifest records the same input hashes and
// parameters and its outputs still hash to the recorded values, unless
// `force`. On failure the failing stage's outputs are removed and a
// StageError is thrown.
PipelineResult RunPipeline(const PipelineConfig& config, bool force = false,
                           const std::function<void(const std::string&)>& log = {});

// Builds a translator from "identity" or "dict:<path>".
std::unique_ptr<Translator> MakeTranslator(const std::string& spec);

}  // namespace mlmrc

#endif  // MLMRC_PIPELINE_H_
