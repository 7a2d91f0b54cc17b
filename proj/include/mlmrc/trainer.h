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

#ifndef MLMRC_TRAINER_H_
#define MLMRC_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mlmrc/corpus.h"
#include "mlmrc/lakm_masker.h"
#include "mlmrc/model.h"
#include "mlmrc/subword.h"

namespace mlmrc {

enum class Task { kMainMrc, kMixMrc, kLakm };

std::string_view ToString(Task task);
// Accepts "main"/"main_mrc", "mix"/"mix_mrc", "lakm".
Task ParseTask(std::string_view name);

inline constexpr int kMaxAnswerTokens = 30;

// [Start] question [Delim] passage [Delim], with the gold span mapped from
// byte offsets to token positions.
struct MrcFeature {
  std::string id;
  std::string lang_key;  // "{question lang}-{passage lang}"
  std::vector<TokenId> ids;
  int passage_begin = 0;  // first passage token position
  int passage_end = 0;    // one past the last passage token
  std::vector<ByteRange> passage_ranges;  // byte ranges of passage tokens
  int gold_start = -1;
  int gold_end = -1;
};

// Returns nullopt when the first answer cannot be mapped to tokens, e.g.
// because passage truncation cut it off. When the sequence exceeds
// `max_length` the question is capped at half the budget and the passage
// is truncated.
std::optional<MrcFeature> BuildMrcFeature(const QAInstance& instance,
                                          const SubwordVocab& vocab,
                                          int max_length);

struct FeatureSet {
  std::vector<MrcFeature> features;
  size_t skipped = 0;
};

FeatureSet BuildMrcFeatures(std::span<const QAInstance> instances,
                            const SubwordVocab& vocab, int max_length);

// Mean over the batch of -log p_start(gold) - log p_end(gold), softmax
// over all sequence positions. When `grad` is non-null the gradient is
// added into it. Throws ValidationError on an empty batch.
double MrcLoss(std::span<const MrcFeature> batch, const ModelParams& params,
               std::vector<double>* grad);
// Same, from raw instances; unmappable instances are skipped.
double MrcLoss(std::span<const QAInstance> batch, const SubwordVocab& vocab,
               const ModelParams& params, std::vector<double>* grad);

// Batch mean over examples of the sum over selected positions t of
// -log softmax(W h_t + b)[target]. Inputs longer than max_len_lakm are
// truncated (selections beyond it dropped). Throws ValidationError when
// the batch has no selections.
double LakmLoss(std::span<const MaskedExample> batch, const ModelParams& params,
                std::vector<double>* grad);

struct SpanLogits {
  Vector start;
  Vector end;
};

SpanLogits ComputeSpanLogits(const MrcFeature& feature, const ModelParams& params);

struct TokenSpan {
  int start = 0;
  int end = 0;  // inclusive
};

// Best (start, end) with passage_begin <= start <= end < passage_end and
// end - start + 1 <= max_tokens, maximizing start + end logits. Earliest
// pair wins ties.
TokenSpan DecodeSpan(const Vector& start_logits, const Vector& end_logits,
                     int passage_begin, int passage_end,
                     int max_tokens = kMaxAnswerTokens);

// Decodes and maps the token span back to passage bytes. Returns nullopt
// when the passage has no tokens.
std::optional<AnswerSpan> PredictSpan(const QAInstance& instance,
                                      const SubwordVocab& vocab,
                                      const ModelParams& params);

struct TrainConfig {
  double learning_rate = 3e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int batch_size = 8;
  int max_steps = 1000;
  std::vector<Task> tasks = {Task::kMainMrc};
  uint64_t seed = 0;
  // Early stop on dev EM: evaluate every `eval_every` steps (0 = never) and
  // stop after `patience` evaluations without improvement.
  int eval_every = 0;
  int patience = 0;

  void Validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& config);
void from_json(const nlohmann::json& j, TrainConfig& config);

struct TrainData {
  std::vector<QAInstance> main;
  std::vector<QAInstance> mix;
  std::vector<MaskedExample> lakm;
  std::vector<QAInstance> dev;  // only used for early stopping
};

struct CurvePoint {
  int step = 0;
  Task task = Task::kMainMrc;
  double loss = 0.0;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct TrainResult {
  std::vector<CurvePoint> curve;
  std::vector<size_t> epochs;         // completed epochs per task in tasks order
  std::vector<size_t> skipped;        // unmappable MRC instances per task
  std::vector<double> dev_em;         // one per evaluation
  bool stopped_early = false;
};

// Step i trains tasks[i % tasks.size()] on the next batch of that task's
// stream and applies one Adam update to `params`. Each stream is drawn
// without replacement and reshuffled at the end of an epoch; MRC streams
// interleave languages. Deterministic for a fixed seed.
TrainResult Train(const TrainData& data, const SubwordVocab& vocab,
                  ModelParams& params, const TrainConfig& config,
                  const std::function<void(const std::string&)>& log = {});

void WriteCurves(std::span<const CurvePoint> curve,
                 const std::filesystem::path& path);

// Adam with bias correction.
class AdamOptimizer {
 public:
  AdamOptimizer(size_t size, double learning_rate, double beta1, double beta2,
                double epsilon);
  void Step(std::vector<double>& params, const std::vector<double>& grad);
  int64_t steps() const { return steps_; }

 private:
  double learning_rate_, beta1_, beta2_, epsilon_;
  std::vector<double> m_, v_;
  int64_t steps_ = 0;
};

}  // namespace mlmrc

#endif  // MLMRC_TRAINER_H_
