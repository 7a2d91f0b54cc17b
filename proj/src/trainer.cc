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

#include "mlmrc/trainer.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "mlmrc/error.h"
#include "mlmrc/metrics.h"
#include "mlmrc/random.h"

namespace mlmrc {

namespace {

// log(sum(exp(x)))
double LogSumExp(const Vector& x) {
  const double m = x.maxCoeff();
  return m + std::log((x.array() - m).exp().sum());
}

void EnsureGradient(std::vector<double>* grad, const ModelParams& params) {
  if (grad != nullptr && grad->size() != params.values().size()) {
    grad->assign(params.values().size(), 0.0);
  }
}

// Packs the sequence without mapping the answer.
MrcFeature PackMrc(const QAInstance& instance, const SubwordVocab& vocab,
                   int max_length, TokenizedText& passage_tokens) {
  const auto question = vocab.Tokenize(instance.question);
  passage_tokens = vocab.Tokenize(instance.passage);
  const size_t budget = max_length > 3 ? static_cast<size_t>(max_length) - 3 : 0;
  size_t q_keep = question.ids.size();
  if (q_keep + passage_tokens.ids.size() > budget) {
    const size_t room = passage_tokens.ids.size() < budget
                            ? budget - passage_tokens.ids.size()
                            : 0;
    q_keep = std::min(q_keep, std::max(room, budget / 2));
  }
  const size_t p_keep = std::min(passage_tokens.ids.size(), budget - q_keep);

  MrcFeature f;
  f.id = instance.id;
  f.lang_key = instance.question_lang().str() + "-" + instance.lang.str();
  f.ids.reserve(q_keep + p_keep + 3);
  f.ids.push_back(vocab.start_id());
  f.ids.insert(f.ids.end(), question.ids.begin(), question.ids.begin() + q_keep);
  f.ids.push_back(vocab.delim_id());
  f.passage_begin = static_cast<int>(f.ids.size());
  f.ids.insert(f.ids.end(), passage_tokens.ids.begin(),
               passage_tokens.ids.begin() + p_keep);
  f.passage_end = static_cast<int>(f.ids.size());
  f.ids.push_back(vocab.delim_id());
  f.passage_ranges.assign(passage_tokens.ranges.begin(),
                          passage_tokens.ranges.begin() + p_keep);
  return f;
}

// Draws batches of indices without replacement, reshuffling per epoch.
// Groups (languages) are shuffled separately and interleaved.
class IndexStream {
 public:
  IndexStream(std::vector<std::vector<size_t>> groups, uint64_t seed)
      : groups_(std::move(groups)), rng_(seed) {
    Reshuffle();
  }

  std::vector<size_t> Next(size_t batch_size, bool& epoch_ended) {
    std::vector<size_t> batch;
    epoch_ended = false;
    while (batch.size() < batch_size) {
      batch.push_back(order_[cursor_++]);
      if (cursor_ == order_.size()) {
        ++epochs_;
        epoch_ended = true;
        Reshuffle();
      }
      // A batch never repeats an item within one draw.
      if (batch.size() == order_.size()) break;
    }
    return batch;
  }

  size_t epochs() const { return epochs_; }

 private:
  void Reshuffle() {
    for (auto& g : groups_) rng_.Shuffle(g);
    order_.clear();
    size_t longest = 0;
    for (const auto& g : groups_) longest = std::max(longest, g.size());
    for (size_t i = 0; i < longest; ++i) {
      for (const auto& g : groups_) {
        if (i < g.size()) order_.push_back(g[i]);
      }
    }
    cursor_ = 0;
  }

  std::vector<std::vector<size_t>> groups_;
  Rng rng_;
  std::vector<size_t> order_;
  size_t cursor_ = 0;
  size_t epochs_ = 0;
};

std::vector<std::vector<size_t>> GroupByLanguage(
    std::span<const MrcFeature> features) {
  std::map<std::string, std::vector<size_t>> groups;
  for (size_t i = 0; i < features.size(); ++i) {
    groups[features[i].lang_key].push_back(i);
  }
  std::vector<std::vector<size_t>> out;
  for (auto& [key, g] : groups) out.push_back(std::move(g));
  return out;
}

}  // namespace

std::string_view ToString(Task task) {
  switch (task) {
    case Task::kMainMrc:
      return "main";
    case Task::kMixMrc:
      return "mix";
    case Task::kLakm:
      return "lakm";
  }
  return "main";
}

Task ParseTask(std::string_view name) {
  if (name == "main" || name == "main_mrc") return Task::kMainMrc;
  if (name == "mix" || name == "mix_mrc") return Task::kMixMrc;
  if (name == "lakm") return Task::kLakm;
  throw ValidationError("unknown task '" + std::string(name) + "'");
}

std::optional<MrcFeature> BuildMrcFeature(const QAInstance& instance,
                                          const SubwordVocab& vocab,
                                          int max_length) {
  TokenizedText passage;
  MrcFeature f = PackMrc(instance, vocab, max_length, passage);
  if (instance.answers.empty()) return std::nullopt;
  const AnswerSpan& answer = instance.answers.front();
  int first = -1;
  int last = -1;
  for (size_t i = 0; i < passage.ranges.size(); ++i) {
    const auto [b, e] = passage.ranges[i];
    if (b < answer.end && answer.start < e) {
      if (first < 0) first = static_cast<int>(i);
      last = static_cast<int>(i);
    }
  }
  const int kept = f.passage_end - f.passage_begin;
  if (first < 0 || last >= kept) return std::nullopt;
  f.gold_start = f.passage_begin + first;
  f.gold_end = f.passage_begin + last;
  return f;
}

FeatureSet BuildMrcFeatures(std::span<const QAInstance> instances,
                            const SubwordVocab& vocab, int max_length) {
  FeatureSet out;
  for (const auto& instance : instances) {
    if (auto f = BuildMrcFeature(instance, vocab, max_length)) {
      out.features.push_back(std::move(*f));
    } else {
      ++out.skipped;
    }
  }
  return out;
}

double MrcLoss(std::span<const MrcFeature> batch, const ModelParams& params,
               std::vector<double>* grad) {
  if (batch.empty()) throw ValidationError("MRC batch has no mappable instances");
  EnsureGradient(grad, params);
  const auto& layout = params.layout();
  const int d = params.config().embed_dim;
  const ConstVectorMap w_start(params.values().data() + layout.span_start, d);
  const ConstVectorMap w_end(params.values().data() + layout.span_end, d);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  double total = 0.0;
  for (const auto& f : batch) {
    EncoderPass pass(params, f.ids);
    const Matrix& h = pass.output();
    const Vector start = h * w_start;
    const Vector end = h * w_end;
    const double start_lse = LogSumExp(start);
    const double end_lse = LogSumExp(end);
    total += (start_lse - start[f.gold_start]) + (end_lse - end[f.gold_end]);
    if (grad == nullptr) continue;

    Vector d_start = (start.array() - start_lse).exp();
    Vector d_end = (end.array() - end_lse).exp();
    d_start[f.gold_start] -= 1.0;
    d_end[f.gold_end] -= 1.0;
    d_start *= inv_batch;
    d_end *= inv_batch;
    VectorMap(grad->data() + layout.span_start, d) += h.transpose() * d_start;
    VectorMap(grad->data() + layout.span_end, d) += h.transpose() * d_end;
    const Matrix d_h = d_start * w_start.transpose() + d_end * w_end.transpose();
    pass.Backward(d_h, *grad);
  }
  return total * inv_batch;
}

double MrcLoss(std::span<const QAInstance> batch, const SubwordVocab& vocab,
               const ModelParams& params, std::vector<double>* grad) {
  const auto features =
      BuildMrcFeatures(batch, vocab, params.config().max_len_mrc).features;
  return MrcLoss(std::span<const MrcFeature>(features), params, grad);
}

double LakmLoss(std::span<const MaskedExample> batch, const ModelParams& params,
                std::vector<double>* grad) {
  const auto& config = params.config();
  const auto& layout = params.layout();
  const int d = config.embed_dim;
  const int vocab = config.vocab_size;
  const ConstMatrixMap w(params.values().data() + layout.mlm_weight, vocab, d);
  const ConstVectorMap b(params.values().data() + layout.mlm_bias, vocab);
  const size_t limit = static_cast<size_t>(config.max_len_lakm);

  size_t selected = 0;
  for (const auto& e : batch) {
    for (const auto& s : e.selections) {
      if (static_cast<size_t>(s.pos) < std::min(limit, e.tokens.size())) ++selected;
    }
  }
  if (selected == 0) throw ValidationError("LAKM batch has no selected positions");
  EnsureGradient(grad, params);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  double total = 0.0;
  for (const auto& e : batch) {
    const size_t n = std::min(limit, e.tokens.size());
    bool any = false;
    for (const auto& s : e.selections) any |= static_cast<size_t>(s.pos) < n;
    if (!any) continue;
    EncoderPass pass(params, std::span<const TokenId>(e.tokens.data(), n));
    const Matrix& h = pass.output();
    Matrix d_h = Matrix::Zero(h.rows(), h.cols());
    for (const auto& s : e.selections) {
      if (static_cast<size_t>(s.pos) >= n) continue;
      const Vector logits = w * h.row(s.pos).transpose() + b;
      const double lse = LogSumExp(logits);
      total += lse - logits[s.target];
      if (grad == nullptr) continue;
      Vector d_logits = (logits.array() - lse).exp();
      d_logits[s.target] -= 1.0;
      d_logits *= inv_batch;
      MatrixMap(grad->data() + layout.mlm_weight, vocab, d).noalias() +=
          d_logits * h.row(s.pos);
      VectorMap(grad->data() + layout.mlm_bias, vocab) += d_logits;
      d_h.row(s.pos) += (w.transpose() * d_logits).transpose();
    }
    if (grad != nullptr) pass.Backward(d_h, *grad);
  }
  return total * inv_batch;
}

SpanLogits ComputeSpanLogits(const MrcFeature& feature, const ModelParams& params) {
  const auto& layout = params.layout();
  const int d = params.config().embed_dim;
  const Matrix h = Encode(feature.ids, params);
  return SpanLogits{
      h * ConstVectorMap(params.values().data() + layout.span_start, d),
      h * ConstVectorMap(params.values().data() + layout.span_end, d)};
}

TokenSpan DecodeSpan(const Vector& start_logits, const Vector& end_logits,
                     int passage_begin, int passage_end, int max_tokens) {
  TokenSpan best{passage_begin, passage_begin};
  double best_score = -std::numeric_limits<double>::infinity();
  for (int i = passage_begin; i < passage_end; ++i) {
    const int last = std::min(passage_end, i + max_tokens);
    for (int j = i; j < last; ++j) {
      const double score = start_logits[i] + end_logits[j];
      if (score > best_score) {
        best_score = score;
        best = TokenSpan{i, j};
      }
    }
  }
  return best;
}

std::optional<AnswerSpan> PredictSpan(const QAInstance& instance,
                                      const SubwordVocab& vocab,
                                      const ModelParams& params) {
  TokenizedText passage;
  const MrcFeature f = PackMrc(instance, vocab, params.config().max_len_mrc, passage);
  if (f.passage_end <= f.passage_begin) return std::nullopt;
  const auto logits = ComputeSpanLogits(f, params);
  const TokenSpan span =
      DecodeSpan(logits.start, logits.end, f.passage_begin, f.passage_end);
  AnswerSpan out;
  out.start = f.passage_ranges[span.start - f.passage_begin].first;
  out.end = f.passage_ranges[span.end - f.passage_begin].second;
  out.text = instance.passage.substr(out.start, out.end - out.start);
  return out;
}

void TrainConfig::Validate() const {
  if (tasks.empty()) throw ValidationError("training needs at least one task");
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
  if (batch_size <= 0) throw ValidationError("batch size must be positive");
  if (max_steps < 0) throw ValidationError("max_steps must be non-negative");
  if (eval_every < 0 || patience < 0) {
    throw ValidationError("eval_every and patience must be non-negative");
  }
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  std::vector<std::string> tasks;
  for (Task t : c.tasks) tasks.emplace_back(ToString(t));
  j = nlohmann::json{{"learning_rate", c.learning_rate},
                     {"adam_beta1", c.adam_beta1},
                     {"adam_beta2", c.adam_beta2},
                     {"adam_epsilon", c.adam_epsilon},
                     {"batch_size", c.batch_size},
                     {"max_steps", c.max_steps},
                     {"tasks", tasks},
                     {"seed", c.seed},
                     {"eval_every", c.eval_every},
                     {"patience", c.patience}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_steps = j.value("max_steps", c.max_steps);
  if (auto it = j.find("tasks"); it != j.end()) {
    c.tasks.clear();
    for (const auto& t : *it) c.tasks.push_back(ParseTask(t.get<std::string>()));
  }
  c.seed = j.value("seed", c.seed);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.patience = j.value("patience", c.patience);
}

AdamOptimizer::AdamOptimizer(size_t size, double learning_rate, double beta1,
                             double beta2, double epsilon)
    : learning_rate_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon),
      m_(size, 0.0),
      v_(size, 0.0) {}

void AdamOptimizer::Step(std::vector<double>& params,
                         const std::vector<double>& grad) {
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= learning_rate_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + epsilon_);
  }
}

TrainResult Train(const TrainData& data, const SubwordVocab& vocab,
                  ModelParams& params, const TrainConfig& config,
                  const std::function<void(const std::string&)>& log) {
  config.Validate();
  if (static_cast<size_t>(params.config().vocab_size) != vocab.size()) {
    throw ValidationError("model vocab_size " +
                          std::to_string(params.config().vocab_size) +
                          " does not match vocabulary size " +
                          std::to_string(vocab.size()));
  }
  const auto note = [&](const std::string& msg) {
    if (log) log(msg);
  };

  const int max_len = params.config().max_len_mrc;
  std::map<Task, FeatureSet> features;
  std::map<Task, IndexStream> streams;
  TrainResult result;
  for (size_t slot = 0; slot < config.tasks.size(); ++slot) {
    const Task task = config.tasks[slot];
    const uint64_t stream_seed =
        config.seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<uint64_t>(task) + 1));
    if (streams.contains(task)) continue;
    if (task == Task::kLakm) {
      if (data.lakm.empty()) throw ValidationError("task lakm has no data");
      std::vector<size_t> all(data.lakm.size());
      for (size_t i = 0; i < all.size(); ++i) all[i] = i;
      streams.emplace(task, IndexStream({std::move(all)}, stream_seed));
      continue;
    }
    const auto& instances = task == Task::kMainMrc ? data.main : data.mix;
    auto set = BuildMrcFeatures(instances, vocab, max_len);
    if (set.features.empty()) {
      throw ValidationError("task " + std::string(ToString(task)) +
                            " has no usable instances");
    }
    if (set.skipped > 0) {
      note("task " + std::string(ToString(task)) + ": skipped " +
           std::to_string(set.skipped) + " instances with unmappable answers");
    }
    streams.emplace(task,
                    IndexStream(GroupByLanguage(set.features), stream_seed));
    features.emplace(task, std::move(set));
  }

  AdamOptimizer adam(params.values().size(), config.learning_rate,
                     config.adam_beta1, config.adam_beta2, config.adam_epsilon);
  std::vector<double> grad(params.values().size(), 0.0);
  const NormalizationPolicy policy;
  double best_dev = -1.0;
  int stale = 0;

  for (int step = 0; step < config.max_steps; ++step) {
    const Task task = config.tasks[step % config.tasks.size()];
    bool epoch_ended = false;
    const auto batch_ids = streams.at(task).Next(
        static_cast<size_t>(config.batch_size), epoch_ended);
    if (epoch_ended) {
      note("task " + std::string(ToString(task)) + ": epoch " +
           std::to_string(streams.at(task).epochs()) + " finished at step " +
           std::to_string(step));
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    if (task == Task::kLakm) {
      std::vector<MaskedExample> batch;
      for (size_t i : batch_ids) batch.push_back(data.lakm[i]);
      loss = LakmLoss(batch, params, &grad);
    } else {
      const auto& all = features.at(task).features;
      std::vector<MrcFeature> batch;
      for (size_t i : batch_ids) batch.push_back(all[i]);
      loss = MrcLoss(std::span<const MrcFeature>(batch), params, &grad);
    }
    adam.Step(params.values(), grad);
    result.curve.push_back(CurvePoint{step, task, loss});

    if (config.eval_every > 0 && !data.dev.empty() &&
        (step + 1) % config.eval_every == 0) {
      double em = 0.0;
      for (const auto& instance : data.dev) {
        const auto span = PredictSpan(instance, vocab, params);
        std::vector<std::string> golds;
        for (const auto& a : instance.answers) golds.push_back(a.text);
        if (span) em += ExactMatch(span->text, golds, policy, instance.lang);
      }
      em /= static_cast<double>(data.dev.size());
      result.dev_em.push_back(em);
      if (em > best_dev) {
        best_dev = em;
        stale = 0;
      } else if (++stale >= config.patience && config.patience > 0) {
        note("early stop at step " + std::to_string(step + 1));
        result.stopped_early = true;
        break;
      }
    }
  }

  for (Task task : config.tasks) {
    result.epochs.push_back(streams.at(task).epochs());
    result.skipped.push_back(features.contains(task) ? features.at(task).skipped : 0);
  }
  return result;
}

void WriteCurves(std::span<const CurvePoint> curve,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "step,task,loss\n";
  char buf[64];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof(buf), "%.17g", p.loss);
    out << p.step << ',' << ToString(p.task) << ',' << buf << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace mlmrc
