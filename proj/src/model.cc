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

#include "mlmrc/model.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "mlmrc/error.h"
#include "mlmrc/random.h"

namespace mlmrc {

namespace {

constexpr char kMagic[8] = {'M', 'L', 'M', 'R', 'C', 'M', 'D', 'L'};
constexpr uint32_t kFormatVersion = 1;

template <typename T>
void WriteLe(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T ReadLe(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) throw ParseError("truncated model file");
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

ConstMatrixMap Mat(const std::vector<double>& v, size_t offset, int rows,
                   int cols) {
  return ConstMatrixMap(v.data() + offset, rows, cols);
}

MatrixMap Mat(std::span<double> v, size_t offset, int rows, int cols) {
  return MatrixMap(v.data() + offset, rows, cols);
}

ConstVectorMap Vec(const std::vector<double>& v, size_t offset, int n) {
  return ConstVectorMap(v.data() + offset, n);
}

VectorMap Vec(std::span<double> v, size_t offset, int n) {
  return VectorMap(v.data() + offset, n);
}

}  // namespace

void EncoderConfig::Validate() const {
  if (vocab_size <= 0) throw ValidationError("vocab_size must be positive");
  if (embed_dim <= 0 || layers < 0 || heads <= 0) {
    throw ValidationError("embed_dim and heads must be positive");
  }
  if (embed_dim % heads != 0) {
    throw ValidationError("embed_dim " + std::to_string(embed_dim) +
                          " not divisible by heads " + std::to_string(heads));
  }
  if (max_len_mrc < 8 || max_len_lakm < 8) {
    throw ValidationError("maximum sequence lengths must be at least 8");
  }
}

void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = nlohmann::json{{"vocab_size", c.vocab_size},   {"embed_dim", c.embed_dim},
                     {"layers", c.layers},           {"heads", c.heads},
                     {"max_len_mrc", c.max_len_mrc}, {"max_len_lakm", c.max_len_lakm},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, EncoderConfig& c) {
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.layers = j.value("layers", c.layers);
  c.heads = j.value("heads", c.heads);
  c.max_len_mrc = j.value("max_len_mrc", c.max_len_mrc);
  c.max_len_lakm = j.value("max_len_lakm", c.max_len_lakm);
  c.seed = j.value("seed", c.seed);
}

ParamLayout::ParamLayout(const EncoderConfig& config) {
  const size_t d = config.embed_dim;
  const size_t f = config.ffn_dim();
  const size_t vocab = config.vocab_size;
  size_t at = 0;
  const auto take = [&at](size_t n) {
    const size_t offset = at;
    at += n;
    return offset;
  };
  token_embedding = take(vocab * d);
  position_embedding = take(static_cast<size_t>(config.max_positions()) * d);
  for (int l = 0; l < config.layers; ++l) {
    Layer layer{};
    layer.wq = take(d * d);
    layer.wk = take(d * d);
    layer.wv = take(d * d);
    layer.wo = take(d * d);
    layer.w1 = take(d * f);
    layer.b1 = take(f);
    layer.w2 = take(f * d);
    layer.b2 = take(d);
    layers.push_back(layer);
  }
  span_start = take(d);
  span_end = take(d);
  mlm_weight = take(vocab * d);
  mlm_bias = take(vocab);
  total = at;
}

ModelParams::ModelParams(const EncoderConfig& config, ParamInit init)
    : config_((config.Validate(), config)),
      layout_(config),
      values_(layout_.total, 0.0) {
  if (init == ParamInit::kZero) return;
  Rng rng(config.seed);
  const int d = config.embed_dim;
  const int f = config.ffn_dim();
  const auto fill = [&](size_t offset, size_t n, double scale) {
    for (size_t i = 0; i < n; ++i) values_[offset + i] = scale * rng.Normal();
  };
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  fill(layout_.token_embedding, static_cast<size_t>(config.vocab_size) * d, 0.5);
  fill(layout_.position_embedding,
       static_cast<size_t>(config.max_positions()) * d, 0.1);
  for (const auto& layer : layout_.layers) {
    fill(layer.wq, d * d, inv_sqrt_d);
    fill(layer.wk, d * d, inv_sqrt_d);
    fill(layer.wv, d * d, inv_sqrt_d);
    fill(layer.wo, d * d, 0.5 * inv_sqrt_d);
    fill(layer.w1, d * f, inv_sqrt_d);
    fill(layer.w2, f * d, 0.5 / std::sqrt(static_cast<double>(f)));
  }
  fill(layout_.span_start, d, inv_sqrt_d);
  fill(layout_.span_end, d, inv_sqrt_d);
  fill(layout_.mlm_weight, static_cast<size_t>(config.vocab_size) * d,
       inv_sqrt_d);
}

bool ModelParams::AllFinite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double x) { return std::isfinite(x); });
}

void ModelParams::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const std::string config = nlohmann::json(config_).dump();
  out.write(kMagic, sizeof(kMagic));
  WriteLe<uint32_t>(out, kFormatVersion);
  WriteLe<uint32_t>(out, static_cast<uint32_t>(config.size()));
  out.write(config.data(), static_cast<std::streamsize>(config.size()));
  WriteLe<uint64_t>(out, values_.size());
  for (double v : values_) WriteLe<double>(out, v);
  if (!out) throw IoError("write failed: " + path.string());
}

ModelParams ModelParams::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError(path.string() + ": not a model file");
  }
  const auto version = ReadLe<uint32_t>(in);
  if (version != kFormatVersion) {
    throw ParseError(path.string() + ": unsupported model format version " +
                     std::to_string(version));
  }
  const auto config_size = ReadLe<uint32_t>(in);
  std::string config_json(config_size, '\0');
  in.read(config_json.data(), config_size);
  if (!in) throw ParseError(path.string() + ": truncated config");
  EncoderConfig config;
  try {
    config = nlohmann::json::parse(config_json).get<EncoderConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": bad config: " + e.what());
  }
  ModelParams params(config, ParamInit::kZero);
  const auto count = ReadLe<uint64_t>(in);
  if (count != params.values_.size()) {
    throw ParseError(path.string() + ": parameter count " +
                     std::to_string(count) + " does not match config (" +
                     std::to_string(params.values_.size()) + ")");
  }
  for (auto& v : params.values_) v = ReadLe<double>(in);
  return params;
}

void SoftmaxRows(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp();
    row /= row.sum();
  }
}

Vector Softmax(const Vector& logits) {
  Vector p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

EncoderPass::EncoderPass(const ModelParams& params, std::span<const TokenId> ids)
    : params_(params), ids_(ids.begin(), ids.end()) {
  const auto& config = params.config();
  const auto& layout = params.layout();
  const auto& w = params.values();
  const int n = static_cast<int>(ids.size());
  const int d = config.embed_dim;
  const int f = config.ffn_dim();
  if (n == 0) throw ValidationError("empty input sequence");
  if (n > config.max_positions()) {
    throw ValidationError("sequence of length " + std::to_string(n) +
                          " exceeds the position table");
  }

  const auto tok = Mat(w, layout.token_embedding, config.vocab_size, d);
  const auto pos = Mat(w, layout.position_embedding, config.max_positions(), d);
  Matrix x(n, d);
  for (int t = 0; t < n; ++t) {
    if (ids[t] < 0 || ids[t] >= config.vocab_size) {
      throw ValidationError("token id " + std::to_string(ids[t]) +
                            " outside the vocabulary");
    }
    x.row(t) = tok.row(ids[t]) + pos.row(t);
  }

  const int heads = config.heads;
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (const auto& lw : layout.layers) {
    LayerCache cache;
    cache.input = x;
    cache.q = x * Mat(w, lw.wq, d, d);
    cache.k = x * Mat(w, lw.wk, d, d);
    cache.v = x * Mat(w, lw.wv, d, d);
    cache.attn_concat.resize(n, d);
    for (int h = 0; h < heads; ++h) {
      Matrix scores = cache.q.middleCols(h * dh, dh) *
                      cache.k.middleCols(h * dh, dh).transpose() * scale;
      SoftmaxRows(scores);
      cache.attn_concat.middleCols(h * dh, dh) =
          scores * cache.v.middleCols(h * dh, dh);
      cache.attention.push_back(std::move(scores));
    }
    cache.residual = x + cache.attn_concat * Mat(w, lw.wo, d, d);
    Matrix pre = cache.residual * Mat(w, lw.w1, d, f);
    pre.rowwise() += Vec(w, lw.b1, f).transpose();
    cache.hidden = pre.array().tanh();
    x = cache.residual + cache.hidden * Mat(w, lw.w2, f, d);
    x.rowwise() += Vec(w, lw.b2, d).transpose();
    layers_.push_back(std::move(cache));
  }
  output_ = std::move(x);
}

void EncoderPass::Backward(const Matrix& d_output, std::span<double> grad) const {
  const auto& config = params_.config();
  const auto& layout = params_.layout();
  const auto& w = params_.values();
  const int d = config.embed_dim;
  const int f = config.ffn_dim();
  const int heads = config.heads;
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix dx = d_output;
  for (size_t l = layers_.size(); l-- > 0;) {
    const auto& lw = layout.layers[l];
    const auto& cache = layers_[l];

    // x_out = residual + tanh(residual W1 + b1) W2 + b2
    Mat(grad, lw.w2, f, d).noalias() += cache.hidden.transpose() * dx;
    Vec(grad, lw.b2, d) += dx.colwise().sum().transpose();
    Matrix d_pre = (dx * Mat(w, lw.w2, f, d).transpose()).array() *
                   (1.0 - cache.hidden.array().square());
    Mat(grad, lw.w1, d, f).noalias() += cache.residual.transpose() * d_pre;
    Vec(grad, lw.b1, f) += d_pre.colwise().sum().transpose();
    Matrix d_residual = dx + d_pre * Mat(w, lw.w1, d, f).transpose();

    // residual = input + attn_concat Wo
    Mat(grad, lw.wo, d, d).noalias() +=
        cache.attn_concat.transpose() * d_residual;
    const Matrix d_concat = d_residual * Mat(w, lw.wo, d, d).transpose();

    Matrix dq(cache.q.rows(), d), dk(cache.k.rows(), d), dv(cache.v.rows(), d);
    for (int h = 0; h < heads; ++h) {
      const Matrix& a = cache.attention[h];
      const auto d_head = d_concat.middleCols(h * dh, dh);
      const Matrix da = d_head * cache.v.middleCols(h * dh, dh).transpose();
      dv.middleCols(h * dh, dh) = a.transpose() * d_head;
      const Eigen::VectorXd row_dot = (da.array() * a.array()).rowwise().sum();
      Matrix ds = a.array() * (da.colwise() - row_dot).array();
      ds *= scale;
      dq.middleCols(h * dh, dh) = ds * cache.k.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh) = ds.transpose() * cache.q.middleCols(h * dh, dh);
    }
    Mat(grad, lw.wq, d, d).noalias() += cache.input.transpose() * dq;
    Mat(grad, lw.wk, d, d).noalias() += cache.input.transpose() * dk;
    Mat(grad, lw.wv, d, d).noalias() += cache.input.transpose() * dv;
    dx = d_residual + dq * Mat(w, lw.wq, d, d).transpose() +
         dk * Mat(w, lw.wk, d, d).transpose() +
         dv * Mat(w, lw.wv, d, d).transpose();
  }

  auto d_tok = Mat(grad, layout.token_embedding, config.vocab_size, d);
  auto d_pos = Mat(grad, layout.position_embedding, config.max_positions(), d);
  for (size_t t = 0; t < ids_.size(); ++t) {
    d_tok.row(ids_[t]) += dx.row(static_cast<Eigen::Index>(t));
    d_pos.row(static_cast<Eigen::Index>(t)) += dx.row(static_cast<Eigen::Index>(t));
  }
}

Matrix Encode(std::span<const TokenId> ids, const ModelParams& params) {
  return EncoderPass(params, ids).output();
}

}  // namespace mlmrc
