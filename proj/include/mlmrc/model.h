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

#ifndef MLMRC_MODEL_H_
#define MLMRC_MODEL_H_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "mlmrc/subword.h"

namespace mlmrc {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using VectorMap = Eigen::Map<Vector>;
using ConstVectorMap = Eigen::Map<const Vector>;

struct EncoderConfig {
  int vocab_size = 0;
  int embed_dim = 64;
  int layers = 2;
  int heads = 1;
  int max_len_mrc = 384;
  int max_len_lakm = 256;
  uint64_t seed = 0;

  int ffn_dim() const { return 2 * embed_dim; }
  int max_positions() const { return std::max(max_len_mrc, max_len_lakm); }
  // embed_dim divisible by heads, max lengths >= 8, positive sizes.
  void Validate() const;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

void to_json(nlohmann::json& j, const EncoderConfig& config);
void from_json(const nlohmann::json& j, EncoderConfig& config);

// Offsets of every tensor inside the flat parameter array.
struct ParamLayout {
  struct Layer {
    size_t wq, wk, wv, wo, w1, b1, w2, b2;
  };
  size_t token_embedding = 0;     // vocab x d
  size_t position_embedding = 0;  // max_positions x d
  std::vector<Layer> layers;      // wq..wo: d x d, w1: d x f, w2: f x d
  size_t span_start = 0;          // d
  size_t span_end = 0;            // d
  size_t mlm_weight = 0;          // vocab x d (the W of p = softmax(W h + b))
  size_t mlm_bias = 0;            // vocab
  size_t total = 0;

  explicit ParamLayout(const EncoderConfig& config);
};

enum class ParamInit { kRandom, kZero };

// Encoder parameters plus the two task heads, stored flat so the optimizer,
// the serializer and finite-difference checks can treat them uniformly.
class ModelParams {
 public:
  ModelParams(const EncoderConfig& config, ParamInit init);

  const EncoderConfig& config() const { return config_; }
  const ParamLayout& layout() const { return layout_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool AllFinite() const;

  // Header "MLMRCMDL", u32 format version, u32 config-JSON length, config
  // JSON, u64 parameter count, then little-endian IEEE-754 doubles.
  void Save(const std::filesystem::path& path) const;
  static ModelParams Load(const std::filesystem::path& path);

 private:
  EncoderConfig config_;
  ParamLayout layout_;
  std::vector<double> values_;
};

// Row-wise softmax, numerically stabilized.
void SoftmaxRows(Matrix& m);
Vector Softmax(const Vector& logits);

// Forward pass with the activations needed for backpropagation.
class EncoderPass {
 public:
  EncoderPass(const ModelParams& params, std::span<const TokenId> ids);

  // Per-position representations (length x embed_dim).
  const Matrix& output() const { return output_; }

  // Accumulates into `grad` (same layout as the parameters) the gradient
  // of a scalar loss whose gradient w.r.t. output() is `d_output`.
  void Backward(const Matrix& d_output, std::span<double> grad) const;

 private:
  struct LayerCache {
    Matrix input, q, k, v, attn_concat, residual, hidden;
    std::vector<Matrix> attention;  // per head, length x length
  };

  const ModelParams& params_;
  std::vector<TokenId> ids_;
  std::vector<LayerCache> layers_;
  Matrix output_;
};

// Convenience for callers that only need representations.
Matrix Encode(std::span<const TokenId> ids, const ModelParams& params);

}  // namespace mlmrc

#endif  // MLMRC_MODEL_H_
