// Copyright 2026 The Prefchat Authors.
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

#ifndef PREFCHAT_MODEL_H_
#define PREFCHAT_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "prefchat/vocabulary.h"

namespace prefchat {

// Parameter and gradient storage. The over-aligned allocation keeps Eigen's
// vectorized reductions on the same summation order from run to run.
template <typename T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

struct ModelConfig {
  int n_layers = 4;
  int n_heads = 4;
  int d_model = 128;
  int max_context_len = 384;
  int max_response_len = 128;
  int vocab_size = 0;
  uint64_t seed = 0;

  int d_ff() const { return 4 * d_model; }
  // BOS, EOS and SCORE on top of the context and response budgets.
  int max_positions() const { return max_context_len + max_response_len + 3; }
  void Validate() const;

  bool operator==(const ModelConfig&) const = default;
};

struct TensorSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  size_t offset = 0;
  size_t size() const { return static_cast<size_t>(rows) * cols; }
};

// Offsets of every named tensor inside the flat parameter vector.
class ParameterLayout {
 public:
  struct Layer {
    size_t ln1_gain, ln1_bias, w_qkv, b_qv, w_out, b_out;
    size_t ln2_gain, ln2_bias, w_fc, b_fc, w_proj, b_proj;
  };

  explicit ParameterLayout(const ModelConfig& config);

  size_t total() const { return total_; }
  const std::vector<TensorSpec>& tensors() const { return tensors_; }

  size_t token_embedding = 0;
  size_t position_embedding = 0;
  std::vector<Layer> layers;
  size_t lnf_gain = 0;
  size_t lnf_bias = 0;
  size_t lm_head = 0;
  size_t preference_head = 0;

 private:
  size_t Add(std::string name, int rows, int cols);

  std::vector<TensorSpec> tensors_;
  size_t total_ = 0;
};

// Pre-LayerNorm decoder-only transformer with a next-token head and a scalar
// preference head read at the final position. T is float or double.
template <typename T>
class DialogueModel {
 public:
  using Scalar = T;
  using Matrix =
      Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;
  using ColVector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  struct Output {
    Matrix logits;  // (L x vocab); empty when logits were not requested
    Matrix hidden;  // final LayerNorm output, (L x d_model)
    T preference_score = 0;
  };

  // Activations retained for Backward. Only filled by a full Forward.
  struct Cache {
    struct LayerCache {
      Matrix x_in, ln1_xhat, h1, qkv, attn, x_mid, ln2_xhat, h2, u, g;
      ColVector ln1_rstd, ln2_rstd;
      std::vector<Matrix> probs;  // per head, (L x L)
    };
    std::vector<int> ids;
    std::vector<LayerCache> layers;
    Matrix lnf_xhat, hidden;
    ColVector lnf_rstd;
  };

  // Key/value cache for incremental decoding.
  struct DecoderState {
    std::vector<Matrix> keys;
    std::vector<Matrix> values;
    int length = 0;
  };

  struct StepOutput {
    RowVector logits;  // next-token logits at the last fed position
    RowVector hidden;
    T preference_score = 0;  // head applied to the last fed position
  };

  // Seeded random initialisation from config.seed.
  DialogueModel(ModelConfig config, Vocabulary vocabulary);
  DialogueModel(ModelConfig config, Vocabulary vocabulary,
                std::vector<T> parameters);

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocabulary() const { return vocabulary_; }
  const ParameterLayout& layout() const { return layout_; }
  std::span<const T> parameters() const { return params_; }
  std::span<T> mutable_parameters() { return params_; }
  size_t parameter_count() const { return params_.size(); }

  Output Forward(std::span<const int> ids, Cache* cache = nullptr,
                 bool with_logits = true) const;

  // Accumulates d(loss)/d(params) into `grad`. `dlogits` may be null when the
  // loss does not touch the next-token head.
  void Backward(const Cache& cache, const Matrix* dlogits, T dscore,
                std::span<T> grad) const;

  DecoderState StartDecoding() const;
  StepOutput Extend(DecoderState& state, std::span<const int> ids) const;

  template <typename U>
  DialogueModel<U> Cast() const {
    return DialogueModel<U>(config_, vocabulary_,
                            std::vector<U>(params_.begin(), params_.end()));
  }

 private:
  void CheckIds(std::span<const int> ids, int start) const;
  // Runs the transformer over `ids` placed after state.length cached
  // positions and returns the final LayerNorm output.
  Matrix RunStack(std::span<const int> ids, DecoderState& state,
                  Cache* cache) const;

  ModelConfig config_;
  Vocabulary vocabulary_;
  ParameterLayout layout_;
  AlignedVector<T> params_;
};

extern template class DialogueModel<float>;
extern template class DialogueModel<double>;

using Model = DialogueModel<float>;
using ModelF64 = DialogueModel<double>;

}  // namespace prefchat

#endif  // PREFCHAT_MODEL_H_
