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

#include "prefchat/model.h"

#include <cmath>
#include <limits>
#include <random>

#include "prefchat/errors.h"

namespace prefchat {

void ModelConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("invalid model config: ") + what);
  };
  require(n_layers >= 1, "n_layers must be >= 1");
  require(n_heads >= 1, "n_heads must be >= 1");
  require(d_model >= 1, "d_model must be >= 1");
  require(d_model % n_heads == 0, "d_model must be divisible by n_heads");
  require(max_context_len >= 1, "max_context_len must be >= 1");
  require(max_response_len >= 1, "max_response_len must be >= 1");
  require(vocab_size > Vocabulary::kNumSpecial,
          "vocab_size must exceed the special token count");
}

ParameterLayout::ParameterLayout(const ModelConfig& c) {
  const int d = c.d_model;
  token_embedding = Add("token_embedding", c.vocab_size, d);
  position_embedding = Add("position_embedding", c.max_positions(), d);
  for (int l = 0; l < c.n_layers; ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    Layer layer;
    layer.ln1_gain = Add(p + "ln1.gain", 1, d);
    layer.ln1_bias = Add(p + "ln1.bias", 1, d);
    layer.w_qkv = Add(p + "attn.w_qkv", d, 3 * d);
    // Query and value biases only; keys are unbiased.
    layer.b_qv = Add(p + "attn.b_qv", 1, 2 * d);
    layer.w_out = Add(p + "attn.w_out", d, d);
    layer.b_out = Add(p + "attn.b_out", 1, d);
    layer.ln2_gain = Add(p + "ln2.gain", 1, d);
    layer.ln2_bias = Add(p + "ln2.bias", 1, d);
    layer.w_fc = Add(p + "mlp.w_fc", d, c.d_ff());
    layer.b_fc = Add(p + "mlp.b_fc", 1, c.d_ff());
    layer.w_proj = Add(p + "mlp.w_proj", c.d_ff(), d);
    layer.b_proj = Add(p + "mlp.b_proj", 1, d);
    layers.push_back(layer);
  }
  lnf_gain = Add("lnf.gain", 1, d);
  lnf_bias = Add("lnf.bias", 1, d);
  lm_head = Add("lm_head", d, c.vocab_size);
  preference_head = Add("preference_head", 1, d);
}

size_t ParameterLayout::Add(std::string name, int rows, int cols) {
  TensorSpec spec{std::move(name), rows, cols, total_};
  total_ += spec.size();
  tensors_.push_back(std::move(spec));
  return tensors_.back().offset;
}

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kInitStd = 0.02;

template <typename T>
T Gelu(T x) {
  const T c = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
  const T inner = c * (x + static_cast<T>(0.044715) * x * x * x);
  return static_cast<T>(0.5) * x * (1 + std::tanh(inner));
}

template <typename T>
T GeluGrad(T x) {
  const T c = static_cast<T>(0.7978845608028654);
  const T a = static_cast<T>(0.044715);
  const T t = std::tanh(c * (x + a * x * x * x));
  return static_cast<T>(0.5) * (1 + t) +
         static_cast<T>(0.5) * x * (1 - t * t) * c * (1 + 3 * a * x * x);
}

template <typename Matrix, typename ColVector, typename RowMap>
Matrix LayerNorm(const Matrix& x, const RowMap& gain, const RowMap& bias,
                 Matrix* xhat_out, ColVector* rstd_out) {
  using T = typename Matrix::Scalar;
  const auto n = x.rows();
  Matrix xhat(n, x.cols());
  ColVector rstd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const T mean = x.row(i).mean();
    const T var = (x.row(i).array() - mean).square().mean();
    rstd(i) = static_cast<T>(1) /
              std::sqrt(var + static_cast<T>(kLayerNormEps));
    xhat.row(i) = (x.row(i).array() - mean) * rstd(i);
  }
  Matrix y = (xhat.array().rowwise() * gain.array()).rowwise() + bias.array();
  if (xhat_out) *xhat_out = std::move(xhat);
  if (rstd_out) *rstd_out = std::move(rstd);
  return y;
}

// Returns dx; accumulates gain/bias gradients.
template <typename Matrix, typename ColVector, typename RowMap,
          typename RowGradMap>
Matrix LayerNormBackward(const Matrix& dy, const Matrix& xhat,
                         const ColVector& rstd, const RowMap& gain,
                         RowGradMap dgain, RowGradMap dbias) {
  using T = typename Matrix::Scalar;
  dgain += (dy.array() * xhat.array()).colwise().sum().matrix();
  dbias += dy.colwise().sum();
  Matrix dxhat = dy.array().rowwise() * gain.array();
  Matrix dx(dy.rows(), dy.cols());
  const T inv_d = static_cast<T>(1) / static_cast<T>(dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const T mean_dxhat = dxhat.row(i).sum() * inv_d;
    const T mean_dxhat_xhat = dxhat.row(i).dot(xhat.row(i)) * inv_d;
    dx.row(i) = rstd(i) * (dxhat.row(i).array() - mean_dxhat -
                           xhat.row(i).array() * mean_dxhat_xhat);
  }
  return dx;
}

}  // namespace

template <typename T>
DialogueModel<T>::DialogueModel(ModelConfig config, Vocabulary vocabulary)
    : config_(config), vocabulary_(std::move(vocabulary)), layout_(config) {
  config_.Validate();
  if (config_.vocab_size != vocabulary_.size()) {
    throw ValidationError("config vocab_size " +
                          std::to_string(config_.vocab_size) +
                          " does not match vocabulary size " +
                          std::to_string(vocabulary_.size()));
  }
  params_.assign(layout_.total(), T(0));
  std::mt19937_64 rng(config_.seed);
  std::normal_distribution<double> normal(0.0, kInitStd);
  const double proj_scale = 1.0 / std::sqrt(2.0 * config_.n_layers);
  for (const auto& spec : layout_.tensors()) {
    T* p = params_.data() + spec.offset;
    const bool is_gain = spec.name.find(".gain") != std::string::npos;
    const bool is_bias = spec.name.find(".b_") != std::string::npos ||
                         spec.name.find(".bias") != std::string::npos;
    const bool is_residual_proj =
        spec.name.find("w_out") != std::string::npos ||
        spec.name.find("w_proj") != std::string::npos;
    for (size_t i = 0; i < spec.size(); ++i) {
      if (is_gain) {
        p[i] = T(1);
      } else if (is_bias) {
        p[i] = T(0);
      } else {
        const double v = normal(rng);
        p[i] = static_cast<T>(is_residual_proj ? v * proj_scale : v);
      }
    }
  }
}

template <typename T>
DialogueModel<T>::DialogueModel(ModelConfig config, Vocabulary vocabulary,
                                std::vector<T> parameters)
    : config_(config),
      vocabulary_(std::move(vocabulary)),
      layout_(config),
      params_(parameters.begin(), parameters.end()) {
  config_.Validate();
  if (config_.vocab_size != vocabulary_.size()) {
    throw ValidationError("config vocab_size does not match vocabulary size");
  }
  if (params_.size() != layout_.total()) {
    throw ValidationError("expected " + std::to_string(layout_.total()) +
                          " parameters, got " + std::to_string(params_.size()));
  }
}

template <typename T>
void DialogueModel<T>::CheckIds(std::span<const int> ids, int start) const {
  if (ids.empty()) throw ValidationError("empty token sequence");
  if (start + static_cast<int>(ids.size()) > config_.max_positions()) {
    throw ValidationError(
        "sequence length " + std::to_string(start + ids.size()) +
        " exceeds the limit of " + std::to_string(config_.max_positions()));
  }
  for (int id : ids) {
    if (id < 0 || id >= config_.vocab_size) {
      throw ValidationError("token id " + std::to_string(id) +
                            " out of range");
    }
  }
}

template <typename T>
typename DialogueModel<T>::DecoderState DialogueModel<T>::StartDecoding()
    const {
  DecoderState state;
  state.keys.assign(config_.n_layers,
                    Matrix::Zero(config_.max_positions(), config_.d_model));
  state.values = state.keys;
  return state;
}

template <typename T>
typename DialogueModel<T>::Matrix DialogueModel<T>::RunStack(
    std::span<const int> ids, DecoderState& state, Cache* cache) const {
  using ConstMap = Eigen::Map<const Matrix>;
  using ConstRowMap = Eigen::Map<const RowVector>;
  const int n = static_cast<int>(ids.size());
  const int start = state.length;
  const int total = start + n;
  const int d = config_.d_model;
  const int heads = config_.n_heads;
  const int hd = d / heads;
  const int vocab = config_.vocab_size;
  const T scale = static_cast<T>(1) / std::sqrt(static_cast<T>(hd));
  const T* p = params_.data();

  ConstMap tok(p + layout_.token_embedding, vocab, d);
  ConstMap pos(p + layout_.position_embedding, config_.max_positions(), d);
  Matrix x(n, d);
  for (int i = 0; i < n; ++i) x.row(i) = tok.row(ids[i]) + pos.row(start + i);

  if (cache) {
    cache->ids.assign(ids.begin(), ids.end());
    cache->layers.resize(config_.n_layers);
  }

  for (int l = 0; l < config_.n_layers; ++l) {
    const auto& off = layout_.layers[l];
    ConstRowMap ln1_g(p + off.ln1_gain, d), ln1_b(p + off.ln1_bias, d);
    ConstRowMap ln2_g(p + off.ln2_gain, d), ln2_b(p + off.ln2_bias, d);
    ConstMap w_qkv(p + off.w_qkv, d, 3 * d);
    ConstRowMap b_qv(p + off.b_qv, 2 * d);
    ConstMap w_out(p + off.w_out, d, d);
    ConstRowMap b_out(p + off.b_out, d);
    ConstMap w_fc(p + off.w_fc, d, config_.d_ff());
    ConstRowMap b_fc(p + off.b_fc, config_.d_ff());
    ConstMap w_proj(p + off.w_proj, config_.d_ff(), d);
    ConstRowMap b_proj(p + off.b_proj, d);
    typename Cache::LayerCache* lc = cache ? &cache->layers[l] : nullptr;

    Matrix ln1_xhat;
    ColVector ln1_rstd;
    Matrix h1 = LayerNorm<Matrix, ColVector>(x, ln1_g, ln1_b,
                                             lc ? &ln1_xhat : nullptr,
                                             lc ? &ln1_rstd : nullptr);
    Matrix qkv = h1 * w_qkv;
    qkv.leftCols(d).rowwise() += b_qv.head(d);
    qkv.rightCols(d).rowwise() += b_qv.tail(d);
    state.keys[l].middleRows(start, n) = qkv.middleCols(d, d);
    state.values[l].middleRows(start, n) = qkv.rightCols(d);

    Matrix attn(n, d);
    if (lc) lc->probs.resize(heads);
    for (int h = 0; h < heads; ++h) {
      Matrix scores =
          qkv.block(0, h * hd, n, hd) *
          state.keys[l].block(0, h * hd, total, hd).transpose() * scale;
      for (int i = 0; i < n; ++i) {
        const int visible = start + i + 1;
        auto row = scores.row(i);
        const T mx = row.head(visible).maxCoeff();
        row.head(visible) = (row.head(visible).array() - mx).exp();
        row.head(visible) /= row.head(visible).sum();
        if (visible < total) row.tail(total - visible).setZero();
      }
      attn.block(0, h * hd, n, hd).noalias() =
          scores * state.values[l].block(0, h * hd, total, hd);
      if (lc) lc->probs[h] = std::move(scores);
    }
    Matrix x_mid = x + attn * w_out;
    x_mid.rowwise() += b_out;

    Matrix ln2_xhat;
    ColVector ln2_rstd;
    Matrix h2 = LayerNorm<Matrix, ColVector>(x_mid, ln2_g, ln2_b,
                                             lc ? &ln2_xhat : nullptr,
                                             lc ? &ln2_rstd : nullptr);
    Matrix u = h2 * w_fc;
    u.rowwise() += b_fc;
    Matrix g = u.unaryExpr([](T v) { return Gelu(v); });
    Matrix x_out = x_mid + g * w_proj;
    x_out.rowwise() += b_proj;

    if (lc) {
      lc->x_in = std::move(x);
      lc->ln1_xhat = std::move(ln1_xhat);
      lc->ln1_rstd = std::move(ln1_rstd);
      lc->h1 = std::move(h1);
      lc->qkv = std::move(qkv);
      lc->attn = std::move(attn);
      lc->x_mid = std::move(x_mid);
      lc->ln2_xhat = std::move(ln2_xhat);
      lc->ln2_rstd = std::move(ln2_rstd);
      lc->h2 = std::move(h2);
      lc->u = std::move(u);
      lc->g = std::move(g);
    }
    x = std::move(x_out);
  }

  ConstRowMap lnf_g(p + layout_.lnf_gain, d), lnf_b(p + layout_.lnf_bias, d);
  Matrix hidden = LayerNorm<Matrix, ColVector>(
      x, lnf_g, lnf_b, cache ? &cache->lnf_xhat : nullptr,
      cache ? &cache->lnf_rstd : nullptr);
  if (cache) cache->hidden = hidden;
  state.length = total;
  return hidden;
}

template <typename T>
typename DialogueModel<T>::Output DialogueModel<T>::Forward(
    std::span<const int> ids, Cache* cache, bool with_logits) const {
  CheckIds(ids, 0);
  const int n = static_cast<int>(ids.size());
  const int d = config_.d_model;
  DecoderState state;
  state.keys.assign(config_.n_layers, Matrix(n, d));
  state.values.assign(config_.n_layers, Matrix(n, d));
  Output out;
  out.hidden = RunStack(ids, state, cache);
  if (with_logits) {
    Eigen::Map<const Matrix> lm(params_.data() + layout_.lm_head, d,
                                config_.vocab_size);
    out.logits = out.hidden * lm;
  }
  Eigen::Map<const RowVector> head(params_.data() + layout_.preference_head,
                                   d);
  out.preference_score = out.hidden.row(n - 1).dot(head);
  return out;
}

template <typename T>
typename DialogueModel<T>::StepOutput DialogueModel<T>::Extend(
    DecoderState& state, std::span<const int> ids) const {
  CheckIds(ids, state.length);
  const int d = config_.d_model;
  Matrix hidden = RunStack(ids, state, nullptr);
  StepOutput out;
  out.hidden = hidden.row(hidden.rows() - 1);
  Eigen::Map<const Matrix> lm(params_.data() + layout_.lm_head, d,
                              config_.vocab_size);
  out.logits = out.hidden * lm;
  Eigen::Map<const RowVector> head(params_.data() + layout_.preference_head,
                                   d);
  out.preference_score = out.hidden.dot(head);
  return out;
}

template <typename T>
void DialogueModel<T>::Backward(const Cache& cache, const Matrix* dlogits,
                                T dscore, std::span<T> grad) const {
  using ConstMap = Eigen::Map<const Matrix>;
  using GradMap = Eigen::Map<Matrix>;
  using ConstRowMap = Eigen::Map<const RowVector>;
  using GradRowMap = Eigen::Map<RowVector>;
  if (grad.size() != params_.size()) {
    throw ValidationError("gradient buffer size mismatch");
  }
  const int n = static_cast<int>(cache.ids.size());
  const int d = config_.d_model;
  const int heads = config_.n_heads;
  const int hd = d / heads;
  const int ff = config_.d_ff();
  const int vocab = config_.vocab_size;
  const T scale = static_cast<T>(1) / std::sqrt(static_cast<T>(hd));
  const T* p = params_.data();
  T* gp = grad.data();

  Matrix dhidden = Matrix::Zero(n, d);
  if (dlogits) {
    ConstMap lm(p + layout_.lm_head, d, vocab);
    GradMap dlm(gp + layout_.lm_head, d, vocab);
    dlm.noalias() += cache.hidden.transpose() * (*dlogits);
    dhidden.noalias() += (*dlogits) * lm.transpose();
  }
  if (dscore != T(0)) {
    ConstRowMap head(p + layout_.preference_head, d);
    GradRowMap dhead(gp + layout_.preference_head, d);
    dhead += dscore * cache.hidden.row(n - 1);
    dhidden.row(n - 1) += dscore * head;
  }

  Matrix dx = LayerNormBackward<Matrix, ColVector>(
      dhidden, cache.lnf_xhat, cache.lnf_rstd,
      ConstRowMap(p + layout_.lnf_gain, d),
      GradRowMap(gp + layout_.lnf_gain, d),
      GradRowMap(gp + layout_.lnf_bias, d));

  for (int l = config_.n_layers - 1; l >= 0; --l) {
    const auto& off = layout_.layers[l];
    const auto& lc = cache.layers[l];

    // MLP block.
    ConstMap w_proj(p + off.w_proj, ff, d);
    ConstMap w_fc(p + off.w_fc, d, ff);
    GradMap(gp + off.w_proj, ff, d).noalias() += lc.g.transpose() * dx;
    GradRowMap(gp + off.b_proj, d) += dx.colwise().sum();
    Matrix du = dx * w_proj.transpose();
    du.array() *= lc.u.unaryExpr([](T v) { return GeluGrad(v); }).array();
    GradMap(gp + off.w_fc, d, ff).noalias() += lc.h2.transpose() * du;
    GradRowMap(gp + off.b_fc, ff) += du.colwise().sum();
    Matrix dh2 = du * w_fc.transpose();
    Matrix dx_mid =
        dx + LayerNormBackward<Matrix, ColVector>(
                 dh2, lc.ln2_xhat, lc.ln2_rstd,
                 ConstRowMap(p + off.ln2_gain, d),
                 GradRowMap(gp + off.ln2_gain, d),
                 GradRowMap(gp + off.ln2_bias, d));

    // Attention block.
    ConstMap w_out(p + off.w_out, d, d);
    ConstMap w_qkv(p + off.w_qkv, d, 3 * d);
    GradMap(gp + off.w_out, d, d).noalias() += lc.attn.transpose() * dx_mid;
    GradRowMap(gp + off.b_out, d) += dx_mid.colwise().sum();
    Matrix dattn = dx_mid * w_out.transpose();
    Matrix dqkv = Matrix::Zero(n, 3 * d);
    for (int h = 0; h < heads; ++h) {
      const Matrix& probs = lc.probs[h];
      auto q = lc.qkv.block(0, h * hd, n, hd);
      auto k = lc.qkv.block(0, d + h * hd, n, hd);
      auto v = lc.qkv.block(0, 2 * d + h * hd, n, hd);
      auto dout = dattn.block(0, h * hd, n, hd);
      Matrix dprobs = dout * v.transpose();
      dqkv.block(0, 2 * d + h * hd, n, hd).noalias() =
          probs.transpose() * dout;
      ColVector row_dot = (dprobs.array() * probs.array()).rowwise().sum();
      Matrix dscores =
          probs.array() * (dprobs.array().colwise() - row_dot.array());
      dqkv.block(0, h * hd, n, hd).noalias() = dscores * k * scale;
      dqkv.block(0, d + h * hd, n, hd).noalias() =
          dscores.transpose() * q * scale;
    }
    GradMap(gp + off.w_qkv, d, 3 * d).noalias() += lc.h1.transpose() * dqkv;
    GradRowMap(gp + off.b_qv, d) += dqkv.leftCols(d).colwise().sum();
    GradRowMap(gp + off.b_qv + d, d) += dqkv.rightCols(d).colwise().sum();
    Matrix dh1 = dqkv * w_qkv.transpose();
    dx = dx_mid + LayerNormBackward<Matrix, ColVector>(
                      dh1, lc.ln1_xhat, lc.ln1_rstd,
                      ConstRowMap(p + off.ln1_gain, d),
                      GradRowMap(gp + off.ln1_gain, d),
                      GradRowMap(gp + off.ln1_bias, d));
  }

  GradMap dtok(gp + layout_.token_embedding, vocab, d);
  GradMap dpos(gp + layout_.position_embedding, config_.max_positions(), d);
  for (int i = 0; i < n; ++i) {
    dtok.row(cache.ids[i]) += dx.row(i);
    dpos.row(i) += dx.row(i);
  }
}

template class DialogueModel<float>;
template class DialogueModel<double>;

}  // namespace prefchat
