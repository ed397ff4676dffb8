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

#include "prefchat/losses.h"

#include <cmath>

#include "prefchat/encoding.h"
#include "prefchat/errors.h"

namespace prefchat {

double Softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

PeLossGradient PeLossWithGradient(double h, double m, double r) {
  if (!std::isfinite(h) || !std::isfinite(m) || !std::isfinite(r)) {
    throw ValidationError("preference scores must be finite");
  }
  const double hm = h - m, hr = h - r, mr = m - r;
  PeLossGradient g;
  g.loss = (Softplus(-hm) + Softplus(-hr) + Softplus(-mr)) / 3.0;
  // d/dx softplus(-x) = -sigmoid(-x)
  const double a = Sigmoid(-hm), b = Sigmoid(-hr), c = Sigmoid(-mr);
  g.d_human = -(a + b) / 3.0;
  g.d_model = (a - c) / 3.0;
  g.d_random = (b + c) / 3.0;
  return g;
}

double PeLoss(double h, double m, double r) {
  return PeLossWithGradient(h, m, r).loss;
}

namespace {

// Scores here come from the model, so a non-finite value is a numeric
// failure rather than bad caller input.
PeLossGradient ModelPe(double h, double m, double r) {
  if (!std::isfinite(h) || !std::isfinite(m) || !std::isfinite(r)) {
    throw NumericError("model produced a non-finite preference score");
  }
  return PeLossWithGradient(h, m, r);
}

template <typename T>
using Matrix = typename DialogueModel<T>::Matrix;

// NLL over the response rows of `logits`; fills dlogits when non-null.
template <typename T>
double ResponseNll(const EncodedDialogue& enc, const Matrix<T>& logits,
                   const LossOptions& options, Matrix<T>* dlogits, T scale) {
  const int first = enc.response_begin() - 1;  // predicts the first token
  const int last = enc.eos_position() - 1;     // predicts EOS
  const double norm =
      options.nll_per_token_mean ? 1.0 / static_cast<double>(last - first + 1)
                                 : 1.0;
  double nll = 0;
  for (int p = first; p <= last; ++p) {
    const int target = enc.ids[p + 1];
    const auto row = logits.row(p);
    const T mx = row.maxCoeff();
    const auto shifted = (row.array() - mx).template cast<double>();
    const double lse = std::log(shifted.exp().sum());
    nll -= (static_cast<double>(row(target) - mx) - lse);
    if (dlogits) {
      auto drow = dlogits->row(p);
      for (Eigen::Index v = 0; v < row.size(); ++v) {
        drow(v) = static_cast<T>(std::exp(shifted(v) - lse) * norm) * scale;
      }
      drow(target) -= static_cast<T>(norm) * scale;
    }
  }
  return nll * norm;
}

template <typename T>
EncodedDialogue EncodeForLoss(const DialogueModel<T>& model,
                              const DialogueContext& context,
                              std::string_view response) {
  EncodedDialogue enc = EncodeDialogue(model, context, response);
  if (enc.response_tokens == 0) {
    throw ValidationError("response is empty after tokenization");
  }
  return enc;
}

}  // namespace

template <typename T>
T NllLoss(const DialogueModel<T>& model, const DialogueContext& context,
          std::string_view response, const LossOptions& options) {
  EncodedDialogue enc = EncodeForLoss(model, context, response);
  auto out = model.Forward(enc.ids);
  return static_cast<T>(
      ResponseNll<T>(enc, out.logits, options, nullptr, T(1)));
}

template <typename T>
T PreferenceScore(const DialogueModel<T>& model, const DialogueContext& context,
                  std::string_view response) {
  EncodedDialogue enc = EncodeDialogue(model, context, response);
  return model.Forward(enc.ids, nullptr, false).preference_score;
}

template <typename T>
T GenerationLogProb(const DialogueModel<T>& model,
                    const DialogueContext& context, std::string_view response,
                    bool length_normalized) {
  LossOptions options;
  options.nll_per_token_mean = length_normalized;
  EncodedDialogue enc = EncodeDialogue(model, context, response);
  auto out = model.Forward(enc.ids);
  return static_cast<T>(
      -ResponseNll<T>(enc, out.logits, options, nullptr, T(1)));
}

template <typename T>
JointLossValue JointLoss(const DialogueModel<T>& model,
                         const TrainingQuadruple& q,
                         const LossOptions& options) {
  EncodedDialogue h = EncodeForLoss(model, q.context, q.human);
  auto out_h = model.Forward(h.ids);
  JointLossValue v;
  v.nll = ResponseNll<T>(h, out_h.logits, options, nullptr, T(1));
  const double s_m = PreferenceScore(model, q.context, q.model);
  const double s_r = PreferenceScore(model, q.context, q.random);
  v.pe = ModelPe(out_h.preference_score, s_m, s_r).loss;
  v.total = v.nll + v.pe;
  return v;
}

template <typename T>
JointLossValue JointLossAndGradient(const DialogueModel<T>& model,
                                    const TrainingQuadruple& q,
                                    const LossOptions& options,
                                    std::span<T> grad, T scale) {
  using Cache = typename DialogueModel<T>::Cache;
  EncodedDialogue h = EncodeForLoss(model, q.context, q.human);
  EncodedDialogue m = EncodeDialogue(model, q.context, q.model);
  EncodedDialogue r = EncodeDialogue(model, q.context, q.random);
  Cache cache_h, cache_m, cache_r;
  auto out_h = model.Forward(h.ids, &cache_h, true);
  auto out_m = model.Forward(m.ids, &cache_m, false);
  auto out_r = model.Forward(r.ids, &cache_r, false);

  Matrix<T> dlogits = Matrix<T>::Zero(out_h.logits.rows(), out_h.logits.cols());
  JointLossValue v;
  v.nll = ResponseNll<T>(h, out_h.logits, options, &dlogits, scale);
  const PeLossGradient pe = ModelPe(
      out_h.preference_score, out_m.preference_score, out_r.preference_score);
  v.pe = pe.loss;
  v.total = v.nll + v.pe;

  model.Backward(cache_h, &dlogits, static_cast<T>(pe.d_human) * scale, grad);
  model.Backward(cache_m, nullptr, static_cast<T>(pe.d_model) * scale, grad);
  model.Backward(cache_r, nullptr, static_cast<T>(pe.d_random) * scale, grad);
  return v;
}

#define PREFCHAT_INSTANTIATE_LOSSES(T)                                        \
  template T NllLoss<T>(const DialogueModel<T>&, const DialogueContext&,       \
                        std::string_view, const LossOptions&);                 \
  template T PreferenceScore<T>(const DialogueModel<T>&,                       \
                                const DialogueContext&, std::string_view);     \
  template T GenerationLogProb<T>(const DialogueModel<T>&,                     \
                                  const DialogueContext&, std::string_view,    \
                                  bool);                                       \
  template JointLossValue JointLoss<T>(const DialogueModel<T>&,                \
                                       const TrainingQuadruple&,               \
                                       const LossOptions&);                    \
  template JointLossValue JointLossAndGradient<T>(                             \
      const DialogueModel<T>&, const TrainingQuadruple&, const LossOptions&,   \
      std::span<T>, T);

PREFCHAT_INSTANTIATE_LOSSES(float)
PREFCHAT_INSTANTIATE_LOSSES(double)

}  // namespace prefchat
