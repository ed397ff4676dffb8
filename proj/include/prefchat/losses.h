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

#ifndef PREFCHAT_LOSSES_H_
#define PREFCHAT_LOSSES_H_

#include <span>
#include <string_view>

#include "prefchat/dialogue.h"
#include "prefchat/model.h"
#include "prefchat/quadruples.h"

namespace prefchat {

// log(1 + exp(x)) without overflow.
double Softplus(double x);
inline double LogSigmoid(double x) { return -Softplus(-x); }
double Sigmoid(double x);

// Pairwise ranking loss over the ordering human > model > random:
//   -(1/3) [log s(h - m) + log s(h - r) + log s(m - r)],  s = sigmoid.
// Throws ValidationError on non-finite input.
double PeLoss(double s_human, double s_model, double s_random);

struct PeLossGradient {
  double loss = 0;
  double d_human = 0;
  double d_model = 0;
  double d_random = 0;
};
PeLossGradient PeLossWithGradient(double s_human, double s_model,
                                  double s_random);

struct LossOptions {
  // Divide the response NLL by its token count (EOS included).
  bool nll_per_token_mean = false;
};

// -sum_t log p(r_t | c, r_<t) over the response tokens and the closing EOS.
template <typename T>
T NllLoss(const DialogueModel<T>& model, const DialogueContext& context,
          std::string_view response, const LossOptions& options = {});

// Scalar read-out at the SCORE token of encode(context, response).
template <typename T>
T PreferenceScore(const DialogueModel<T>& model, const DialogueContext& context,
                  std::string_view response);

// Log-probability of the response (EOS included) under the full softmax.
template <typename T>
T GenerationLogProb(const DialogueModel<T>& model,
                    const DialogueContext& context, std::string_view response,
                    bool length_normalized = false);

struct JointLossValue {
  double total = 0;
  double nll = 0;
  double pe = 0;
};

template <typename T>
JointLossValue JointLoss(const DialogueModel<T>& model,
                         const TrainingQuadruple& quadruple,
                         const LossOptions& options = {});

// Same value as JointLoss; adds scale * d(total)/d(params) into `grad`.
template <typename T>
JointLossValue JointLossAndGradient(const DialogueModel<T>& model,
                                    const TrainingQuadruple& quadruple,
                                    const LossOptions& options,
                                    std::span<T> grad, T scale = T(1));

}  // namespace prefchat

#endif  // PREFCHAT_LOSSES_H_
