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

#ifndef PREFCHAT_GENERATION_H_
#define PREFCHAT_GENERATION_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prefchat/dataset.h"
#include "prefchat/dialogue.h"
#include "prefchat/model.h"

namespace prefchat {

struct DecodeConfig {
  int k = 10;
  double temperature = 1.0;
  int max_new_tokens = 128;
  int n_candidates = 7;
  uint64_t rng_seed = 0;

  void Validate(const ModelConfig& model) const;
};

struct ScoredCandidate {
  std::string text;
  double preference_score = 0;
  // Sum of log-probabilities under the renormalised top-k distributions.
  double generation_logprob = 0;
  int token_count = 0;
};

// Per-step record of a sampling run, for auditing the decoder.
struct SampleStep {
  std::vector<float> logits;     // raw logits before masking
  std::vector<int> allowed_ids;  // the step's top-k set
  int chosen = -1;
  double logprob = 0;
};

// Samples one response. PAD, BOS, SEP and SCORE are never emitted. Stops at
// EOS or after max_new_tokens tokens.
template <typename T>
ScoredCandidate TopKSample(const DialogueModel<T>& model,
                           const DialogueContext& context,
                           const DecodeConfig& config,
                           std::vector<SampleStep>* trace = nullptr);

// n_candidates samples on independent substreams of config.rng_seed. A text
// that duplicates an earlier candidate is re-drawn up to three times.
template <typename T>
std::vector<ScoredCandidate> GenerateCandidates(const DialogueModel<T>& model,
                                                const DialogueContext& context,
                                                const DecodeConfig& config);

// Highest preference score; ties go to the higher generation_logprob, then
// the lower index.
size_t SelectByPreference(std::span<const ScoredCandidate> candidates);

struct Response {
  std::vector<ScoredCandidate> candidates;
  size_t chosen = 0;

  const ScoredCandidate& best() const { return candidates[chosen]; }
};

template <typename T>
Response Respond(const DialogueModel<T>& model, const DialogueContext& context,
                 const DecodeConfig& config);

// The model plays both speakers for `rounds` exchanges after the opening.
// Turn i uses the substream MixSeed(config.rng_seed, i).
template <typename T>
DialogueRecord SelfChat(const DialogueModel<T>& model, std::string opening,
                        int rounds, const DecodeConfig& config,
                        std::string record_id = "self-chat");

}  // namespace prefchat

#endif  // PREFCHAT_GENERATION_H_
