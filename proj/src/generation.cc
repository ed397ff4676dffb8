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

#include "prefchat/generation.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "prefchat/encoding.h"
#include "prefchat/errors.h"
#include "prefchat/rng.h"

namespace prefchat {

void DecodeConfig::Validate(const ModelConfig& model) const {
  if (k < 1 || k > model.vocab_size) {
    throw ValidationError("top-k " + std::to_string(k) +
                          " outside [1, vocab_size=" +
                          std::to_string(model.vocab_size) + "]");
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ValidationError("temperature must be positive");
  }
  if (max_new_tokens < 1 || max_new_tokens > model.max_response_len) {
    throw ValidationError("max_new_tokens must be in [1, max_response_len=" +
                          std::to_string(model.max_response_len) + "]");
  }
  if (n_candidates < 1) throw ValidationError("n_candidates must be >= 1");
}

namespace {

bool Sampleable(int id) {
  return id == Vocabulary::kEos || id >= Vocabulary::kNumSpecial;
}

template <typename T>
ScoredCandidate SampleFrom(const DialogueModel<T>& model,
                           typename DialogueModel<T>::DecoderState state,
                           typename DialogueModel<T>::RowVector logits,
                           const DecodeConfig& config, Rng& rng,
                           std::vector<SampleStep>* trace) {
  const int vocab = model.config().vocab_size;
  std::vector<int> allowed;
  for (int id = 0; id < vocab; ++id) {
    if (Sampleable(id)) allowed.push_back(id);
  }
  const size_t k = std::min<size_t>(config.k, allowed.size());
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  ScoredCandidate out;
  std::vector<int> tokens;
  std::vector<int> order = allowed;
  std::vector<double> probs(k);
  int pending = -1;
  while (true) {
    auto by_logit = [&](int a, int b) {
      if (logits(a) != logits(b)) return logits(a) > logits(b);
      return a < b;
    };
    std::partial_sort(order.begin(), order.begin() + k, order.end(), by_logit);
    const double top = static_cast<double>(logits(order[0])) / config.temperature;
    double z = 0;
    for (size_t i = 0; i < k; ++i) {
      probs[i] = std::exp(static_cast<double>(logits(order[i])) / config.temperature - top);
      z += probs[i];
    }
    const double u = uniform(rng) * z;
    size_t pick = k - 1;
    double acc = 0;
    for (size_t i = 0; i < k; ++i) {
      acc += probs[i];
      if (u < acc) {
        pick = i;
        break;
      }
    }
    const int token = order[pick];
    const double logprob = std::log(probs[pick] / z);
    out.generation_logprob += logprob;
    if (trace) {
      SampleStep step;
      step.logits.assign(logits.data(), logits.data() + logits.size());
      step.allowed_ids.assign(order.begin(), order.begin() + k);
      step.chosen = token;
      step.logprob = logprob;
      trace->push_back(std::move(step));
    }
    if (token == Vocabulary::kEos) break;
    tokens.push_back(token);
    if (static_cast<int>(tokens.size()) >= config.max_new_tokens) {
      pending = token;
      break;
    }
    const int next[1] = {token};
    logits = model.Extend(state, next).logits;
  }
  // The read-out costs one SCORE token past the closing EOS.
  std::vector<int> tail;
  if (pending >= 0) tail.push_back(pending);
  tail.push_back(Vocabulary::kEos);
  tail.push_back(Vocabulary::kScore);
  out.preference_score = model.Extend(state, tail).preference_score;
  out.text = model.vocabulary().Decode(tokens);
  out.token_count = static_cast<int>(tokens.size());
  return out;
}

template <typename T>
struct Prefilled {
  typename DialogueModel<T>::DecoderState state;
  typename DialogueModel<T>::RowVector logits;
};

template <typename T>
Prefilled<T> Prefill(const DialogueModel<T>& model,
                     const DialogueContext& context) {
  EncodedDialogue prompt = EncodeDialogue(model, context, std::nullopt);
  Prefilled<T> p{model.StartDecoding(), {}};
  p.logits = model.Extend(p.state, prompt.ids).logits;
  return p;
}

}  // namespace

template <typename T>
ScoredCandidate TopKSample(const DialogueModel<T>& model,
                           const DialogueContext& context,
                           const DecodeConfig& config,
                           std::vector<SampleStep>* trace) {
  config.Validate(model.config());
  context.Validate();
  Prefilled<T> p = Prefill(model, context);
  Rng rng = MakeRng({config.rng_seed});
  return SampleFrom(model, std::move(p.state), std::move(p.logits), config,
                    rng, trace);
}

template <typename T>
std::vector<ScoredCandidate> GenerateCandidates(const DialogueModel<T>& model,
                                                const DialogueContext& context,
                                                const DecodeConfig& config) {
  constexpr int kExtraAttempts = 3;
  config.Validate(model.config());
  context.Validate();
  const Prefilled<T> p = Prefill(model, context);
  std::vector<ScoredCandidate> out;
  std::set<std::string> seen;
  for (int i = 0; i < config.n_candidates; ++i) {
    ScoredCandidate c;
    for (int attempt = 0; attempt <= kExtraAttempts; ++attempt) {
      Rng rng = MakeRng({config.rng_seed, static_cast<uint64_t>(i),
                         static_cast<uint64_t>(attempt)});
      c = SampleFrom(model, p.state, p.logits, config, rng, nullptr);
      if (!seen.count(c.text)) break;
    }
    seen.insert(c.text);
    out.push_back(std::move(c));
  }
  return out;
}

size_t SelectByPreference(std::span<const ScoredCandidate> candidates) {
  if (candidates.empty()) throw ValidationError("no candidates to select from");
  size_t best = 0;
  for (size_t i = 1; i < candidates.size(); ++i) {
    const auto& a = candidates[i];
    const auto& b = candidates[best];
    if (a.preference_score > b.preference_score ||
        (a.preference_score == b.preference_score &&
         a.generation_logprob > b.generation_logprob)) {
      best = i;
    }
  }
  return best;
}

template <typename T>
Response Respond(const DialogueModel<T>& model, const DialogueContext& context,
                 const DecodeConfig& config) {
  Response r;
  r.candidates = GenerateCandidates(model, context, config);
  r.chosen = SelectByPreference(r.candidates);
  return r;
}

template <typename T>
DialogueRecord SelfChat(const DialogueModel<T>& model, std::string opening,
                        int rounds, const DecodeConfig& config,
                        std::string record_id) {
  if (rounds < 1) throw ValidationError("self-chat needs at least one round");
  if (opening.empty()) throw ValidationError("self-chat opening is empty");
  DialogueRecord record;
  record.id = std::move(record_id);
  record.status = RecordStatus::kComplete;
  record.turns.push_back({Role::kA, std::move(opening), Action::kOpening, {}, {}, {}});
  for (int i = 1; i <= 2 * rounds; ++i) {
    DecodeConfig turn_config = config;
    turn_config.rng_seed = MixSeed({config.rng_seed, static_cast<uint64_t>(i)});
    const DialogueContext context = record.ContextBefore(record.turns.size());
    Response r = Respond(model, context, turn_config);
    AnnotatedTurn turn;
    turn.speaker_role = context.NextRole();
    turn.action = Action::kBot;
    turn.final_text = r.best().text;
    turn.chosen_index = r.chosen;
    for (const auto& c : r.candidates) {
      turn.shown_candidates.push_back(c.text);
      turn.candidate_scores.push_back(c.preference_score);
    }
    record.turns.push_back(std::move(turn));
  }
  return record;
}

#define PREFCHAT_INSTANTIATE_GENERATION(T)                                    \
  template ScoredCandidate TopKSample<T>(const DialogueModel<T>&,              \
                                         const DialogueContext&,               \
                                         const DecodeConfig&,                  \
                                         std::vector<SampleStep>*);            \
  template std::vector<ScoredCandidate> GenerateCandidates<T>(                 \
      const DialogueModel<T>&, const DialogueContext&, const DecodeConfig&);   \
  template Response Respond<T>(const DialogueModel<T>&,                        \
                               const DialogueContext&, const DecodeConfig&);   \
  template DialogueRecord SelfChat<T>(const DialogueModel<T>&, std::string,    \
                                      int, const DecodeConfig&, std::string);

PREFCHAT_INSTANTIATE_GENERATION(float)
PREFCHAT_INSTANTIATE_GENERATION(double)

}  // namespace prefchat
