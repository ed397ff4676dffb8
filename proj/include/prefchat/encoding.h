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

#ifndef PREFCHAT_ENCODING_H_
#define PREFCHAT_ENCODING_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prefchat/dialogue.h"
#include "prefchat/model.h"
#include "prefchat/vocabulary.h"

namespace prefchat {

// Token layout of one (context, response) pair:
//
//   BOS | u1 SEP u2 SEP ... uN SEP | r1 ... rM | EOS SCORE
//
// The context segment (separators included) keeps its most recent
// max_context_len tokens; the response keeps its first max_response_len.
// Without a response only the prompt `BOS | context` is produced.
struct EncodedDialogue {
  std::vector<int> ids;
  int context_tokens = 0;
  int response_tokens = 0;
  bool has_response = false;

  int context_begin() const { return 1; }
  int response_begin() const { return 1 + context_tokens; }
  int eos_position() const { return response_begin() + response_tokens; }
  int score_position() const { return eos_position() + 1; }
};

// Context segment before truncation.
std::vector<int> EncodeContextSegment(const Vocabulary& vocab,
                                      const DialogueContext& context);

EncodedDialogue EncodeDialogue(const Vocabulary& vocab,
                               const ModelConfig& config,
                               const DialogueContext& context,
                               std::optional<std::string_view> response);

template <typename T>
EncodedDialogue EncodeDialogue(const DialogueModel<T>& model,
                               const DialogueContext& context,
                               std::optional<std::string_view> response) {
  return EncodeDialogue(model.vocabulary(), model.config(), context, response);
}

struct DecodedDialogue {
  std::vector<std::string> context;
  std::optional<std::string> response;
};

// Inverse of EncodeDialogue on an untruncated encoding.
DecodedDialogue DecodeDialogue(const Vocabulary& vocab,
                               std::span<const int> ids);

}  // namespace prefchat

#endif  // PREFCHAT_ENCODING_H_
