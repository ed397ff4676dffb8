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

#include "prefchat/encoding.h"

#include "prefchat/errors.h"

namespace prefchat {

std::vector<int> EncodeContextSegment(const Vocabulary& vocab,
                                      const DialogueContext& context) {
  context.Validate();
  std::vector<int> ids;
  for (const auto& u : context.utterances) {
    auto tokens = vocab.Encode(u.text);
    ids.insert(ids.end(), tokens.begin(), tokens.end());
    ids.push_back(Vocabulary::kSep);
  }
  return ids;
}

EncodedDialogue EncodeDialogue(const Vocabulary& vocab,
                               const ModelConfig& config,
                               const DialogueContext& context,
                               std::optional<std::string_view> response) {
  std::vector<int> segment = EncodeContextSegment(vocab, context);
  const size_t keep =
      std::min(segment.size(), static_cast<size_t>(config.max_context_len));
  EncodedDialogue out;
  out.ids.reserve(keep + config.max_response_len + 3);
  out.ids.push_back(Vocabulary::kBos);
  out.ids.insert(out.ids.end(), segment.end() - keep, segment.end());
  out.context_tokens = static_cast<int>(keep);
  if (response) {
    std::vector<int> r = vocab.Encode(*response);
    if (r.size() > static_cast<size_t>(config.max_response_len)) {
      r.resize(config.max_response_len);
    }
    out.ids.insert(out.ids.end(), r.begin(), r.end());
    out.ids.push_back(Vocabulary::kEos);
    out.ids.push_back(Vocabulary::kScore);
    out.response_tokens = static_cast<int>(r.size());
    out.has_response = true;
  }
  return out;
}

DecodedDialogue DecodeDialogue(const Vocabulary& vocab,
                               std::span<const int> ids) {
  if (ids.empty() || ids.front() != Vocabulary::kBos) {
    throw FormatError("encoded dialogue must start with BOS");
  }
  DecodedDialogue out;
  std::vector<int> current;
  size_t i = 1;
  for (; i < ids.size(); ++i) {
    const int id = ids[i];
    if (id == Vocabulary::kSep) {
      out.context.push_back(vocab.Decode(current));
      current.clear();
    } else if (id == Vocabulary::kEos) {
      break;
    } else if (vocab.IsSpecial(id)) {
      throw FormatError("unexpected special token " + vocab.Token(id));
    } else {
      current.push_back(id);
    }
  }
  if (i < ids.size()) {
    out.response = vocab.Decode(current);
  } else if (!current.empty()) {
    throw FormatError("context segment is not SEP-terminated");
  }
  return out;
}

}  // namespace prefchat
