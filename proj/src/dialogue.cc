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

#include "prefchat/dialogue.h"

#include "prefchat/errors.h"

namespace prefchat {

std::string_view RoleName(Role r) { return r == Role::kA ? "A" : "B"; }

Role ParseRole(std::string_view name) {
  if (name == "A") return Role::kA;
  if (name == "B") return Role::kB;
  throw ValidationError("unknown speaker role '" + std::string(name) + "'");
}

Role DialogueContext::NextRole() const {
  return utterances.empty() ? Role::kA : Other(utterances.back().role);
}

void DialogueContext::Validate() const {
  if (utterances.empty()) throw ValidationError("dialogue context is empty");
  for (size_t i = 1; i < utterances.size(); ++i) {
    if (utterances[i].role == utterances[i - 1].role) {
      throw ValidationError("speaker roles do not alternate at utterance " +
                            std::to_string(i));
    }
  }
}

}  // namespace prefchat
