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

#ifndef PREFCHAT_DIALOGUE_H_
#define PREFCHAT_DIALOGUE_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace prefchat {

enum class Role { kA, kB };

inline Role Other(Role r) { return r == Role::kA ? Role::kB : Role::kA; }
std::string_view RoleName(Role r);
Role ParseRole(std::string_view name);

struct Utterance {
  Role role = Role::kA;
  std::string text;

  bool operator==(const Utterance&) const = default;
};

// The turns preceding a response. Roles strictly alternate.
struct DialogueContext {
  std::vector<Utterance> utterances;

  bool empty() const { return utterances.empty(); }
  // Role of whoever speaks next.
  Role NextRole() const;
  // Throws ValidationError when empty or when roles do not alternate.
  void Validate() const;

  bool operator==(const DialogueContext&) const = default;
};

}  // namespace prefchat

#endif  // PREFCHAT_DIALOGUE_H_
