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

#ifndef PREFCHAT_CHECKPOINT_H_
#define PREFCHAT_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "json.hpp"
#include "prefchat/model.h"

namespace prefchat {

inline constexpr uint32_t kCheckpointFormatVersion = 1;

nlohmann::json ModelConfigToJson(const ModelConfig& config);
// Unknown keys are rejected; missing keys keep their defaults.
ModelConfig ModelConfigFromJson(const nlohmann::json& j);

// Optimizer progress stored next to the weights so training can resume.
template <typename T>
struct TrainingState {
  uint64_t step = 0;
  int epochs_completed = 0;
  std::vector<T> adam_m;
  std::vector<T> adam_v;
};

// Container layout (all integers little-endian):
//   8-byte magic "PREFCKPT" | u32 format version | u64 header length |
//   JSON header | raw little-endian arrays.
// The header carries the config, the vocabulary, the dtype ("float32" or
// "float64") and a table of named arrays with byte offsets into the payload.
template <typename T>
void WriteCheckpoint(std::ostream& out, const DialogueModel<T>& model,
                     const TrainingState<T>* state = nullptr);
template <typename T>
DialogueModel<T> ReadCheckpoint(std::istream& in,
                                TrainingState<T>* state = nullptr);

template <typename T>
void SaveCheckpoint(const std::filesystem::path& path,
                    const DialogueModel<T>& model,
                    const TrainingState<T>* state = nullptr);
template <typename T>
DialogueModel<T> LoadCheckpoint(const std::filesystem::path& path,
                                TrainingState<T>* state = nullptr);

nlohmann::json ReadCheckpointHeader(const std::filesystem::path& path);

}  // namespace prefchat

#endif  // PREFCHAT_CHECKPOINT_H_
