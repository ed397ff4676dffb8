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

#ifndef PREFCHAT_QUADRUPLES_H_
#define PREFCHAT_QUADRUPLES_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "prefchat/dataset.h"
#include "prefchat/dialogue.h"

namespace prefchat {

// One joint-training sample: context, the human response, one candidate shown
// during annotation, and a response from another dialogue.
struct TrainingQuadruple {
  DialogueContext context;
  std::string human;
  std::string model;
  std::string random;
  std::string record_id;
  size_t turn_index = 0;

  bool operator==(const TrainingQuadruple&) const = default;
};

bool IsTrainable(const DialogueRecord& record);

// One quadruple per annotated turn of every accepted or complete record.
// The displayed candidate is uniform over shown_candidates that differ from
// the human response; the random response is uniform over non-opening turns of
// the other eligible dialogues. Draws depend only on (epoch_seed, record id,
// turn index) and the dataset. Turns whose candidates all equal the human
// response are skipped with a warning.
std::vector<TrainingQuadruple> BuildQuadruples(
    std::span<const DialogueRecord> records, uint64_t epoch_seed);

nlohmann::json QuadrupleToJson(const TrainingQuadruple& q);

}  // namespace prefchat

#endif  // PREFCHAT_QUADRUPLES_H_
