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

#include "prefchat/quadruples.h"

#include <random>

#include <spdlog/spdlog.h>

#include "prefchat/errors.h"
#include "prefchat/rng.h"

namespace prefchat {

bool IsTrainable(const DialogueRecord& record) {
  return record.status == RecordStatus::kAccepted ||
         record.status == RecordStatus::kComplete;
}

std::vector<TrainingQuadruple> BuildQuadruples(
    std::span<const DialogueRecord> records, uint64_t epoch_seed) {
  // Pool of response texts, grouped by dialogue so a dialogue's own entries
  // form one contiguous [begin, end) block.
  struct Block {
    size_t begin, end;
  };
  std::vector<const DialogueRecord*> eligible;
  std::vector<std::string_view> pool;
  std::vector<Block> blocks;
  for (const auto& r : records) {
    if (!IsTrainable(r)) continue;
    eligible.push_back(&r);
    Block b{pool.size(), 0};
    for (const auto& t : r.turns) {
      if (t.action != Action::kOpening) pool.push_back(t.final_text);
    }
    b.end = pool.size();
    blocks.push_back(b);
  }

  std::vector<TrainingQuadruple> out;
  for (size_t d = 0; d < eligible.size(); ++d) {
    const DialogueRecord& r = *eligible[d];
    const size_t own = blocks[d].end - blocks[d].begin;
    const size_t foreign = pool.size() - own;
    for (size_t ti = 0; ti < r.turns.size(); ++ti) {
      const AnnotatedTurn& t = r.turns[ti];
      if (!IsAnnotated(t.action)) continue;
      std::vector<size_t> candidates;
      for (size_t c = 0; c < t.shown_candidates.size(); ++c) {
        if (t.shown_candidates[c] != t.final_text) candidates.push_back(c);
      }
      if (candidates.empty()) {
        spdlog::warn("record {} turn {}: every shown candidate equals the "
                     "human response; no quadruple",
                     r.id, ti);
        continue;
      }
      if (foreign == 0) {
        throw ValidationError(
            "building quadruples needs responses from at least two dialogues");
      }
      Rng rng = MakeRng({epoch_seed, HashString(r.id), ti});
      std::uniform_int_distribution<size_t> pick_m(0, candidates.size() - 1);
      std::uniform_int_distribution<size_t> pick_r(0, foreign - 1);
      const size_t m = candidates[pick_m(rng)];
      size_t k = pick_r(rng);
      if (k >= blocks[d].begin) k += own;

      TrainingQuadruple q;
      q.context = r.ContextBefore(ti);
      q.human = t.final_text;
      q.model = t.shown_candidates[m];
      q.random = std::string(pool[k]);
      q.record_id = r.id;
      q.turn_index = ti;
      out.push_back(std::move(q));
    }
  }
  return out;
}

nlohmann::json QuadrupleToJson(const TrainingQuadruple& q) {
  nlohmann::json ctx = nlohmann::json::array();
  for (const auto& u : q.context.utterances) {
    ctx.push_back({{"speaker_role", RoleName(u.role)}, {"text", u.text}});
  }
  return {{"record_id", q.record_id}, {"turn_index", q.turn_index},
          {"context", std::move(ctx)}, {"r_h", q.human},
          {"r_m", q.model},           {"r_r", q.random}};
}

}  // namespace prefchat
