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

#ifndef PREFCHAT_CORPUS_STATS_H_
#define PREFCHAT_CORPUS_STATS_H_

#include <cstddef>
#include <span>
#include <string>

#include "json.hpp"
#include "prefchat/dataset.h"

namespace prefchat {

struct CorpusStats {
  size_t n_dialogues = 0;
  // Every turn counts, openings and bot turns included.
  size_t n_utterances = 0;
  // Mean final_text length in vocabulary tokens (UTF-8 code points).
  double avg_utterance_length = 0;
  size_t n_annotated_turns = 0;
  // Fractions over select/revise/rewrite turns; all zero when there are none.
  double select = 0;
  double revise = 0;
  double rewrite = 0;
};

struct StatsOptions {
  bool include_rejected = false;
};

CorpusStats ComputeStats(std::span<const DialogueRecord> records,
                         const StatsOptions& options = {});

nlohmann::json ToJson(const CorpusStats& stats);
std::string FormatStatsTable(const CorpusStats& stats);

}  // namespace prefchat

#endif  // PREFCHAT_CORPUS_STATS_H_
