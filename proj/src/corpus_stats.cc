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

#include "prefchat/corpus_stats.h"

#include <fmt/format.h>

#include "prefchat/vocabulary.h"

namespace prefchat {

CorpusStats ComputeStats(std::span<const DialogueRecord> records,
                         const StatsOptions& options) {
  CorpusStats s;
  size_t total_length = 0;
  size_t counts[3] = {0, 0, 0};
  for (const auto& r : records) {
    if (r.status == RecordStatus::kRejected && !options.include_rejected) {
      continue;
    }
    ++s.n_dialogues;
    for (const auto& t : r.turns) {
      ++s.n_utterances;
      total_length += SplitCodePoints(t.final_text).size();
      switch (t.action) {
        case Action::kSelect: ++counts[0]; break;
        case Action::kRevise: ++counts[1]; break;
        case Action::kRewrite: ++counts[2]; break;
        default: break;
      }
    }
  }
  if (s.n_utterances > 0) {
    s.avg_utterance_length =
        static_cast<double>(total_length) / static_cast<double>(s.n_utterances);
  }
  s.n_annotated_turns = counts[0] + counts[1] + counts[2];
  if (s.n_annotated_turns > 0) {
    const double n = static_cast<double>(s.n_annotated_turns);
    s.select = counts[0] / n;
    s.revise = counts[1] / n;
    s.rewrite = counts[2] / n;
  }
  return s;
}

nlohmann::json ToJson(const CorpusStats& s) {
  return {{"n_dialogues", s.n_dialogues},
          {"n_utterances", s.n_utterances},
          {"avg_utterance_length", s.avg_utterance_length},
          {"n_annotated_turns", s.n_annotated_turns},
          {"action_proportions",
           {{"select", s.select}, {"revise", s.revise}, {"rewrite", s.rewrite}}}};
}

std::string FormatStatsTable(const CorpusStats& s) {
  std::string out;
  out += fmt::format("{:<24}{:>12}\n", "dialogues", s.n_dialogues);
  out += fmt::format("{:<24}{:>12}\n", "utterances", s.n_utterances);
  out += fmt::format("{:<24}{:>12.2f}\n", "avg utterance length",
                     s.avg_utterance_length);
  out += fmt::format("{:<24}{:>12}\n", "annotated turns", s.n_annotated_turns);
  out += fmt::format("{:<24}{:>11.1f}%\n", "select", 100 * s.select);
  out += fmt::format("{:<24}{:>11.1f}%\n", "revise", 100 * s.revise);
  out += fmt::format("{:<24}{:>11.1f}%\n", "rewrite", 100 * s.rewrite);
  return out;
}

}  // namespace prefchat
