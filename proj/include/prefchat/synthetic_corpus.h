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

#ifndef PREFCHAT_SYNTHETIC_CORPUS_H_
#define PREFCHAT_SYNTHETIC_CORPUS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "prefchat/dataset.h"

namespace prefchat {

// Generator for collection-style dialogues over pseudo-words.
//
// Every dialogue has a register: a small set of consonants reserved for it.
// Annotator-written turns use only words built from their dialogue's
// register. Candidate texts, standing in for model samples, are shorter and
// draw each word from the dialogue's register only with probability
// candidate_on_topic, otherwise from another register. Registers are used
// equally often across the corpus, so context-free n-gram statistics of
// marked and unmarked text coincide; only the relation to the context
// separates them.
struct SyntheticCorpusConfig {
  int n_dialogues = 300;
  int min_rounds = 7;
  int max_rounds = 7;
  int n_registers = 6;
  int human_min_words = 2;
  int human_max_words = 4;
  int candidate_min_words = 1;
  int candidate_max_words = 2;
  double candidate_on_topic = 0.5;
  double p_select = 0.18;
  double p_revise = 0.41;
  RecordStatus status = RecordStatus::kAccepted;
  uint64_t seed = 0;

  void Validate() const;
};

std::vector<DialogueRecord> GenerateSyntheticCorpus(
    const SyntheticCorpusConfig& config);

// Characters the generator can emit (the space and the letters), for
// building a compact vocabulary.
std::vector<std::string> SyntheticAlphabet();

}  // namespace prefchat

#endif  // PREFCHAT_SYNTHETIC_CORPUS_H_
