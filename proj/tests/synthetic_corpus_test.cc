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

#include "prefchat/synthetic_corpus.h"

#include <gtest/gtest.h>

#include <map>
#include <set>

#include "prefchat/corpus_stats.h"
#include "prefchat/errors.h"
#include "prefchat/vocabulary.h"

namespace prefchat {
namespace {

// Consonants of a text, which identify the registers it draws from.
std::set<char> Consonants(const std::string& s) {
  std::set<char> out;
  for (char c : s) {
    if (c != ' ' && std::string_view("aeiou").find(c) == std::string_view::npos) {
      out.insert(c);
    }
  }
  return out;
}

TEST(SyntheticCorpusTest, RecordsAreValidAndReproducible) {
  SyntheticCorpusConfig c;
  c.n_dialogues = 40;
  c.seed = 3;
  const auto a = GenerateSyntheticCorpus(c);
  ASSERT_EQ(a.size(), 40u);
  for (const auto& r : a) {
    EXPECT_NO_THROW(ValidateRecord(r));
    EXPECT_EQ(r.AnnotatedTurnCount(), 7u);
  }
  EXPECT_EQ(GenerateSyntheticCorpus(c), a);
  c.seed = 4;
  EXPECT_NE(GenerateSyntheticCorpus(c), a);
}

TEST(SyntheticCorpusTest, FinalTextsStayInTheDialogueRegister) {
  SyntheticCorpusConfig c;
  c.n_dialogues = 30;
  for (const auto& r : GenerateSyntheticCorpus(c)) {
    std::set<char> reg;
    for (const auto& t : r.turns) {
      const auto cs = Consonants(t.final_text);
      reg.insert(cs.begin(), cs.end());
    }
    EXPECT_LE(reg.size(), 2u) << r.id;
  }
}

TEST(SyntheticCorpusTest, ActionMixFollowsConfiguration) {
  SyntheticCorpusConfig c;
  c.n_dialogues = 400;
  const CorpusStats s = ComputeStats(GenerateSyntheticCorpus(c));
  EXPECT_NEAR(s.select, 0.18, 0.03);
  EXPECT_NEAR(s.revise, 0.41, 0.03);
  EXPECT_NEAR(s.rewrite, 0.41, 0.03);
}

TEST(SyntheticCorpusTest, CharacterFrequenciesAreBalancedAcrossRegisters) {
  // Over the whole corpus annotator texts and candidates use every consonant
  // at similar rates, so no context-free character model can tell them apart.
  SyntheticCorpusConfig c;
  c.n_dialogues = 600;
  std::map<char, double> human, cand;
  double nh = 0, nc = 0;
  for (const auto& r : GenerateSyntheticCorpus(c)) {
    for (const auto& t : r.turns) {
      for (char ch : Consonants(t.final_text)) human[ch] += 1, nh += 1;
      for (const auto& s : t.shown_candidates) {
        for (char ch : Consonants(s)) cand[ch] += 1, nc += 1;
      }
    }
  }
  ASSERT_EQ(human.size(), 12u);
  for (const auto& [ch, n] : human) {
    EXPECT_NEAR(n / nh, 1.0 / 12, 0.01) << ch;
    EXPECT_NEAR(cand[ch] / nc, 1.0 / 12, 0.01) << ch;
  }
}

TEST(SyntheticCorpusTest, AlphabetCoversGeneratedText) {
  const Vocabulary v = Vocabulary::FromTokens(SyntheticAlphabet());
  SyntheticCorpusConfig c;
  c.n_dialogues = 10;
  for (const auto& r : GenerateSyntheticCorpus(c)) {
    for (const auto& t : r.turns) EXPECT_NO_THROW(v.Encode(t.final_text));
  }
}

TEST(SyntheticCorpusTest, InvalidConfigsAreRejected) {
  SyntheticCorpusConfig c;
  c.n_registers = 7;
  EXPECT_THROW(c.Validate(), ValidationError);
  c = {};
  c.min_rounds = 5;
  c.max_rounds = 4;
  EXPECT_THROW(c.Validate(), ValidationError);
  c = {};
  c.p_select = 0.7;
  c.p_revise = 0.5;
  EXPECT_THROW(c.Validate(), ValidationError);
}

}  // namespace
}  // namespace prefchat
