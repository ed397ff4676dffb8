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

#include "prefchat/generation.h"

#include <gtest/gtest.h>

#include "prefchat/encoding.h"
#include "prefchat/errors.h"
#include "test_util.h"

namespace prefchat {
namespace {

using testing::Context;
using testing::TinyModel;

// Greedy decoding recomputed from full forward passes.
std::string GreedyOracle(const Model& m, const DialogueContext& ctx, int max_tokens) {
  std::vector<int> ids = EncodeDialogue(m, ctx, std::nullopt).ids;
  std::vector<int> out;
  while (static_cast<int>(out.size()) < max_tokens) {
    const Model::Output o = m.Forward(ids);
    int best = -1;
    for (int j = 0; j < o.logits.cols(); ++j) {
      if (j != Vocabulary::kEos && j < Vocabulary::kNumSpecial) continue;
      if (best < 0 || o.logits(o.logits.rows() - 1, j) > o.logits(o.logits.rows() - 1, best)) {
        best = j;
      }
    }
    if (best == Vocabulary::kEos) break;
    out.push_back(best);
    ids.push_back(best);
  }
  return m.vocabulary().Decode(out);
}

// Final LayerNorm collapsed to a constant so every position predicts `token`
// with a wide margin and EOS is strongly suppressed.
Model ConstantPredictor(const std::string& token) {
  Model m = TinyModel(3);
  const auto& l = m.layout();
  const int d = m.config().d_model, v = m.config().vocab_size;
  auto p = m.mutable_parameters();
  std::fill_n(p.begin() + l.lnf_gain, d, 0.f);
  std::fill_n(p.begin() + l.lnf_bias, d, 0.f);
  p[l.lnf_bias] = 1.f;
  std::fill_n(p.begin() + l.lm_head, d * v, 0.f);
  p[l.lm_head + m.vocabulary().Id(token)] = 10.f;
  p[l.lm_head + Vocabulary::kEos] = -10.f;
  return m;
}

TEST(TopKSampleTest, KEqualsOneIsGreedy) {
  for (uint64_t seed : {1u, 2u, 3u}) {
    const Model m = TinyModel(seed);
    const DialogueContext ctx = Context({"hello", "hi there"});
    DecodeConfig c;
    c.k = 1;
    c.max_new_tokens = 20;
    c.rng_seed = seed * 101;
    EXPECT_EQ(TopKSample(m, ctx, c).text, GreedyOracle(m, ctx, 20));
  }
}

TEST(TopKSampleTest, KLargerThanVocabularyIsRejected) {
  const Model m = TinyModel();
  DecodeConfig c;
  c.k = m.config().vocab_size + 1;
  EXPECT_THROW(TopKSample(m, Context({"hi"}), c), ValidationError);
  c.k = 0;
  EXPECT_THROW(TopKSample(m, Context({"hi"}), c), ValidationError);
}

TEST(TopKSampleTest, StopsAtTokenBudgetWithoutEos) {
  Vocabulary v = Vocabulary::Ascii();
  ModelConfig mc;
  mc.n_layers = 1;
  mc.n_heads = 2;
  mc.d_model = 16;
  mc.max_context_len = 16;
  mc.max_response_len = 128;
  mc.vocab_size = v.size();
  Model m(mc, v);
  const auto& l = m.layout();
  auto p = m.mutable_parameters();
  std::fill_n(p.begin() + l.lnf_gain, 16, 0.f);
  std::fill_n(p.begin() + l.lnf_bias, 16, 0.f);
  p[l.lnf_bias] = 1.f;
  std::fill_n(p.begin() + l.lm_head, 16 * v.size(), 0.f);
  p[l.lm_head + v.Id("q")] = 10.f;
  p[l.lm_head + Vocabulary::kEos] = -10.f;

  DecodeConfig c;
  c.k = 1;
  c.max_new_tokens = 128;
  const ScoredCandidate s = TopKSample(m, Context({"hi"}), c);
  EXPECT_EQ(s.token_count, 128);
  EXPECT_EQ(s.text, std::string(128, 'q'));
  EXPECT_TRUE(std::isfinite(s.preference_score));
}

TEST(TopKSampleTest, NeverEmitsStructuralTokens) {
  const Model m = TinyModel(8);
  DecodeConfig c;
  c.k = m.config().vocab_size;
  c.max_new_tokens = 24;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    c.rng_seed = seed;
    std::vector<SampleStep> trace;
    TopKSample(m, Context({"abc"}), c, &trace);
    for (const SampleStep& s : trace) {
      EXPECT_EQ(s.allowed_ids.size(), static_cast<size_t>(m.config().vocab_size - 4));
      for (int id : s.allowed_ids) {
        EXPECT_TRUE(id == Vocabulary::kEos || id >= Vocabulary::kNumSpecial);
      }
      EXPECT_NE(std::find(s.allowed_ids.begin(), s.allowed_ids.end(), s.chosen),
                s.allowed_ids.end());
    }
  }
}

TEST(TopKSampleTest, RestrictsChoicesToTheTopK) {
  const Model m = TinyModel(12);
  DecodeConfig c;
  c.k = 3;
  c.max_new_tokens = 24;
  std::vector<SampleStep> trace;
  const ScoredCandidate s = TopKSample(m, Context({"hey"}), c, &trace);
  double total = 0;
  for (const SampleStep& step : trace) {
    ASSERT_EQ(step.allowed_ids.size(), 3u);
    for (int id : step.allowed_ids) {
      int better = 0;
      for (int j = Vocabulary::kNumSpecial; j < m.config().vocab_size; ++j) {
        better += step.logits[j] > step.logits[id];
      }
      better += id != Vocabulary::kEos && step.logits[Vocabulary::kEos] > step.logits[id];
      EXPECT_LT(better, 3);
    }
    total += step.logprob;
  }
  EXPECT_NEAR(s.generation_logprob, total, 1e-9);
}

TEST(TopKSampleTest, ConstantPredictorRepeatsItsToken) {
  const Model m = ConstantPredictor("z");
  DecodeConfig c;
  c.k = 1;
  c.max_new_tokens = 24;
  EXPECT_EQ(TopKSample(m, Context({"hi"}), c).text, std::string(24, 'z'));
}

TEST(GenerateCandidatesTest, ProducesRequestedCountReproducibly) {
  const Model m = TinyModel(4);
  DecodeConfig c;
  c.max_new_tokens = 12;
  c.rng_seed = 77;
  const auto a = GenerateCandidates(m, Context({"hello"}), c);
  const auto b = GenerateCandidates(m, Context({"hello"}), c);
  ASSERT_EQ(a.size(), 7u);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].text, b[i].text);
    EXPECT_EQ(a[i].preference_score, b[i].preference_score);
  }
  c.rng_seed = 78;
  const auto other = GenerateCandidates(m, Context({"hello"}), c);
  bool differs = false;
  for (size_t i = 0; i < a.size(); ++i) differs |= a[i].text != other[i].text;
  EXPECT_TRUE(differs);
}

TEST(GenerateCandidatesTest, ScoresMatchStandaloneScoring) {
  const Model m = TinyModel(4);
  DecodeConfig c;
  c.max_new_tokens = 12;
  c.n_candidates = 3;
  const DialogueContext ctx = Context({"hello", "hey"});
  for (const ScoredCandidate& s : GenerateCandidates(m, ctx, c)) {
    if (s.text.empty()) continue;
    const EncodedDialogue e = EncodeDialogue(m, ctx, s.text);
    EXPECT_NEAR(s.preference_score, m.Forward(e.ids).preference_score, 1e-4);
  }
}

ScoredCandidate Scored(double score, double logprob = 0) {
  ScoredCandidate s;
  s.preference_score = score;
  s.generation_logprob = logprob;
  return s;
}

TEST(SelectByPreferenceTest, PicksHighestScore) {
  const std::vector<ScoredCandidate> c{Scored(0.2), Scored(1.5), Scored(-0.3)};
  EXPECT_EQ(SelectByPreference(c), 1u);
  std::vector<ScoredCandidate> shifted = c;
  for (auto& s : shifted) s.preference_score += 17.25;
  EXPECT_EQ(SelectByPreference(shifted), 1u);
  EXPECT_EQ(SelectByPreference(std::vector<ScoredCandidate>{Scored(-4)}), 0u);
}

TEST(SelectByPreferenceTest, TiesUseLogProbThenIndex) {
  EXPECT_EQ(SelectByPreference(std::vector{Scored(1, -5), Scored(1, -2), Scored(0, 0)}), 1u);
  EXPECT_EQ(SelectByPreference(std::vector{Scored(1, -2), Scored(1, -2)}), 0u);
  EXPECT_THROW(SelectByPreference(std::vector<ScoredCandidate>{}), ValidationError);
}

TEST(SelfChatTest, FiveRoundsGiveElevenUtterances) {
  const Model m = TinyModel(6);
  DecodeConfig c;
  c.max_new_tokens = 10;
  c.n_candidates = 3;
  const DialogueRecord r = SelfChat(m, "hello there", 5, c, "sc-1");
  ASSERT_EQ(r.turns.size(), 11u);
  EXPECT_EQ(r.id, "sc-1");
  EXPECT_EQ(r.turns[0].final_text, "hello there");
  for (size_t i = 1; i < r.turns.size(); ++i) {
    const AnnotatedTurn& t = r.turns[i];
    EXPECT_EQ(t.action, Action::kBot);
    EXPECT_NE(t.speaker_role, r.turns[i - 1].speaker_role);
    ASSERT_EQ(t.shown_candidates.size(), 3u);
    EXPECT_EQ(t.final_text, t.shown_candidates[*t.chosen_index]);
  }
  EXPECT_NO_THROW(ValidateRecord(r));
  EXPECT_EQ(SelfChat(m, "hello there", 5, c, "sc-1"), r);
  EXPECT_THROW(SelfChat(m, "hi", 0, c), ValidationError);
}

}  // namespace
}  // namespace prefchat
