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

#include "prefchat/model.h"

#include <gtest/gtest.h>

#include "prefchat/encoding.h"
#include "prefchat/errors.h"
#include "test_util.h"

namespace prefchat {
namespace {

using testing::Context;
using testing::TinyModel;

std::vector<int> Ids(const Model& m, const std::string& response) {
  return EncodeDialogue(m, Context({"hello there", "hi"}), response).ids;
}

TEST(ModelTest, ForwardShapes) {
  const Model m = TinyModel();
  const std::vector<int> ids = Ids(m, "fine thanks");
  const Model::Output out = m.Forward(ids);
  EXPECT_EQ(out.logits.rows(), static_cast<int>(ids.size()));
  EXPECT_EQ(out.logits.cols(), m.config().vocab_size);
  EXPECT_EQ(out.hidden.cols(), m.config().d_model);
  EXPECT_TRUE(std::isfinite(out.preference_score));
}

TEST(ModelTest, ParameterCountMatchesLayout) {
  const Model m = TinyModel();
  const ModelConfig& c = m.config();
  const size_t d = c.d_model, v = c.vocab_size, ff = c.d_ff();
  const size_t per_layer = 2 * d + 3 * d * d + 2 * d + d * d + d + 2 * d +
                           d * ff + ff + ff * d + d;
  const size_t expected = v * d + c.max_positions() * d + c.n_layers * per_layer +
                          2 * d + d * v + d;
  EXPECT_EQ(m.parameter_count(), expected);
  EXPECT_EQ(m.layout().total(), expected);
}

TEST(ModelTest, EarlierPositionsIgnoreLaterTokens) {
  const Model m = TinyModel();
  std::vector<int> a = Ids(m, "abcdef");
  std::vector<int> b = a;
  const size_t t = 9;
  b[t] = m.vocabulary().Id("z") == b[t] ? m.vocabulary().Id("y") : m.vocabulary().Id("z");
  const Model::Output oa = m.Forward(a), ob = m.Forward(b);
  for (size_t i = 0; i < t; ++i) {
    for (int j = 0; j < oa.logits.cols(); ++j) {
      EXPECT_EQ(oa.logits(i, j), ob.logits(i, j)) << "position " << i;
    }
  }
  EXPECT_NE(oa.logits.row(t), ob.logits.row(t));
}

TEST(ModelTest, DifferentResponsesGetDifferentScores) {
  const Model m = TinyModel(11);
  const float s1 = m.Forward(Ids(m, "i like tea")).preference_score;
  const float s2 = m.Forward(Ids(m, "no idea")).preference_score;
  EXPECT_NE(s1, s2);
}

TEST(ModelTest, ScoreIsDeterministic) {
  const Model m = TinyModel();
  const std::vector<int> ids = Ids(m, "same");
  EXPECT_EQ(m.Forward(ids).preference_score, m.Forward(ids).preference_score);
}

TEST(ModelTest, IncrementalDecodingMatchesFullForward) {
  const ModelF64 m = TinyModel<double>(5);
  const std::vector<int> ids = EncodeDialogue(m, Context({"hello"}), "world").ids;
  const ModelF64::Output full = m.Forward(ids);

  ModelF64::DecoderState state = m.StartDecoding();
  const std::span<const int> all(ids);
  m.Extend(state, all.first(4));
  for (size_t i = 4; i < ids.size(); ++i) {
    const ModelF64::StepOutput step = m.Extend(state, all.subspan(i, 1));
    for (int j = 0; j < full.logits.cols(); ++j) {
      EXPECT_NEAR(step.logits(j), full.logits(i, j), 1e-12);
    }
    if (i + 1 == ids.size()) {
      EXPECT_NEAR(step.preference_score, full.preference_score, 1e-12);
    }
  }
  EXPECT_EQ(state.length, static_cast<int>(ids.size()));
}

TEST(ModelTest, SequencePastPositionLimitIsRejected) {
  const Model m = TinyModel();
  const std::vector<int> ids(m.config().max_positions() + 1, m.vocabulary().Id("a"));
  EXPECT_THROW(m.Forward(ids), ValidationError);
  EXPECT_THROW(m.Forward(std::vector<int>{}), ValidationError);
  EXPECT_THROW(m.Forward(std::vector<int>{m.config().vocab_size}), ValidationError);
}

TEST(ModelTest, ConstructorChecksParameterCount) {
  const Model m = TinyModel();
  std::vector<float> params(m.parameter_count() - 1, 0.f);
  EXPECT_THROW(Model(m.config(), m.vocabulary(), params), ValidationError);
}

TEST(ModelTest, InvalidConfigsAreRejected) {
  ModelConfig c = testing::TinyConfig(testing::SmallVocabulary().size());
  c.n_heads = 3;  // does not divide d_model
  EXPECT_THROW(c.Validate(), ValidationError);
  c = testing::TinyConfig(testing::SmallVocabulary().size());
  c.vocab_size = 4;
  EXPECT_THROW(Model(c, testing::SmallVocabulary()), ValidationError);
}

TEST(ModelTest, SeedDeterminesInitialization) {
  const Model a = TinyModel(3), b = TinyModel(3), c = TinyModel(4);
  EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(),
                         b.parameters().begin()));
  EXPECT_FALSE(std::equal(a.parameters().begin(), a.parameters().end(),
                          c.parameters().begin()));
}

TEST(ModelTest, DoublePrecisionCastAgreesWithFloat) {
  const Model m = TinyModel();
  const ModelF64 m64 = m.Cast<double>();
  const std::vector<int> ids = Ids(m, "cast me");
  EXPECT_NEAR(m.Forward(ids).preference_score, m64.Forward(ids).preference_score, 1e-4);
}

}  // namespace
}  // namespace prefchat
