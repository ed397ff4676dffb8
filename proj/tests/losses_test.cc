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

#include "prefchat/losses.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "prefchat/encoding.h"
#include "prefchat/errors.h"
#include "test_util.h"

namespace prefchat {
namespace {

using testing::Context;
using testing::TinyModel;

// Direct evaluation in long double with log(1/(1+exp(-x))).
long double PeOracle(long double h, long double m, long double r) {
  auto log_sigmoid = [](long double x) { return -std::log1p(std::exp(-x)); };
  return -(log_sigmoid(h - m) + log_sigmoid(h - r) + log_sigmoid(m - r)) / 3.0L;
}

TEST(PeLossTest, EqualScoresGiveLogTwo) {
  EXPECT_NEAR(PeLoss(0, 0, 0), std::log(2.0), 1e-12);
  EXPECT_NEAR(PeLoss(5, 5, 5), std::log(2.0), 1e-12);
}

TEST(PeLossTest, OrderedTripleMatchesOracle) {
  EXPECT_NEAR(PeLoss(1, 0, -1), static_cast<double>(PeOracle(1, 0, -1)), 1e-12);
  EXPECT_NEAR(PeLoss(1, 0, -1), 0.251151, 1e-6);
}

TEST(PeLossTest, RandomTriplesMatchOracle) {
  std::mt19937_64 rng(123);
  std::normal_distribution<double> n(0.0, 8.0);
  for (int i = 0; i < 1000; ++i) {
    const double h = n(rng), m = n(rng), r = n(rng);
    EXPECT_NEAR(PeLoss(h, m, r), static_cast<double>(PeOracle(h, m, r)), 1e-9);
  }
}

TEST(PeLossTest, DependsOnlyOnDifferences) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  for (double c : {-100.0, -1.5, 0.25, 42.0}) {
    const double h = u(rng), m = u(rng), r = u(rng);
    EXPECT_NEAR(PeLoss(h + c, m + c, r + c), PeLoss(h, m, r), 1e-9);
  }
}

TEST(PeLossTest, PositiveAndVanishingWithWideOrderedGaps) {
  EXPECT_GT(PeLoss(3, -2, 7), 0.0);
  EXPECT_GT(PeLoss(30, 0, -30), 0.0);
  EXPECT_LT(PeLoss(60, 0, -60), 1e-20);
  EXPECT_EQ(PeLoss(1e3, 0, -1e3), 0.0);
  // Reversed order grows linearly.
  EXPECT_NEAR(PeLoss(-300, 0, 300), (300 + 600 + 300) / 3.0, 1e-9);
}

TEST(PeLossTest, NonFiniteScoresAreRejected) {
  EXPECT_THROW(PeLoss(NAN, 0, 0), ValidationError);
  EXPECT_THROW(PeLoss(0, INFINITY, 0), ValidationError);
}

TEST(PeLossTest, GradientMatchesFiniteDifferences) {
  const double h = 0.3, m = -1.1, r = 0.7, eps = 1e-6;
  const PeLossGradient g = PeLossWithGradient(h, m, r);
  EXPECT_DOUBLE_EQ(g.loss, PeLoss(h, m, r));
  EXPECT_NEAR(g.d_human, (PeLoss(h + eps, m, r) - PeLoss(h - eps, m, r)) / (2 * eps), 1e-8);
  EXPECT_NEAR(g.d_model, (PeLoss(h, m + eps, r) - PeLoss(h, m - eps, r)) / (2 * eps), 1e-8);
  EXPECT_NEAR(g.d_random, (PeLoss(h, m, r + eps) - PeLoss(h, m, r - eps)) / (2 * eps), 1e-8);
  EXPECT_NEAR(g.d_human + g.d_model + g.d_random, 0.0, 1e-15);
}

TEST(SoftplusTest, StableAtExtremes) {
  EXPECT_DOUBLE_EQ(Softplus(800), 800);
  EXPECT_GT(Softplus(-700), 0.0);
  EXPECT_NEAR(Softplus(-700) / std::exp(-700.0), 1.0, 1e-12);
  EXPECT_EQ(Softplus(-800), 0.0);
  EXPECT_NEAR(Softplus(0), std::log(2.0), 1e-15);
  EXPECT_NEAR(Sigmoid(0), 0.5, 1e-15);
}

// Eleven regular tokens plus five specials.
ModelF64 SixteenTokenModel() {
  Vocabulary v = Vocabulary::FromTokens({"a", "b", "c", "d", "e", "f", "g", "h",
                                         "i", "j", " "});
  ModelConfig c = testing::TinyConfig(v.size());
  return ModelF64(c, v);
}

TEST(NllLossTest, UniformLogitsCostLogVocabPerToken) {
  ModelF64 m = SixteenTokenModel();
  ASSERT_EQ(m.config().vocab_size, 16);
  const size_t head = m.layout().lm_head;
  auto p = m.mutable_parameters();
  std::fill(p.begin() + head, p.begin() + head + m.config().d_model * 16, 0.0);
  // Two characters and the closing EOS are predicted.
  EXPECT_NEAR(NllLoss(m, Context({"abc"}), "de"), 3 * std::log(16.0), 1e-12);
  EXPECT_NEAR(3 * std::log(16.0), 8.317766, 1e-6);
  LossOptions mean;
  mean.nll_per_token_mean = true;
  EXPECT_NEAR(NllLoss(m, Context({"abc"}), "de", mean), std::log(16.0), 1e-12);
}

TEST(NllLossTest, MatchesDirectLogSoftmax) {
  const ModelF64 m = TinyModel<double>(21);
  const DialogueContext ctx = Context({"how are you", "fine, you?"});
  const std::string response = "great!";
  const EncodedDialogue e = EncodeDialogue(m, ctx, response);
  const ModelF64::Output out = m.Forward(e.ids);
  long double oracle = 0;
  for (int p = e.response_begin() - 1; p < e.eos_position(); ++p) {
    long double z = 0;
    for (int j = 0; j < out.logits.cols(); ++j) z += std::exp((long double)out.logits(p, j));
    oracle -= out.logits(p, e.ids[p + 1]) - std::log(z);
  }
  EXPECT_NEAR(NllLoss(m, ctx, response), static_cast<double>(oracle), 1e-5);
  EXPECT_NEAR(GenerationLogProb(m, ctx, response), -static_cast<double>(oracle), 1e-5);
  EXPECT_NEAR(GenerationLogProb(m, ctx, response, true),
              -static_cast<double>(oracle) / (response.size() + 1), 1e-5);
}

TEST(NllLossTest, EmptyResponseIsRejected) {
  const Model m = TinyModel();
  EXPECT_THROW(NllLoss(m, Context({"hi"}), ""), ValidationError);
}

TEST(PreferenceScoreTest, RepeatableAndMatchesForward) {
  const Model m = TinyModel();
  const DialogueContext ctx = Context({"hi there"});
  const float s = PreferenceScore(m, ctx, "hello");
  EXPECT_EQ(s, PreferenceScore(m, ctx, "hello"));
  EXPECT_EQ(s, m.Forward(EncodeDialogue(m, ctx, "hello").ids).preference_score);
}

TEST(JointLossTest, TotalIsSumOfParts) {
  const ModelF64 m = TinyModel<double>(9);
  TrainingQuadruple q{Context({"hi", "hello"}), "how are you", "fine", "no", "r", 2};
  const JointLossValue v = JointLoss(m, q);
  EXPECT_NEAR(v.total, v.nll + v.pe, 1e-12);
  EXPECT_NEAR(v.nll, NllLoss(m, q.context, q.human), 1e-12);
  EXPECT_NEAR(v.pe, PeLoss(PreferenceScore(m, q.context, q.human),
                           PreferenceScore(m, q.context, q.model),
                           PreferenceScore(m, q.context, q.random)),
              1e-12);

  std::vector<double> grad(m.parameter_count(), 0.0);
  const JointLossValue with_grad = JointLossAndGradient<double>(m, q, {}, grad);
  EXPECT_NEAR(with_grad.total, v.total, 1e-12);
}

TEST(JointLossTest, ZeroPreferenceHeadGivesLogTwo) {
  ModelF64 m = TinyModel<double>(13);
  auto p = m.mutable_parameters();
  std::fill_n(p.begin() + m.layout().preference_head, m.config().d_model, 0.0);
  for (const auto& [h, mm, r] : {std::tuple{"abc", "de", "f"},
                                 std::tuple{"long response here", "x", "why not"}}) {
    TrainingQuadruple q{Context({"hey"}), h, mm, r, "r", 1};
    EXPECT_NEAR(JointLoss(m, q).pe, std::log(2.0), 1e-12);
  }
}

}  // namespace
}  // namespace prefchat
