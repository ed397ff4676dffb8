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

#include "prefchat/evaluation.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "oracles.h"
#include "prefchat/errors.h"
#include "prefchat/losses.h"
#include "test_util.h"

namespace prefchat {
namespace {

using testing::RandomPermutation;
using testing::RankScanMetrics;

TEST(MapMrrP1Test, MatchesRankScanOnSingleRelevanceLists) {
  std::mt19937_64 rng(7);
  std::vector<RankedList> lists;
  for (int i = 0; i < 1000; ++i) {
    lists.push_back({RandomPermutation(rng, kRankingCandidates), {rng() % kRankingCandidates}});
  }
  const RankingMetrics got = MapMrrP1(lists), want = RankScanMetrics(lists);
  EXPECT_EQ(got.map, want.map);
  EXPECT_EQ(got.mrr, want.mrr);
  EXPECT_EQ(got.p_at_1, want.p_at_1);
  EXPECT_EQ(got.instances, 1000u);
}

TEST(MapMrrP1Test, MatchesRankScanWithSeveralRelevantItems) {
  std::mt19937_64 rng(8);
  std::vector<RankedList> lists;
  for (int i = 0; i < 300; ++i) {
    const size_t n = 2 + rng() % 10;
    std::vector<size_t> rel = RandomPermutation(rng, n);
    rel.resize(1 + rng() % n);
    lists.push_back({RandomPermutation(rng, n), rel});
  }
  const RankingMetrics got = MapMrrP1(lists), want = RankScanMetrics(lists);
  EXPECT_NEAR(got.map, want.map, 1e-12);
  EXPECT_NEAR(got.mrr, want.mrr, 1e-12);
  EXPECT_EQ(got.p_at_1, want.p_at_1);
}

TEST(MapMrrP1Test, HandCases) {
  std::vector<RankedList> top{{{3, 1, 2, 0}, {3}}, {{0, 1}, {0}}};
  const RankingMetrics m = MapMrrP1(top);
  EXPECT_EQ(m.map, 1.0);
  EXPECT_EQ(m.mrr, 1.0);
  EXPECT_EQ(m.p_at_1, 1.0);

  std::vector<RankedList> second{{{0, 5, 1, 2, 3, 4, 6, 7}, {5}}};
  const RankingMetrics s = MapMrrP1(second);
  EXPECT_EQ(s.map, 0.5);
  EXPECT_EQ(s.mrr, 0.5);
  EXPECT_EQ(s.p_at_1, 0.0);

  EXPECT_EQ(MapMrrP1(std::vector<RankedList>{}).instances, 0u);
}

TEST(MapMrrP1Test, InvalidListsAreRejected) {
  EXPECT_THROW(MapMrrP1(std::vector<RankedList>{{{0, 1, 2}, {}}}), ValidationError);
  EXPECT_THROW(MapMrrP1(std::vector<RankedList>{{{0, 0, 2}, {0}}}), ValidationError);
  EXPECT_THROW(MapMrrP1(std::vector<RankedList>{{{0, 1, 2}, {5}}}), ValidationError);
}

TEST(MapMrrP1Test, RandomRankingBaseline) {
  std::mt19937_64 rng(2024);
  std::vector<RankedList> lists;
  for (int i = 0; i < 10000; ++i) {
    lists.push_back({RandomPermutation(rng, kRankingCandidates), {0}});
  }
  double harmonic = 0;
  for (int k = 1; k <= 8; ++k) harmonic += 1.0 / k;
  ASSERT_NEAR(harmonic / 8, 0.3397, 1e-4);
  const RankingMetrics m = MapMrrP1(lists);
  EXPECT_NEAR(m.mrr, harmonic / 8, 0.01);
  EXPECT_NEAR(m.p_at_1, 0.125, 0.01);
  EXPECT_EQ(m.map, m.mrr);
}

TEST(RankByScoresTest, DescendingWithStableTies) {
  const std::vector<double> s{0.5, 2.0, 0.5, -1.0, 2.0};
  EXPECT_EQ(RankByScores(s), (std::vector<size_t>{1, 4, 0, 2, 3}));
  const std::vector<double> flat(6, 3.0);
  EXPECT_EQ(RankByScores(flat), (std::vector<size_t>{0, 1, 2, 3, 4, 5}));
  std::vector<double> shifted = s;
  for (double& x : shifted) x += 123.0;
  EXPECT_EQ(RankByScores(shifted), RankByScores(s));
}

TEST(RankingInstancesTest, BuiltFromRevisedAndRewrittenTurns) {
  const auto records = testing::TwoDialogueFixture();
  const auto instances = BuildRankingInstances(records, 5);
  ASSERT_EQ(instances.size(), 10u);
  std::set<size_t> positions;
  for (const RankingInstance& inst : instances) {
    EXPECT_NO_THROW(ValidateInstance(inst));
    const DialogueRecord& r = inst.record_id == "d1" ? records[0] : records[1];
    const AnnotatedTurn& t = r.turns[inst.turn_index];
    EXPECT_NE(t.action, Action::kSelect);
    EXPECT_EQ(inst.candidates[inst.relevant_index], t.final_text);
    std::vector<std::string> rest = inst.candidates;
    rest.erase(rest.begin() + inst.relevant_index);
    EXPECT_EQ(rest, t.shown_candidates);
    EXPECT_EQ(inst.context, r.ContextBefore(inst.turn_index));
    positions.insert(inst.relevant_index);
  }
  EXPECT_GT(positions.size(), 1u);
  EXPECT_EQ(BuildRankingInstances(records, 5)[3].relevant_index,
            instances[3].relevant_index);
}

TEST(RankingInstancesTest, ValidationCatchesMalformedInstances) {
  RankingInstance inst;
  inst.context = testing::Context({"x"});
  inst.candidates.assign(7, "a");
  EXPECT_THROW(ValidateInstance(inst), ValidationError);
  inst.candidates.assign(8, "a");
  inst.relevant_index = 8;
  EXPECT_THROW(ValidateInstance(inst), ValidationError);
}

TEST(ScorerTest, NamesRoundTrip) {
  for (Scorer s : {Scorer::kPreference, Scorer::kGenerationLogProb,
                   Scorer::kGenerationLogProbPerToken}) {
    EXPECT_EQ(ParseScorer(ScorerName(s)), s);
  }
  EXPECT_THROW(ParseScorer("bleu"), ValidationError);
}

TEST(ScorerTest, ScoresComeFromTheModel) {
  const Model m = testing::TinyModel(15);
  const auto inst = BuildRankingInstances(testing::TwoDialogueFixture(), 1).front();
  const auto pref = ScoreCandidates(m, inst, Scorer::kPreference);
  const auto gen = ScoreCandidates(m, inst, Scorer::kGenerationLogProb);
  ASSERT_EQ(pref.size(), kRankingCandidates);
  for (size_t i = 0; i < pref.size(); ++i) {
    EXPECT_FLOAT_EQ(pref[i], PreferenceScore(m, inst.context, inst.candidates[i]));
    EXPECT_FLOAT_EQ(gen[i], GenerationLogProb(m, inst.context, inst.candidates[i]));
  }
  EXPECT_EQ(RankBy(Scorer::kPreference, m, inst), RankByScores(pref));

  const auto instances = BuildRankingInstances(testing::TwoDialogueFixture(), 1);
  const RankingReport report = EvaluateRanking(m, instances, Scorer::kPreference);
  EXPECT_EQ(report.metrics.instances, 10u);
  EXPECT_GE(report.metrics.mrr, report.metrics.p_at_1);
  EXPECT_EQ(ToJson(report)["scorer"], "preference_score");
  const std::vector<RankingReport> reports{report};
  EXPECT_NE(FormatRankingTable(reports).find("preference_score"), std::string::npos);
}

TEST(StaticEvalTest, SamplesDistinctHeldOutContexts) {
  const Model m = testing::TinyModel(3);
  const auto records = testing::TwoDialogueFixture();
  DecodeConfig d;
  d.max_new_tokens = 8;
  d.n_candidates = 2;
  EXPECT_TRUE(StaticEval(m, records, 0, 1, d).empty());
  const auto rows = StaticEval(m, records, 5, 1, d);
  ASSERT_EQ(rows.size(), 5u);
  std::set<std::pair<std::string, size_t>> seen;
  for (size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].sample_id, i);
    EXPECT_GE(rows[i].turn_index, 1u);
    seen.insert({rows[i].record_id, rows[i].turn_index});
  }
  EXPECT_EQ(seen.size(), 5u);
  const auto again = StaticEval(m, records, 5, 1, d);
  for (size_t i = 0; i < 5; ++i) EXPECT_EQ(again[i].model_response, rows[i].model_response);
  EXPECT_THROW(StaticEval(m, records, 15, 1, d), ValidationError);

  std::stringstream out;
  WriteStaticEval(out, rows);
  std::string line;
  int lines = 0;
  while (std::getline(out, line)) {
    EXPECT_TRUE(nlohmann::json::parse(line).contains("model_response"));
    ++lines;
  }
  EXPECT_EQ(lines, 5);
}

}  // namespace
}  // namespace prefchat
