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

#include <gtest/gtest.h>

#include "test_util.h"

namespace prefchat {
namespace {

TEST(CorpusStatsTest, TwoDialogueFixtureHandCounts) {
  const CorpusStats s = ComputeStats(testing::TwoDialogueFixture());
  EXPECT_EQ(s.n_dialogues, 2u);
  EXPECT_EQ(s.n_utterances, 16u);
  EXPECT_EQ(s.n_annotated_turns, 14u);
  EXPECT_DOUBLE_EQ(s.avg_utterance_length, 54.0 / 16.0);
  EXPECT_DOUBLE_EQ(s.select, 4.0 / 14.0);
  EXPECT_DOUBLE_EQ(s.revise, 5.0 / 14.0);
  EXPECT_DOUBLE_EQ(s.rewrite, 5.0 / 14.0);
  EXPECT_NEAR(s.select + s.revise + s.rewrite, 1.0, 1e-15);
}

TEST(CorpusStatsTest, EmptyCorpusIsAllZeros) {
  const CorpusStats s = ComputeStats(std::vector<DialogueRecord>{});
  EXPECT_EQ(s.n_dialogues, 0u);
  EXPECT_EQ(s.n_utterances, 0u);
  EXPECT_EQ(s.avg_utterance_length, 0.0);
  EXPECT_EQ(s.select + s.revise + s.rewrite, 0.0);
}

TEST(CorpusStatsTest, RejectedRecordsAreOptIn) {
  auto records = testing::TwoDialogueFixture();
  records[1].status = RecordStatus::kRejected;
  EXPECT_EQ(ComputeStats(records).n_dialogues, 1u);
  StatsOptions all;
  all.include_rejected = true;
  EXPECT_EQ(ComputeStats(records, all).n_utterances, 16u);
}

TEST(CorpusStatsTest, JsonAndTable) {
  const CorpusStats s = ComputeStats(testing::TwoDialogueFixture());
  const nlohmann::json j = ToJson(s);
  EXPECT_EQ(j["n_dialogues"], 2);
  EXPECT_DOUBLE_EQ(j["action_proportions"]["select"].get<double>(), 4.0 / 14.0);
  const std::string table = FormatStatsTable(s);
  EXPECT_NE(table.find("3.38"), std::string::npos) << table;
}

}  // namespace
}  // namespace prefchat
