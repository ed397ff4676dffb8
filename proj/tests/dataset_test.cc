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

#include "prefchat/dataset.h"

#include <gtest/gtest.h>

#include <sstream>

#include "prefchat/errors.h"
#include "test_util.h"

namespace prefchat {
namespace {

using testing::MakeTurn;
using testing::TwoDialogueFixture;

TEST(DatasetTest, JsonLinesRoundTrip) {
  std::vector<DialogueRecord> records = TwoDialogueFixture();
  records[0].created_at = "2026-01-02T03:04:05Z";
  records[1].split = Split::kTest;
  AnnotatedTurn bot{Role::kA, "x", Action::kBot, {"x", "y"}, 0, {0.5, -1.0}};
  records[1].turns.push_back(bot);
  std::stringstream buf;
  WriteDataset(buf, records);
  EXPECT_EQ(ReadDataset(buf), records);
}

TEST(DatasetTest, EmptyInputIsAnEmptyDataset) {
  std::stringstream empty;
  EXPECT_TRUE(ReadDataset(empty).empty());
  std::stringstream blank("\n\n");
  EXPECT_TRUE(ReadDataset(blank).empty());
}

TEST(DatasetTest, SelectWithMismatchedTextNamesTheRecord) {
  DialogueRecord r = TwoDialogueFixture()[0];
  r.id = "bad-select";
  r.turns[1].final_text = "something else";
  std::stringstream buf;
  WriteDataset(buf, std::vector{r});
  try {
    ReadDataset(buf);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("bad-select"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos) << e.what();
  }
}

TEST(DatasetTest, MalformedLineReportsItsNumber) {
  std::stringstream buf;
  WriteDataset(buf, TwoDialogueFixture());
  buf << "{not json\n";
  try {
    ReadDataset(buf);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(DatasetTest, TurnRulesAreEnforced) {
  const AnnotatedTurn ok = MakeTurn(Role::kB, Action::kRevise, "edited", 1);
  EXPECT_NO_THROW(ValidateTurn(ok, 1));

  AnnotatedTurn t = ok;
  t.final_text = t.shown_candidates[1];
  EXPECT_THROW(ValidateTurn(t, 1), ValidationError);  // revise must change text

  t = MakeTurn(Role::kB, Action::kRewrite, "typed");
  t.chosen_index = 2;
  EXPECT_THROW(ValidateTurn(t, 1), ValidationError);

  t = ok;
  t.shown_candidates.pop_back();
  EXPECT_THROW(ValidateTurn(t, 1), ValidationError);

  t = ok;
  t.chosen_index = 9;
  EXPECT_THROW(ValidateTurn(t, 1), ValidationError);

  t = ok;
  t.candidate_scores = std::vector<double>(7, 0.0);
  EXPECT_THROW(ValidateTurn(t, 1), ValidationError);
}

TEST(DatasetTest, RecordRulesAreEnforced) {
  DialogueRecord r = TwoDialogueFixture()[0];
  EXPECT_NO_THROW(ValidateRecord(r));

  DialogueRecord same_speaker = r;
  same_speaker.turns[2].speaker_role = Role::kB;
  EXPECT_THROW(ValidateRecord(same_speaker), ValidationError);

  DialogueRecord short_accepted = r;
  short_accepted.turns.resize(7);
  EXPECT_THROW(ValidateRecord(short_accepted), ValidationError);
  short_accepted.status = RecordStatus::kInProgress;
  EXPECT_NO_THROW(ValidateRecord(short_accepted));
}

TEST(DatasetTest, EnumNamesRoundTrip) {
  for (Action a : {Action::kSelect, Action::kRevise, Action::kRewrite,
                   Action::kOpening, Action::kBot, Action::kHuman}) {
    EXPECT_EQ(ParseAction(ActionName(a)), a);
  }
  for (RecordStatus s : {RecordStatus::kInProgress, RecordStatus::kComplete,
                         RecordStatus::kUnderReview, RecordStatus::kAccepted,
                         RecordStatus::kRejected}) {
    EXPECT_EQ(ParseStatus(StatusName(s)), s);
  }
  EXPECT_EQ(StatusName(RecordStatus::kUnderReview), "under_review");
  EXPECT_THROW(ParseSplit("dev"), ValidationError);
}

std::vector<DialogueRecord> ManyRecords(size_t n) {
  std::vector<DialogueRecord> out;
  for (size_t i = 0; i < n; ++i) {
    DialogueRecord r;
    r.id = "r" + std::to_string(i);
    r.turns.push_back({Role::kA, "hi", Action::kOpening, {}, {}, {}});
    out.push_back(std::move(r));
  }
  return out;
}

TEST(SplitDatasetTest, AllTrainFractions) {
  for (const auto& r : SplitDataset(ManyRecords(10), {1, 0, 0}, 3)) {
    EXPECT_EQ(r.split, Split::kTrain);
  }
}

TEST(SplitDatasetTest, SameSeedSameAssignment) {
  const auto a = SplitDataset(ManyRecords(50), {0.6, 0.2, 0.2}, 9);
  const auto b = SplitDataset(ManyRecords(50), {0.6, 0.2, 0.2}, 9);
  EXPECT_EQ(a, b);
  const auto c = SplitDataset(ManyRecords(50), {0.6, 0.2, 0.2}, 10);
  EXPECT_NE(a, c);
}

TEST(SplitDatasetTest, LargeCorpusSizes) {
  const size_t n = 6838;
  const auto s = SplitDataset(ManyRecords(n), {5838.0 / n, 500.0 / n, 500.0 / n}, 1);
  EXPECT_EQ(FilterBySplit(s, Split::kTrain).size(), 5838u);
  EXPECT_EQ(FilterBySplit(s, Split::kValid).size(), 500u);
  EXPECT_EQ(FilterBySplit(s, Split::kTest).size(), 500u);
}

TEST(SplitDatasetTest, SizesUseLargestRemainder) {
  const auto s = SplitDataset(ManyRecords(10), {0.34, 0.33, 0.33}, 1);
  EXPECT_EQ(FilterBySplit(s, Split::kTrain).size(), 4u);
  EXPECT_EQ(FilterBySplit(s, Split::kValid).size(), 3u);
  EXPECT_EQ(FilterBySplit(s, Split::kTest).size(), 3u);
}

TEST(SplitDatasetTest, FractionsMustSumToOne) {
  EXPECT_THROW(SplitDataset(ManyRecords(3), {0.5, 0.2, 0.2}, 1), ValidationError);
  EXPECT_THROW(SplitDataset(ManyRecords(3), {1.2, -0.2, 0}, 1), ValidationError);
}

TEST(DatasetFileTest, SaveAndLoad) {
  testing::TempDir dir;
  SaveDataset(dir / "d.jsonl", TwoDialogueFixture());
  EXPECT_EQ(LoadDataset(dir / "d.jsonl"), TwoDialogueFixture());
  EXPECT_THROW(LoadDataset(dir / "missing.jsonl"), ValidationError);
}

}  // namespace
}  // namespace prefchat
