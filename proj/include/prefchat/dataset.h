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

#ifndef PREFCHAT_DATASET_H_
#define PREFCHAT_DATASET_H_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "prefchat/dialogue.h"

namespace prefchat {

inline constexpr int kDatasetSchemaVersion = 1;
inline constexpr size_t kCandidatesPerTurn = 7;
inline constexpr int kMinAnnotatedRounds = 7;

// select/revise/rewrite come from the collection protocol. `opening` is the
// first utterance; `bot` is a model reply (chat and self-chat); `human` is a
// free-typed user message in chat mode.
enum class Action { kSelect, kRevise, kRewrite, kOpening, kBot, kHuman };

enum class RecordStatus { kInProgress, kComplete, kUnderReview, kAccepted, kRejected };

enum class Split { kTrain, kValid, kTest, kUnassigned };

std::string_view ActionName(Action a);
Action ParseAction(std::string_view s);
bool IsAnnotated(Action a);
std::string_view StatusName(RecordStatus s);
RecordStatus ParseStatus(std::string_view s);
std::string_view SplitName(Split s);
Split ParseSplit(std::string_view s);

struct AnnotatedTurn {
  Role speaker_role = Role::kA;
  std::string final_text;
  Action action = Action::kOpening;
  std::vector<std::string> shown_candidates;
  std::optional<size_t> chosen_index;
  // Preference scores of shown_candidates; only bot turns carry them.
  std::vector<double> candidate_scores;

  bool operator==(const AnnotatedTurn&) const = default;
};

struct DialogueRecord {
  std::string id;
  std::vector<AnnotatedTurn> turns;
  RecordStatus status = RecordStatus::kInProgress;
  Split split = Split::kUnassigned;
  // ISO-8601 UTC timestamp; empty when unknown.
  std::string created_at;

  size_t AnnotatedTurnCount() const;
  // Context made of turns [0, turn_index).
  DialogueContext ContextBefore(size_t turn_index) const;

  bool operator==(const DialogueRecord&) const = default;
};

struct ValidationOptions {
  // Required length of shown_candidates on select/revise/rewrite turns.
  size_t candidates_per_turn = kCandidatesPerTurn;
};

// Throws ValidationError naming the record id and the violated rule.
void ValidateTurn(const AnnotatedTurn& turn, size_t index,
                  const ValidationOptions& options = {});
void ValidateRecord(const DialogueRecord& record,
                    const ValidationOptions& options = {});

nlohmann::json RecordToJson(const DialogueRecord& record);
DialogueRecord RecordFromJson(const nlohmann::json& j);

// JSON-lines, one record per line.
void WriteDataset(std::ostream& out, std::span<const DialogueRecord> records);
std::vector<DialogueRecord> ReadDataset(std::istream& in,
                                        const ValidationOptions& options = {});
void SaveDataset(const std::filesystem::path& path,
                 std::span<const DialogueRecord> records);
std::vector<DialogueRecord> LoadDataset(const std::filesystem::path& path,
                                        const ValidationOptions& options = {});

struct SplitFractions {
  double train = 1.0;
  double valid = 0.0;
  double test = 0.0;
};

// Assigns a split to every record (never per turn). Sizes are the
// largest-remainder rounding of fractions * n; membership is a seeded shuffle.
std::vector<DialogueRecord> SplitDataset(std::vector<DialogueRecord> records,
                                         const SplitFractions& fractions,
                                         uint64_t seed);

std::vector<DialogueRecord> FilterBySplit(std::span<const DialogueRecord> records,
                                          Split split);

}  // namespace prefchat

#endif  // PREFCHAT_DATASET_H_
