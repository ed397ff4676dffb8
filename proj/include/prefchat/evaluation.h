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

#ifndef PREFCHAT_EVALUATION_H_
#define PREFCHAT_EVALUATION_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "prefchat/dataset.h"
#include "prefchat/dialogue.h"
#include "prefchat/generation.h"
#include "prefchat/model.h"

namespace prefchat {

inline constexpr size_t kRankingCandidates = kCandidatesPerTurn + 1;

// One human response mixed into the candidates that were shown for its turn.
struct RankingInstance {
  DialogueContext context;
  std::vector<std::string> candidates;
  size_t relevant_index = 0;
  std::string record_id;
  size_t turn_index = 0;
};

// Throws ValidationError unless there are exactly kRankingCandidates
// candidates and relevant_index points at one of them.
void ValidateInstance(const RankingInstance& instance);

// One instance per revise or rewrite turn whose final text differs from every
// shown candidate. The human response lands at a position drawn from
// (seed, record id, turn index).
std::vector<RankingInstance> BuildRankingInstances(
    std::span<const DialogueRecord> records, uint64_t seed);

enum class Scorer {
  kPreference,
  kGenerationLogProb,
  // Log-probability divided by the response token count (EOS included).
  kGenerationLogProbPerToken,
};

std::string_view ScorerName(Scorer s);
Scorer ParseScorer(std::string_view name);

template <typename T>
std::vector<double> ScoreCandidates(const DialogueModel<T>& model,
                                    const RankingInstance& instance,
                                    Scorer scorer);

// Indices sorted by descending score; equal scores keep index order.
std::vector<size_t> RankByScores(std::span<const double> scores);

template <typename T>
std::vector<size_t> RankBy(Scorer scorer, const DialogueModel<T>& model,
                           const RankingInstance& instance);

struct RankedList {
  // A permutation of candidate indices, best first.
  std::vector<size_t> order;
  std::vector<size_t> relevant;
};

struct RankingMetrics {
  double map = 0;
  double mrr = 0;
  double p_at_1 = 0;
  size_t instances = 0;
};

// Average precision, reciprocal rank of the first relevant item and
// precision at 1, each averaged over lists. Throws ValidationError on a list
// without relevant items or whose order is not a permutation.
RankingMetrics MapMrrP1(std::span<const RankedList> lists);

struct RankingReport {
  Scorer scorer = Scorer::kPreference;
  RankingMetrics metrics;
};

template <typename T>
RankingReport EvaluateRanking(const DialogueModel<T>& model,
                              std::span<const RankingInstance> instances,
                              Scorer scorer);

nlohmann::json ToJson(const RankingReport& report);
std::string FormatRankingTable(std::span<const RankingReport> reports);

struct StaticEvalRow {
  size_t sample_id = 0;
  std::string record_id;
  size_t turn_index = 0;
  DialogueContext context;
  std::string model_response;
  std::string reference;
};

// Draws n distinct non-opening turns of the records without replacement and
// answers each context with Respond. n larger than the number of available
// turns is a ValidationError.
template <typename T>
std::vector<StaticEvalRow> StaticEval(const DialogueModel<T>& model,
                                      std::span<const DialogueRecord> records,
                                      size_t n, uint64_t seed,
                                      const DecodeConfig& decode);

nlohmann::json ToJson(const StaticEvalRow& row);
void WriteStaticEval(std::ostream& out, std::span<const StaticEvalRow> rows);

}  // namespace prefchat

#endif  // PREFCHAT_EVALUATION_H_
