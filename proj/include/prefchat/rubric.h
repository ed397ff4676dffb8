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

#ifndef PREFCHAT_RUBRIC_H_
#define PREFCHAT_RUBRIC_H_

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace prefchat {

// Metric names understood by the rating schema. Engagingness is judged per
// dialogue, the others per utterance.
inline constexpr const char* kRubricMetrics[] = {"coherence", "informativeness",
                                                 "safety", "engagingness"};
inline constexpr int kRubricMaxScore = 2;
inline constexpr size_t kRatersPerSample = 3;

struct RubricRating {
  std::string sample_id;
  std::string rater_id;
  // metric name -> score in [0, kRubricMaxScore]
  std::map<std::string, int> scores;
};

RubricRating RatingFromJson(const nlohmann::json& j);
std::vector<RubricRating> ReadRatings(std::istream& in);
std::vector<RubricRating> LoadRatings(const std::filesystem::path& path);

// Majority value of three scores; when all three differ the median.
int VoteScore(int a, int b, int c);

struct RubricReport {
  // sample id -> metric -> final score
  std::map<std::string, std::map<std::string, int>> final_scores;
  // metric -> mean of final scores over the samples rated on it
  std::map<std::string, double> means;
  // metric -> Fleiss' kappa over the samples rated on it
  std::map<std::string, double> kappa;
};

// Every (sample, metric) pair needs ratings from exactly three distinct
// raters; violations throw ValidationError naming the sample.
RubricReport AggregateRubric(std::span<const RubricRating> ratings);

// rows[i][j] = number of raters who put sample i in category j. Every row
// must sum to n_raters. When all ratings share a single category the
// chance agreement is 1 and the result is defined as 1.
double FleissKappa(const std::vector<std::vector<int>>& rows, int n_raters);

nlohmann::json ToJson(const RubricReport& report);
std::string FormatRubricTable(const RubricReport& report);

}  // namespace prefchat

#endif  // PREFCHAT_RUBRIC_H_
