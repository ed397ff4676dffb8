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

#include "prefchat/rubric.h"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "prefchat/errors.h"

namespace prefchat {

namespace {

bool KnownMetric(const std::string& name) {
  return std::any_of(std::begin(kRubricMetrics), std::end(kRubricMetrics),
                     [&](const char* m) { return name == m; });
}

}  // namespace

RubricRating RatingFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("rating must be a JSON object");
  RubricRating r;
  for (const auto& [key, value] : j.items()) {
    if (key == "sample_id") {
      r.sample_id = value.get<std::string>();
    } else if (key == "rater_id") {
      r.rater_id = value.get<std::string>();
    } else if (KnownMetric(key)) {
      if (value.is_null()) continue;
      if (!value.is_number_integer()) {
        throw ValidationError("rating field '" + key + "' must be an integer");
      }
      const int s = value.get<int>();
      if (s < 0 || s > kRubricMaxScore) {
        throw ValidationError("rating field '" + key + "' = " +
                              std::to_string(s) + " outside [0, 2]");
      }
      r.scores[key] = s;
    } else {
      throw ValidationError("unknown rating field '" + key + "'");
    }
  }
  if (r.sample_id.empty()) throw ValidationError("rating without sample_id");
  if (r.rater_id.empty()) throw ValidationError("rating without rater_id");
  return r;
}

std::vector<RubricRating> ReadRatings(std::istream& in) {
  std::vector<RubricRating> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(RatingFromJson(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<RubricRating> LoadRatings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return ReadRatings(in);
}

int VoteScore(int a, int b, int c) {
  if (a == b || a == c) return a;
  if (b == c) return b;
  int v[3] = {a, b, c};
  std::sort(v, v + 3);
  return v[1];
}

RubricReport AggregateRubric(std::span<const RubricRating> ratings) {
  // sample -> metric -> (rater, score)
  std::map<std::string, std::map<std::string, std::vector<std::pair<std::string, int>>>>
      grouped;
  for (const auto& r : ratings) {
    for (const auto& [metric, score] : r.scores) {
      grouped[r.sample_id][metric].emplace_back(r.rater_id, score);
    }
  }
  RubricReport report;
  std::map<std::string, std::vector<std::vector<int>>> kappa_rows;
  std::map<std::string, size_t> counts;
  for (const auto& [sample, metrics] : grouped) {
    for (const auto& [metric, votes] : metrics) {
      std::set<std::string> raters;
      for (const auto& v : votes) raters.insert(v.first);
      if (votes.size() != kRatersPerSample || raters.size() != kRatersPerSample) {
        throw ValidationError("sample " + sample + ": metric " + metric +
                              " has " + std::to_string(votes.size()) +
                              " ratings from " + std::to_string(raters.size()) +
                              " distinct raters, expected 3");
      }
      const int final_score =
          VoteScore(votes[0].second, votes[1].second, votes[2].second);
      report.final_scores[sample][metric] = final_score;
      report.means[metric] += final_score;
      ++counts[metric];
      std::vector<int> row(kRubricMaxScore + 1, 0);
      for (const auto& v : votes) ++row[v.second];
      kappa_rows[metric].push_back(std::move(row));
    }
  }
  for (auto& [metric, sum] : report.means) {
    sum /= static_cast<double>(counts[metric]);
  }
  for (const auto& [metric, rows] : kappa_rows) {
    report.kappa[metric] = FleissKappa(rows, static_cast<int>(kRatersPerSample));
  }
  return report;
}

double FleissKappa(const std::vector<std::vector<int>>& rows, int n_raters) {
  if (rows.empty()) throw ValidationError("Fleiss' kappa needs at least one sample");
  if (n_raters < 2) throw ValidationError("Fleiss' kappa needs at least two raters");
  const size_t k = rows.front().size();
  if (k == 0) throw ValidationError("Fleiss' kappa needs at least one category");
  std::vector<double> column(k, 0.0);
  double p_bar = 0;
  const double n = n_raters;
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != k) {
      throw ValidationError("row " + std::to_string(i) + " has " +
                            std::to_string(rows[i].size()) +
                            " categories, expected " + std::to_string(k));
    }
    int sum = 0;
    double sq = 0;
    for (size_t j = 0; j < k; ++j) {
      if (rows[i][j] < 0) {
        throw ValidationError("row " + std::to_string(i) + " has a negative count");
      }
      sum += rows[i][j];
      sq += static_cast<double>(rows[i][j]) * rows[i][j];
      column[j] += rows[i][j];
    }
    if (sum != n_raters) {
      throw ValidationError("row " + std::to_string(i) + " sums to " +
                            std::to_string(sum) + ", expected " +
                            std::to_string(n_raters));
    }
    p_bar += (sq - n) / (n * (n - 1));
  }
  const double total = n * static_cast<double>(rows.size());
  p_bar /= static_cast<double>(rows.size());
  double p_e = 0;
  for (double c : column) p_e += (c / total) * (c / total);
  if (p_e >= 1.0) {
    if (p_bar >= 1.0) return 1.0;
    throw NumericError("Fleiss' kappa undefined: chance agreement is 1");
  }
  return (p_bar - p_e) / (1.0 - p_e);
}

nlohmann::json ToJson(const RubricReport& r) {
  return {{"final_scores", r.final_scores}, {"means", r.means}, {"fleiss_kappa", r.kappa}};
}

std::string FormatRubricTable(const RubricReport& r) {
  std::string out = fmt::format("{:<18}{:>8}{:>8}{:>8}\n", "metric", "samples",
                                "mean", "kappa");
  for (const char* metric : kRubricMetrics) {
    auto it = r.means.find(metric);
    if (it == r.means.end()) continue;
    size_t samples = 0;
    for (const auto& [id, scores] : r.final_scores) samples += scores.count(metric);
    out += fmt::format("{:<18}{:>8}{:>8.3f}{:>8.3f}\n", metric, samples,
                       it->second, r.kappa.at(metric));
  }
  return out;
}

}  // namespace prefchat
