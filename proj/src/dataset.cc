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

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>

#include "prefchat/errors.h"
#include "prefchat/rng.h"

namespace prefchat {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<Action, std::string_view>, 6> kActions = {{
    {Action::kSelect, "select"},
    {Action::kRevise, "revise"},
    {Action::kRewrite, "rewrite"},
    {Action::kOpening, "opening"},
    {Action::kBot, "bot"},
    {Action::kHuman, "human"},
}};

constexpr std::array<std::pair<RecordStatus, std::string_view>, 5> kStatuses = {{
    {RecordStatus::kInProgress, "in_progress"},
    {RecordStatus::kComplete, "complete"},
    {RecordStatus::kUnderReview, "under_review"},
    {RecordStatus::kAccepted, "accepted"},
    {RecordStatus::kRejected, "rejected"},
}};

constexpr std::array<std::pair<Split, std::string_view>, 4> kSplits = {{
    {Split::kTrain, "train"},
    {Split::kValid, "valid"},
    {Split::kTest, "test"},
    {Split::kUnassigned, "unassigned"},
}};

template <typename E, size_t N>
std::string_view NameOf(const std::array<std::pair<E, std::string_view>, N>& table,
                        E value) {
  for (const auto& [e, name] : table) {
    if (e == value) return name;
  }
  return "?";
}

template <typename E, size_t N>
E Parse(const std::array<std::pair<E, std::string_view>, N>& table,
        std::string_view s, const char* what) {
  for (const auto& [e, name] : table) {
    if (name == s) return e;
  }
  throw ValidationError(std::string("unknown ") + what + " '" +
                        std::string(s) + "'");
}

[[noreturn]] void TurnError(size_t index, const std::string& what) {
  throw ValidationError("turn " + std::to_string(index) + ": " + what);
}

}  // namespace

std::string_view ActionName(Action a) { return NameOf(kActions, a); }
Action ParseAction(std::string_view s) { return Parse(kActions, s, "action"); }
bool IsAnnotated(Action a) {
  return a == Action::kSelect || a == Action::kRevise || a == Action::kRewrite;
}
std::string_view StatusName(RecordStatus s) { return NameOf(kStatuses, s); }
RecordStatus ParseStatus(std::string_view s) {
  return Parse(kStatuses, s, "status");
}
std::string_view SplitName(Split s) { return NameOf(kSplits, s); }
Split ParseSplit(std::string_view s) { return Parse(kSplits, s, "split"); }

size_t DialogueRecord::AnnotatedTurnCount() const {
  return std::count_if(turns.begin(), turns.end(),
                       [](const AnnotatedTurn& t) { return IsAnnotated(t.action); });
}

DialogueContext DialogueRecord::ContextBefore(size_t turn_index) const {
  DialogueContext ctx;
  for (size_t i = 0; i < turn_index && i < turns.size(); ++i) {
    ctx.utterances.push_back({turns[i].speaker_role, turns[i].final_text});
  }
  return ctx;
}

void ValidateTurn(const AnnotatedTurn& t, size_t index,
                  const ValidationOptions& options) {
  const bool has_index = t.chosen_index.has_value();
  if (has_index && *t.chosen_index >= t.shown_candidates.size()) {
    TurnError(index, "chosen_index " + std::to_string(*t.chosen_index) +
                         " out of range for " +
                         std::to_string(t.shown_candidates.size()) +
                         " shown candidates");
  }
  if (!t.candidate_scores.empty() && t.action != Action::kBot) {
    TurnError(index, "candidate_scores are only allowed on bot turns");
  }
  switch (t.action) {
    case Action::kSelect:
    case Action::kRevise:
    case Action::kRewrite:
      if (t.shown_candidates.size() != options.candidates_per_turn) {
        TurnError(index, std::string(ActionName(t.action)) + " turn must show " +
                             std::to_string(options.candidates_per_turn) +
                             " candidates, found " +
                             std::to_string(t.shown_candidates.size()));
      }
      if (t.final_text.empty()) TurnError(index, "final_text is empty");
      break;
    case Action::kOpening:
    case Action::kHuman:
      if (!t.shown_candidates.empty() || has_index) {
        TurnError(index, std::string(ActionName(t.action)) +
                             " turn must not carry candidates");
      }
      break;
    case Action::kBot:
      if (!t.shown_candidates.empty() && !has_index) {
        TurnError(index, "bot turn with candidates needs chosen_index");
      }
      if (!t.candidate_scores.empty() &&
          t.candidate_scores.size() != t.shown_candidates.size()) {
        TurnError(index, "candidate_scores length differs from candidates");
      }
      if (has_index && t.final_text != t.shown_candidates[*t.chosen_index]) {
        TurnError(index, "bot final_text differs from its chosen candidate");
      }
      break;
  }
  if (t.action == Action::kSelect) {
    if (!has_index) TurnError(index, "select requires chosen_index");
    if (t.final_text != t.shown_candidates[*t.chosen_index]) {
      TurnError(index,
                "select final_text must equal shown_candidates[chosen_index] "
                "verbatim");
    }
  } else if (t.action == Action::kRevise) {
    if (!has_index) TurnError(index, "revise requires chosen_index");
    if (t.final_text == t.shown_candidates[*t.chosen_index]) {
      TurnError(index,
                "revise final_text must differ from "
                "shown_candidates[chosen_index]");
    }
  } else if (t.action == Action::kRewrite && has_index) {
    TurnError(index, "rewrite must not set chosen_index");
  }
}

void ValidateRecord(const DialogueRecord& r, const ValidationOptions& options) {
  try {
    if (r.id.empty()) throw ValidationError("record id is empty");
    for (size_t i = 0; i < r.turns.size(); ++i) {
      const auto& t = r.turns[i];
      if (t.action == Action::kOpening && i != 0) {
        TurnError(i, "opening is only allowed as the first turn");
      }
      if (i > 0 && t.speaker_role == r.turns[i - 1].speaker_role) {
        TurnError(i, "speakers do not alternate");
      }
      ValidateTurn(t, i, options);
    }
    const size_t annotated = r.AnnotatedTurnCount();
    const bool finished = r.status == RecordStatus::kComplete ||
                          r.status == RecordStatus::kUnderReview ||
                          r.status == RecordStatus::kAccepted;
    if (finished && annotated > 0 &&
        annotated < static_cast<size_t>(kMinAnnotatedRounds)) {
      throw ValidationError(
          "finished collection dialogue has " + std::to_string(annotated) +
          " annotated rounds, at least " + std::to_string(kMinAnnotatedRounds) +
          " required");
    }
  } catch (const ValidationError& e) {
    throw ValidationError("record " + r.id + ": " + e.what());
  }
}

json RecordToJson(const DialogueRecord& r) {
  json turns = json::array();
  for (const auto& t : r.turns) {
    json jt = {
        {"speaker_role", RoleName(t.speaker_role)},
        {"final_text", t.final_text},
        {"action", ActionName(t.action)},
        {"shown_candidates", t.shown_candidates},
        {"chosen_index", t.chosen_index ? json(*t.chosen_index) : json(nullptr)},
    };
    if (!t.candidate_scores.empty()) jt["candidate_scores"] = t.candidate_scores;
    turns.push_back(std::move(jt));
  }
  json j = {
      {"schema_version", kDatasetSchemaVersion},
      {"id", r.id},
      {"status", StatusName(r.status)},
      {"split", SplitName(r.split)},
      {"turns", std::move(turns)},
  };
  if (!r.created_at.empty()) j["created_at"] = r.created_at;
  return j;
}

DialogueRecord RecordFromJson(const json& j) {
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kDatasetSchemaVersion) {
      throw FormatError("unsupported schema_version " + std::to_string(version));
    }
    DialogueRecord r;
    r.id = j.at("id").get<std::string>();
    r.status = ParseStatus(j.at("status").get<std::string>());
    r.split = ParseSplit(j.at("split").get<std::string>());
    r.created_at = j.value("created_at", std::string());
    for (const auto& jt : j.at("turns")) {
      AnnotatedTurn t;
      t.speaker_role = ParseRole(jt.at("speaker_role").get<std::string>());
      t.final_text = jt.at("final_text").get<std::string>();
      t.action = ParseAction(jt.at("action").get<std::string>());
      t.shown_candidates =
          jt.at("shown_candidates").get<std::vector<std::string>>();
      const auto& ci = jt.at("chosen_index");
      if (!ci.is_null()) t.chosen_index = ci.get<size_t>();
      if (jt.contains("candidate_scores")) {
        t.candidate_scores = jt.at("candidate_scores").get<std::vector<double>>();
      }
      r.turns.push_back(std::move(t));
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(e.what());
  }
}

void WriteDataset(std::ostream& out, std::span<const DialogueRecord> records) {
  for (const auto& r : records) out << RecordToJson(r).dump() << '\n';
}

std::vector<DialogueRecord> ReadDataset(std::istream& in,
                                        const ValidationOptions& options) {
  std::vector<DialogueRecord> records;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    DialogueRecord r;
    try {
      r = RecordFromJson(json::parse(line));
    } catch (const json::exception& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      ValidateRecord(r, options);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
    records.push_back(std::move(r));
  }
  return records;
}

void SaveDataset(const std::filesystem::path& path,
                 std::span<const DialogueRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  WriteDataset(out, records);
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<DialogueRecord> LoadDataset(const std::filesystem::path& path,
                                        const ValidationOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open dataset " + path.string());
  return ReadDataset(in, options);
}

std::vector<DialogueRecord> SplitDataset(std::vector<DialogueRecord> records,
                                         const SplitFractions& f,
                                         uint64_t seed) {
  const std::array<double, 3> fr = {f.train, f.valid, f.test};
  for (double x : fr) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw ValidationError("split fractions must be finite and nonnegative");
    }
  }
  if (std::abs(fr[0] + fr[1] + fr[2] - 1.0) > 1e-9) {
    throw ValidationError("split fractions must sum to 1");
  }
  const size_t n = records.size();
  std::array<size_t, 3> counts{};
  std::array<double, 3> remainder{};
  size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = fr[i] * static_cast<double>(n);
    counts[i] = static_cast<size_t>(std::floor(exact));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainder[a] > remainder[b]; });
  for (size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 3]];

  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = MakeRng({seed, 0x5B11});
  std::shuffle(perm.begin(), perm.end(), rng);
  constexpr std::array<Split, 3> kOrder = {Split::kTrain, Split::kValid,
                                           Split::kTest};
  size_t pos = 0;
  for (int s = 0; s < 3; ++s) {
    for (size_t c = 0; c < counts[s]; ++c) records[perm[pos++]].split = kOrder[s];
  }
  return records;
}

std::vector<DialogueRecord> FilterBySplit(std::span<const DialogueRecord> records,
                                          Split split) {
  std::vector<DialogueRecord> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

}  // namespace prefchat
