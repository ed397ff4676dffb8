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

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "prefchat/errors.h"
#include "prefchat/losses.h"
#include "prefchat/rng.h"
#include "prefchat/vocabulary.h"

namespace prefchat {

void ValidateInstance(const RankingInstance& instance) {
  if (instance.candidates.size() != kRankingCandidates) {
    throw ValidationError("ranking instance needs " +
                          std::to_string(kRankingCandidates) +
                          " candidates, found " +
                          std::to_string(instance.candidates.size()));
  }
  if (instance.relevant_index >= instance.candidates.size()) {
    throw ValidationError("ranking instance has no relevant candidate");
  }
}

std::vector<RankingInstance> BuildRankingInstances(
    std::span<const DialogueRecord> records, uint64_t seed) {
  std::vector<RankingInstance> out;
  for (const auto& r : records) {
    for (size_t i = 0; i < r.turns.size(); ++i) {
      const AnnotatedTurn& t = r.turns[i];
      if (t.action != Action::kRevise && t.action != Action::kRewrite) continue;
      if (t.shown_candidates.size() != kCandidatesPerTurn) continue;
      if (std::find(t.shown_candidates.begin(), t.shown_candidates.end(),
                    t.final_text) != t.shown_candidates.end()) {
        continue;
      }
      Rng rng = MakeRng({seed, HashString(r.id), static_cast<uint64_t>(i)});
      const size_t pos =
          std::uniform_int_distribution<size_t>(0, kCandidatesPerTurn)(rng);
      RankingInstance inst;
      inst.context = r.ContextBefore(i);
      inst.candidates = t.shown_candidates;
      inst.candidates.insert(inst.candidates.begin() + pos, t.final_text);
      inst.relevant_index = pos;
      inst.record_id = r.id;
      inst.turn_index = i;
      out.push_back(std::move(inst));
    }
  }
  return out;
}

std::string_view ScorerName(Scorer s) {
  switch (s) {
    case Scorer::kPreference: return "preference_score";
    case Scorer::kGenerationLogProb: return "generation_logprob";
    case Scorer::kGenerationLogProbPerToken: return "generation_logprob_mean";
  }
  return "?";
}

Scorer ParseScorer(std::string_view name) {
  for (Scorer s : {Scorer::kPreference, Scorer::kGenerationLogProb,
                   Scorer::kGenerationLogProbPerToken}) {
    if (ScorerName(s) == name) return s;
  }
  throw ValidationError("unknown scorer '" + std::string(name) +
                        "' (expected preference_score, generation_logprob or "
                        "generation_logprob_mean)");
}

template <typename T>
std::vector<double> ScoreCandidates(const DialogueModel<T>& model,
                                    const RankingInstance& instance,
                                    Scorer scorer) {
  ValidateInstance(instance);
  std::vector<double> scores;
  scores.reserve(instance.candidates.size());
  for (const auto& c : instance.candidates) {
    switch (scorer) {
      case Scorer::kPreference:
        scores.push_back(PreferenceScore(model, instance.context, c));
        break;
      case Scorer::kGenerationLogProb:
        scores.push_back(GenerationLogProb(model, instance.context, c, false));
        break;
      case Scorer::kGenerationLogProbPerToken:
        scores.push_back(GenerationLogProb(model, instance.context, c, true));
        break;
    }
  }
  return scores;
}

std::vector<size_t> RankByScores(std::span<const double> scores) {
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  return order;
}

template <typename T>
std::vector<size_t> RankBy(Scorer scorer, const DialogueModel<T>& model,
                           const RankingInstance& instance) {
  const std::vector<double> scores = ScoreCandidates(model, instance, scorer);
  return RankByScores(scores);
}

RankingMetrics MapMrrP1(std::span<const RankedList> lists) {
  RankingMetrics m;
  m.instances = lists.size();
  if (lists.empty()) return m;
  for (size_t n = 0; n < lists.size(); ++n) {
    const RankedList& l = lists[n];
    if (l.relevant.empty()) {
      throw ValidationError("ranked list " + std::to_string(n) +
                            " has no relevant item");
    }
    std::vector<bool> is_relevant(l.order.size(), false);
    std::vector<bool> seen(l.order.size(), false);
    for (size_t r : l.relevant) {
      if (r >= l.order.size()) {
        throw ValidationError("ranked list " + std::to_string(n) +
                              ": relevant index out of range");
      }
      is_relevant[r] = true;
    }
    for (size_t idx : l.order) {
      if (idx >= l.order.size() || seen[idx]) {
        throw ValidationError("ranked list " + std::to_string(n) +
                              ": order is not a permutation");
      }
      seen[idx] = true;
    }
    size_t hits = 0;
    double precision_sum = 0;
    double reciprocal = 0;
    for (size_t rank = 0; rank < l.order.size(); ++rank) {
      if (!is_relevant[l.order[rank]]) continue;
      ++hits;
      precision_sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
      if (hits == 1) reciprocal = 1.0 / static_cast<double>(rank + 1);
    }
    m.map += precision_sum / static_cast<double>(hits);
    m.mrr += reciprocal;
    m.p_at_1 += is_relevant[l.order[0]] ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(lists.size());
  m.map /= n;
  m.mrr /= n;
  m.p_at_1 /= n;
  return m;
}

template <typename T>
RankingReport EvaluateRanking(const DialogueModel<T>& model,
                              std::span<const RankingInstance> instances,
                              Scorer scorer) {
  std::vector<RankedList> lists;
  lists.reserve(instances.size());
  for (const auto& inst : instances) {
    lists.push_back({RankBy(scorer, model, inst), {inst.relevant_index}});
  }
  return {scorer, MapMrrP1(lists)};
}

nlohmann::json ToJson(const RankingReport& r) {
  return {{"scorer", ScorerName(r.scorer)},
          {"instances", r.metrics.instances},
          {"map", r.metrics.map},
          {"mrr", r.metrics.mrr},
          {"p_at_1", r.metrics.p_at_1}};
}

std::string FormatRankingTable(std::span<const RankingReport> reports) {
  std::string out = fmt::format("{:<26}{:>10}{:>8}{:>8}{:>8}\n", "scorer",
                                "instances", "MAP", "MRR", "P@1");
  for (const auto& r : reports) {
    out += fmt::format("{:<26}{:>10}{:>8.3f}{:>8.3f}{:>8.3f}\n",
                       ScorerName(r.scorer), r.metrics.instances, r.metrics.map,
                       r.metrics.mrr, r.metrics.p_at_1);
  }
  return out;
}

template <typename T>
std::vector<StaticEvalRow> StaticEval(const DialogueModel<T>& model,
                                      std::span<const DialogueRecord> records,
                                      size_t n, uint64_t seed,
                                      const DecodeConfig& decode) {
  std::vector<std::pair<size_t, size_t>> pool;
  for (size_t r = 0; r < records.size(); ++r) {
    for (size_t t = 1; t < records[r].turns.size(); ++t) pool.emplace_back(r, t);
  }
  if (n > pool.size()) {
    throw ValidationError("requested " + std::to_string(n) +
                          " samples but only " + std::to_string(pool.size()) +
                          " contexts are available");
  }
  Rng rng = MakeRng({seed, 0x57A71C});
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(n);
  std::vector<StaticEvalRow> rows;
  for (size_t i = 0; i < n; ++i) {
    const auto [r, t] = pool[i];
    const DialogueRecord& rec = records[r];
    StaticEvalRow row;
    row.sample_id = i;
    row.record_id = rec.id;
    row.turn_index = t;
    row.context = rec.ContextBefore(t);
    row.reference = rec.turns[t].final_text;
    DecodeConfig cfg = decode;
    cfg.rng_seed = MixSeed({seed, static_cast<uint64_t>(i)});
    row.model_response = Respond(model, row.context, cfg).best().text;
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json ToJson(const StaticEvalRow& row) {
  nlohmann::json ctx = nlohmann::json::array();
  for (const auto& u : row.context.utterances) {
    ctx.push_back({{"role", RoleName(u.role)}, {"text", u.text}});
  }
  return {{"sample_id", row.sample_id},   {"record_id", row.record_id},
          {"turn_index", row.turn_index}, {"context", std::move(ctx)},
          {"model_response", row.model_response},
          {"reference", row.reference}};
}

void WriteStaticEval(std::ostream& out, std::span<const StaticEvalRow> rows) {
  for (const auto& row : rows) out << ToJson(row).dump() << '\n';
}

#define PREFCHAT_INSTANTIATE_EVALUATION(T)                                   \
  template std::vector<double> ScoreCandidates<T>(                            \
      const DialogueModel<T>&, const RankingInstance&, Scorer);               \
  template std::vector<size_t> RankBy<T>(Scorer, const DialogueModel<T>&,     \
                                         const RankingInstance&);             \
  template RankingReport EvaluateRanking<T>(                                  \
      const DialogueModel<T>&, std::span<const RankingInstance>, Scorer);     \
  template std::vector<StaticEvalRow> StaticEval<T>(                          \
      const DialogueModel<T>&, std::span<const DialogueRecord>, size_t,       \
      uint64_t, const DecodeConfig&);

PREFCHAT_INSTANTIATE_EVALUATION(float)
PREFCHAT_INSTANTIATE_EVALUATION(double)

}  // namespace prefchat
