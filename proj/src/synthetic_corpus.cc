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

#include "prefchat/synthetic_corpus.h"

#include <algorithm>
#include <random>

#include "prefchat/errors.h"
#include "prefchat/rng.h"

namespace prefchat {

namespace {

constexpr std::string_view kConsonants = "bdfgklmnprst";
constexpr std::string_view kVowels = "aeiou";
constexpr int kConsonantsPerRegister = 2;

class Generator {
 public:
  explicit Generator(const SyntheticCorpusConfig& config) : config_(config) {}

  std::string Word(Rng& rng, int reg) {
    const int syllables = Between(rng, 1, 2);
    std::string w;
    for (int i = 0; i < syllables; ++i) {
      w += kConsonants[reg * kConsonantsPerRegister +
                       Between(rng, 0, kConsonantsPerRegister - 1)];
      w += kVowels[Between(rng, 0, static_cast<int>(kVowels.size()) - 1)];
    }
    return w;
  }

  std::string Human(Rng& rng, int reg) {
    return Words(rng, Between(rng, config_.human_min_words, config_.human_max_words),
                 [&] { return reg; });
  }

  std::string Candidate(Rng& rng, int reg) {
    std::bernoulli_distribution on_topic(config_.candidate_on_topic);
    return Words(rng,
                 Between(rng, config_.candidate_min_words, config_.candidate_max_words),
                 [&] { return on_topic(rng) ? reg : OtherRegister(rng, reg); });
  }

  // Rewrites a candidate into the dialogue's register and extends it by one
  // word, keeping its length profile.
  std::string Revise(Rng& rng, const std::string& candidate, int reg) {
    size_t words = 1;
    for (char c : candidate) words += c == ' ';
    return Words(rng, static_cast<int>(words) + 1, [&] { return reg; });
  }

  int OtherRegister(Rng& rng, int reg) {
    const int r = Between(rng, 0, config_.n_registers - 2);
    return r >= reg ? r + 1 : r;
  }

  static int Between(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  }

 private:
  template <typename PickRegister>
  std::string Words(Rng& rng, int n, PickRegister pick) {
    std::string out;
    for (int i = 0; i < n; ++i) {
      if (i > 0) out += ' ';
      out += Word(rng, pick());
    }
    return out;
  }

  const SyntheticCorpusConfig& config_;
};

}  // namespace

void SyntheticCorpusConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("invalid synthetic corpus config: ") + what);
  };
  const int max_registers =
      static_cast<int>(kConsonants.size()) / kConsonantsPerRegister;
  require(n_dialogues >= 0, "n_dialogues must be >= 0");
  require(min_rounds >= 1 && max_rounds >= min_rounds, "bad round range");
  require(n_registers >= 2 && n_registers <= max_registers,
          "n_registers must be in [2, 6]");
  require(human_min_words >= 1 && human_max_words >= human_min_words,
          "bad human length range");
  require(candidate_min_words >= 1 && candidate_max_words >= candidate_min_words,
          "bad candidate length range");
  require(candidate_on_topic >= 0 && candidate_on_topic <= 1,
          "candidate_on_topic must be in [0, 1]");
  require(p_select >= 0 && p_revise >= 0 && p_select + p_revise <= 1,
          "action probabilities must lie in [0, 1] and sum to at most 1");
}

std::vector<std::string> SyntheticAlphabet() {
  std::vector<std::string> out{" "};
  std::string letters(kConsonants);
  letters += kVowels;
  std::sort(letters.begin(), letters.end());
  for (char ch : letters) out.emplace_back(1, ch);
  return out;
}

std::vector<DialogueRecord> GenerateSyntheticCorpus(
    const SyntheticCorpusConfig& config) {
  config.Validate();
  Generator gen(config);
  std::vector<DialogueRecord> records;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<size_t> slot(0, kCandidatesPerTurn - 1);
  for (int d = 0; d < config.n_dialogues; ++d) {
    Rng rng = MakeRng({config.seed, static_cast<uint64_t>(d)});
    const int reg = d % config.n_registers;
    DialogueRecord r;
    r.id = "syn-" + std::to_string(d);
    r.status = config.status;
    r.turns.push_back({Role::kA, gen.Human(rng, reg), Action::kOpening, {}, {}, {}});
    const int rounds = Generator::Between(rng, config.min_rounds, config.max_rounds);
    for (int i = 0; i < rounds; ++i) {
      AnnotatedTurn t;
      t.speaker_role = Other(r.turns.back().speaker_role);
      for (size_t c = 0; c < kCandidatesPerTurn; ++c) {
        t.shown_candidates.push_back(gen.Candidate(rng, reg));
      }
      const double u = unit(rng);
      if (u < config.p_select) {
        // Now and then a sample is already on register and gets picked.
        const size_t k = slot(rng);
        t.shown_candidates[k] = gen.Human(rng, reg);
        t.action = Action::kSelect;
        t.chosen_index = k;
        t.final_text = t.shown_candidates[k];
      } else if (u < config.p_select + config.p_revise) {
        const size_t k = slot(rng);
        t.action = Action::kRevise;
        t.chosen_index = k;
        t.final_text = gen.Revise(rng, t.shown_candidates[k], reg);
      } else {
        t.action = Action::kRewrite;
        t.final_text = gen.Human(rng, reg);
      }
      r.turns.push_back(std::move(t));
    }
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace prefchat
