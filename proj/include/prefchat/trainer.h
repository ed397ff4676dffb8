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

#ifndef PREFCHAT_TRAINER_H_
#define PREFCHAT_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "prefchat/checkpoint.h"
#include "prefchat/dataset.h"
#include "prefchat/losses.h"
#include "prefchat/model.h"
#include "prefchat/quadruples.h"

namespace prefchat {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Desk-scale defaults. The reference large-scale run used peak_lr 2e-6,
// warmup 500 steps, 5 epochs and batch size 168; all are accepted here.
struct TrainConfig {
  double peak_lr = 3e-4;
  int warmup_steps = 100;
  int epochs = 5;
  int batch_size = 16;
  AdamConfig adam;
  // Global-norm clipping threshold; 0 disables clipping.
  double grad_clip_norm = 0.0;
  bool nll_per_token_mean = false;
  uint64_t seed = 0;
  // Per-epoch checkpoints are written here when non-empty.
  std::filesystem::path checkpoint_dir;

  void Validate() const;
};

// Linear warmup to peak_lr at warmup_steps, then peak_lr*sqrt(warmup/step).
double LearningRate(int64_t step, const TrainConfig& config);

struct StepLog {
  uint64_t step = 0;
  int epoch = 0;
  double lr = 0;
  double nll = 0;
  double pe = 0;
  double total = 0;
};

struct ValidationMetrics {
  size_t quadruples = 0;
  double nll = 0;
  double pe = 0;
  // Fraction of quadruples whose human response outscores both others.
  double p_at_1 = 0;
};

struct EpochLog {
  int epoch = 0;  // 1-based
  double mean_total = 0;
  double mean_nll = 0;
  double mean_pe = 0;
  std::optional<ValidationMetrics> validation;
  std::string checkpoint;
};

struct TrainReport {
  std::vector<StepLog> steps;
  std::vector<EpochLog> epochs;
  std::vector<std::string> checkpoints;
};

nlohmann::json ToJson(const StepLog& s);
nlohmann::json ToJson(const EpochLog& e);

using TrainEventSink = std::function<void(const nlohmann::json&)>;

ValidationMetrics Validate(const Model& model,
                           std::span<const TrainingQuadruple> quadruples,
                           const LossOptions& options = {});

// Owns the parameters and Adam moments for the length of a run.
class Trainer {
 public:
  Trainer(Model model, TrainConfig config);
  // Continues from a per-epoch checkpoint written by a previous run.
  static Trainer Resume(const std::filesystem::path& checkpoint,
                        TrainConfig config);

  // Runs the remaining epochs. Each epoch rebuilds the quadruples with the
  // epoch seed MixSeed(seed, epoch) and steps on batch means of joint_loss.
  TrainReport Run(std::span<const DialogueRecord> train,
                  std::span<const DialogueRecord> valid = {},
                  const TrainEventSink& sink = nullptr);

  const Model& model() const { return model_; }
  const TrainingState<float>& state() const { return state_; }
  const TrainConfig& config() const { return config_; }

 private:
  Trainer(Model model, TrainConfig config, TrainingState<float> state);
  void ApplyAdam(std::span<float> grad, double lr);

  Model model_;
  TrainConfig config_;
  TrainingState<float> state_;
};

struct TrainResult {
  Model model;
  TrainReport report;
};

TrainResult Train(Model model, std::span<const DialogueRecord> train,
                  const TrainConfig& config,
                  std::span<const DialogueRecord> valid = {},
                  const TrainEventSink& sink = nullptr);

struct GradientCheckOptions {
  size_t samples = 200;
  uint64_t seed = 0;
  LossOptions loss;
  // Fault injection: zero the analytic gradient of this parameter and make
  // sure it is among the checked ones.
  std::optional<size_t> zero_gradient_index;
};

struct GradientCheckResult {
  double max_relative_error = 0;
  size_t worst_index = 0;
  size_t checked = 0;
};

// Central finite differences of joint_loss on a random parameter subsample;
// error = |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
GradientCheckResult GradientCheck(const ModelF64& model,
                                  const TrainingQuadruple& quadruple,
                                  double epsilon,
                                  const GradientCheckOptions& options = {});

struct GradientCheckCase {
  ModelF64 model;
  TrainingQuadruple quadruple;
};

// A small random float64 model (1-2 layers, width 8 or 16, 1-4 heads) over a
// nine-letter alphabet, with its parameters moved off the initialization by
// Gaussian noise of standard deviation `perturbation`, plus a random
// quadruple. Fully determined by `seed`.
GradientCheckCase RandomGradientCheckCase(uint64_t seed,
                                          double perturbation = 0.1);

}  // namespace prefchat

#endif  // PREFCHAT_TRAINER_H_
