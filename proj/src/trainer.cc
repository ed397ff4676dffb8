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

#include "prefchat/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "prefchat/errors.h"
#include "prefchat/rng.h"

namespace prefchat {

void TrainConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("invalid train config: ") + what);
  };
  require(peak_lr > 0 && std::isfinite(peak_lr), "peak_lr must be positive");
  require(warmup_steps >= 1, "warmup_steps must be >= 1");
  require(epochs >= 0, "epochs must be >= 0");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(adam.beta1 >= 0 && adam.beta1 < 1, "adam.beta1 must be in [0, 1)");
  require(adam.beta2 >= 0 && adam.beta2 < 1, "adam.beta2 must be in [0, 1)");
  require(adam.epsilon > 0, "adam.epsilon must be positive");
  require(grad_clip_norm >= 0, "grad_clip_norm must be >= 0");
}

double LearningRate(int64_t step, const TrainConfig& config) {
  if (step < 1) throw ValidationError("learning-rate step must be >= 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(config.warmup_steps);
  if (step <= config.warmup_steps) return config.peak_lr * s / w;
  return config.peak_lr * std::sqrt(w / s);
}

nlohmann::json ToJson(const StepLog& s) {
  return {{"event", "step"}, {"step", s.step}, {"epoch", s.epoch},
          {"lr", s.lr},      {"nll", s.nll},   {"pe", s.pe},
          {"total", s.total}};
}

nlohmann::json ToJson(const EpochLog& e) {
  nlohmann::json j = {{"event", "epoch"},
                      {"epoch", e.epoch},
                      {"mean_total", e.mean_total},
                      {"mean_nll", e.mean_nll},
                      {"mean_pe", e.mean_pe}};
  if (e.validation) {
    j["valid"] = {{"quadruples", e.validation->quadruples},
                  {"nll", e.validation->nll},
                  {"pe", e.validation->pe},
                  {"p_at_1", e.validation->p_at_1}};
  }
  if (!e.checkpoint.empty()) j["checkpoint"] = e.checkpoint;
  return j;
}

ValidationMetrics Validate(const Model& model,
                           std::span<const TrainingQuadruple> quadruples,
                           const LossOptions& options) {
  ValidationMetrics m;
  m.quadruples = quadruples.size();
  if (quadruples.empty()) return m;
  size_t wins = 0;
  for (const auto& q : quadruples) {
    m.nll += NllLoss(model, q.context, q.human, options);
    const double h = PreferenceScore(model, q.context, q.human);
    const double mm = PreferenceScore(model, q.context, q.model);
    const double r = PreferenceScore(model, q.context, q.random);
    m.pe += PeLoss(h, mm, r);
    if (h > mm && h > r) ++wins;
  }
  const double n = static_cast<double>(quadruples.size());
  m.nll /= n;
  m.pe /= n;
  m.p_at_1 = static_cast<double>(wins) / n;
  return m;
}

Trainer::Trainer(Model model, TrainConfig config)
    : model_(std::move(model)), config_(std::move(config)) {
  config_.Validate();
  state_.adam_m.assign(model_.parameter_count(), 0.0f);
  state_.adam_v.assign(model_.parameter_count(), 0.0f);
}

Trainer::Trainer(Model model, TrainConfig config, TrainingState<float> state)
    : model_(std::move(model)),
      config_(std::move(config)),
      state_(std::move(state)) {
  config_.Validate();
  if (state_.adam_m.size() != model_.parameter_count() ||
      state_.adam_v.size() != model_.parameter_count()) {
    throw ValidationError("checkpoint carries no optimizer state to resume");
  }
}

Trainer Trainer::Resume(const std::filesystem::path& checkpoint,
                        TrainConfig config) {
  TrainingState<float> state;
  Model model = LoadCheckpoint<float>(checkpoint, &state);
  return Trainer(std::move(model), std::move(config), std::move(state));
}

void Trainer::ApplyAdam(std::span<float> grad, double lr) {
  const double b1 = config_.adam.beta1, b2 = config_.adam.beta2;
  const double t = static_cast<double>(state_.step);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  std::span<float> params = model_.mutable_parameters();
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    const double m = b1 * state_.adam_m[i] + (1.0 - b1) * g;
    const double v = b2 * state_.adam_v[i] + (1.0 - b2) * g * g;
    state_.adam_m[i] = static_cast<float>(m);
    state_.adam_v[i] = static_cast<float>(v);
    params[i] = static_cast<float>(
        params[i] - lr * (m / c1) / (std::sqrt(v / c2) + config_.adam.epsilon));
  }
}

TrainReport Trainer::Run(std::span<const DialogueRecord> train,
                         std::span<const DialogueRecord> valid,
                         const TrainEventSink& sink) {
  TrainReport report;
  if (state_.epochs_completed >= config_.epochs) return report;
  const LossOptions loss_options{config_.nll_per_token_mean};
  const std::vector<TrainingQuadruple> valid_quads =
      valid.empty() ? std::vector<TrainingQuadruple>{}
                    : BuildQuadruples(valid, MixSeed({config_.seed, 0x7A11D}));
  AlignedVector<float> grad(model_.parameter_count());

  for (int epoch = state_.epochs_completed; epoch < config_.epochs; ++epoch) {
    const uint64_t epoch_seed =
        MixSeed({config_.seed, static_cast<uint64_t>(epoch)});
    const std::vector<TrainingQuadruple> quads =
        BuildQuadruples(train, epoch_seed);
    if (quads.empty()) {
      throw ValidationError("training data yields no quadruples");
    }
    std::vector<size_t> order(quads.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng =
        MakeRng({config_.seed, static_cast<uint64_t>(epoch), 0x5F1E});
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochLog epoch_log;
    epoch_log.epoch = epoch + 1;
    size_t batches = 0;
    for (size_t begin = 0; begin < order.size(); begin += config_.batch_size) {
      const size_t end = std::min(order.size(), begin + config_.batch_size);
      const float scale = 1.0f / static_cast<float>(end - begin);
      std::fill(grad.begin(), grad.end(), 0.0f);
      StepLog step;
      auto numeric_failure = [&](const std::string& what) {
        std::string ids;
        for (size_t i = begin; i < end; ++i) {
          const auto& q = quads[order[i]];
          ids += (ids.empty() ? "" : ",") + q.record_id + "#" +
                 std::to_string(q.turn_index);
        }
        return NumericError(what + " at step " + std::to_string(state_.step + 1) +
                            " (batch " + ids + ")");
      };
      try {
        for (size_t i = begin; i < end; ++i) {
          const JointLossValue v = JointLossAndGradient<float>(
              model_, quads[order[i]], loss_options, grad, scale);
          step.nll += v.nll * scale;
          step.pe += v.pe * scale;
          step.total += v.total * scale;
        }
      } catch (const NumericError& e) {
        throw numeric_failure(e.what());
      }
      double norm2 = 0;
      for (float g : grad) norm2 += static_cast<double>(g) * g;
      if (!std::isfinite(step.total) || !std::isfinite(norm2)) {
        throw numeric_failure("non-finite loss");
      }
      if (config_.grad_clip_norm > 0) {
        const double norm = std::sqrt(norm2);
        if (norm > config_.grad_clip_norm) {
          const float c = static_cast<float>(config_.grad_clip_norm / norm);
          for (float& g : grad) g *= c;
        }
      }
      ++state_.step;
      step.step = state_.step;
      step.epoch = epoch + 1;
      step.lr = LearningRate(static_cast<int64_t>(state_.step), config_);
      ApplyAdam(grad, step.lr);
      epoch_log.mean_total += step.total;
      epoch_log.mean_nll += step.nll;
      epoch_log.mean_pe += step.pe;
      ++batches;
      if (sink) sink(ToJson(step));
      report.steps.push_back(step);
    }
    epoch_log.mean_total /= static_cast<double>(batches);
    epoch_log.mean_nll /= static_cast<double>(batches);
    epoch_log.mean_pe /= static_cast<double>(batches);
    if (!valid_quads.empty()) {
      epoch_log.validation = Validate(model_, valid_quads, loss_options);
    }
    state_.epochs_completed = epoch + 1;
    if (!config_.checkpoint_dir.empty()) {
      const auto path = config_.checkpoint_dir /
                        ("epoch_" + std::to_string(epoch + 1) + ".ckpt");
      SaveCheckpoint(path, model_, &state_);
      epoch_log.checkpoint = path.string();
      report.checkpoints.push_back(path.string());
    }
    spdlog::info("epoch {}: total {:.4f} nll {:.4f} pe {:.4f}", epoch + 1,
                 epoch_log.mean_total, epoch_log.mean_nll, epoch_log.mean_pe);
    if (sink) sink(ToJson(epoch_log));
    report.epochs.push_back(std::move(epoch_log));
  }
  return report;
}

TrainResult Train(Model model, std::span<const DialogueRecord> train,
                  const TrainConfig& config,
                  std::span<const DialogueRecord> valid,
                  const TrainEventSink& sink) {
  Trainer trainer(std::move(model), config);
  TrainReport report = trainer.Run(train, valid, sink);
  return {trainer.model(), std::move(report)};
}

GradientCheckResult GradientCheck(const ModelF64& model,
                                  const TrainingQuadruple& quadruple,
                                  double epsilon,
                                  const GradientCheckOptions& options) {
  if (!(epsilon > 0)) throw ValidationError("epsilon must be positive");
  const size_t n = model.parameter_count();
  AlignedVector<double> analytic(n, 0.0);
  JointLossAndGradient<double>(model, quadruple, options.loss, analytic);

  std::vector<size_t> indices(n);
  std::iota(indices.begin(), indices.end(), 0);
  Rng rng = MakeRng({options.seed, 0x6C4E});
  std::shuffle(indices.begin(), indices.end(), rng);
  indices.resize(std::min(n, options.samples));
  if (options.zero_gradient_index) {
    const size_t z = *options.zero_gradient_index;
    if (z >= n) throw ValidationError("zero_gradient_index out of range");
    analytic[z] = 0.0;
    if (std::find(indices.begin(), indices.end(), z) == indices.end()) {
      indices.push_back(z);
    }
  }

  ModelF64 probe = model;
  std::span<double> params = probe.mutable_parameters();
  GradientCheckResult result;
  for (size_t idx : indices) {
    const double saved = params[idx];
    params[idx] = saved + epsilon;
    const double plus = JointLoss(probe, quadruple, options.loss).total;
    params[idx] = saved - epsilon;
    const double minus = JointLoss(probe, quadruple, options.loss).total;
    params[idx] = saved;
    const double numeric = (plus - minus) / (2.0 * epsilon);
    const double a = analytic[idx];
    const double err = std::abs(a - numeric) /
                       std::max({std::abs(a), std::abs(numeric), 1e-8});
    if (err > result.max_relative_error || result.checked == 0) {
      result.max_relative_error = err;
      result.worst_index = idx;
    }
    ++result.checked;
  }
  return result;
}

GradientCheckCase RandomGradientCheckCase(uint64_t seed, double perturbation) {
  Rng rng = MakeRng({seed, 0x6C4F});
  auto between = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  auto text = [&](int lo, int hi) {
    static constexpr std::string_view kLetters = "abcdefgh ";
    std::string s;
    const int n = between(lo, hi);
    for (int i = 0; i < n; ++i) s += kLetters[between(0, 7)];
    return s;
  };
  Vocabulary vocab =
      Vocabulary::FromTokens({"a", "b", "c", "d", "e", "f", "g", "h", " "});
  ModelConfig c;
  c.n_layers = between(1, 2);
  c.n_heads = 1 << between(0, 2);
  c.d_model = 8 * between(1, 2);
  c.max_context_len = 16;
  c.max_response_len = 8;
  c.vocab_size = vocab.size();
  c.seed = seed;
  ModelF64 model(c, vocab);
  std::normal_distribution<double> noise(0.0, perturbation);
  for (double& p : model.mutable_parameters()) p += noise(rng);
  TrainingQuadruple q;
  Role role = Role::kA;
  for (int i = between(1, 3); i > 0; --i, role = Other(role)) {
    q.context.utterances.push_back({role, text(1, 6)});
  }
  q.human = text(1, 6);
  q.model = text(1, 6);
  q.random = text(1, 6);
  q.record_id = "gradcheck-" + std::to_string(seed);
  return {std::move(model), std::move(q)};
}

}  // namespace prefchat
