/*
 Copyright 2026 The NODA Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#pragma once

// Training loops: model-assisted SAC with imaginary rollouts, model-only
// training on fixed datasets, the latent-dimension sweep and the transfer
// experiment.

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "noda/agent.hpp"
#include "noda/envs.hpp"
#include "noda/model.hpp"

namespace noda {

enum class WorldModelChoice { noda, ae, none };

WorldModelChoice parse_world_model(const std::string& name);
const char* to_string(WorldModelChoice choice);

// Per-environment defaults: latent dimension and network width.
struct EnvDefaults {
  std::size_t latent_dim;
  std::size_t hidden_width;
};
EnvDefaults env_defaults(const std::string& env);

// Model configuration sized for `env` (dims, tau = dt, t0 = 0).
WorldModelConfig model_config_for(const Environment& env, std::size_t latent_dim, std::size_t hidden_width);

struct TrainConfig {
  std::string env = "pendulum";
  std::uint64_t seed = 0;
  std::size_t n1 = 1000;   // warmup steps with random actions
  std::size_t n2 = 250;    // env steps between imaginary generations
  std::size_t n3 = 5;      // model rollout length
  std::size_t n4 = 30000;  // total env steps
  std::size_t b1 = 256;    // agent batch
  std::size_t b2 = 400;    // imaginary rollouts per generation
  std::size_t model_batch = 200;
  std::size_t block = 50;  // env steps per update block, and updates per block
  std::size_t eval_interval = 4000;
  std::size_t eval_episodes = 10;
  std::size_t horizon = 200;
  std::size_t imag_updates_max = 50;
  std::size_t imag_updates_min = 10;
  std::size_t model_test_size = 2000;
  double imag_mix_ratio = 0.5;  // share of imaginary records in each extra batch
  double mu = 0.5;
  double lr_model = 1e-3;
  WorldModelChoice world_model = WorldModelChoice::noda;
  std::size_t latent_dim = 0;    // 0: environment default
  std::size_t hidden_width = 0;  // 0: environment default
  IntegratorConfig integrator;   // tau <= 0 means the environment dt
  SacConfig agent;               // dims and bound are filled from the env
  bool wall_clock = false;
  // Ends the run after the first evaluation at or above this return.
  double stop_return = std::numeric_limits<double>::infinity();

  void validate() const;
};

struct MetricsRow {
  std::size_t env_steps = 0;
  double eval_return_mean = 0.0;
  double eval_return_std = 0.0;
  double model_test_mse = std::numeric_limits<double>::quiet_NaN();
  double model_loss = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = std::numeric_limits<double>::quiet_NaN();
};

struct RunMetrics {
  std::vector<MetricsRow> rows;
  // First evaluated env-step count whose mean return reaches `threshold`.
  std::optional<std::size_t> steps_to(double threshold) const;
};

struct RunResult {
  std::unique_ptr<SacAgent> agent;
  std::unique_ptr<WorldModel> model;  // null for world_model = none
  RunMetrics metrics;
  std::size_t env_steps = 0;
  std::size_t real_transitions = 0;
  std::size_t imaginary_transitions = 0;
  std::size_t dropped_rollouts = 0;
};

// `on_row` is called after every evaluation, so partial metrics survive a failure.
RunResult run_noda_sac(const TrainConfig& config, const std::function<void(const MetricsRow&)>& on_row = {});

struct ImaginaryStats {
  std::size_t appended = 0;
  std::size_t dropped = 0;  // rollouts cut short by model divergence
};

// Starts B2 rollouts from (s, a) pairs sampled from `real`, rolls the model n3
// steps choosing later actions with the stochastic policy, and appends the
// records rollout by rollout to `imaginary`.
ImaginaryStats generate_imaginary(const SacAgent& agent, const ObservationDynamics& model, const ReplayBuffer& real,
                                  ReplayBuffer& imaginary, std::size_t b2, std::size_t n3, Rng& replay_rng,
                                  Rng& policy_rng);

struct ModelTrainingConfig {
  WorldModelConfig model;
  ModelKind kind = ModelKind::noda;
  std::size_t batches = 2000;
  std::size_t batch_size = 200;
  double lr = 1e-3;
  LossWeights weights;
  std::uint64_t seed = 0;
  std::size_t test_every = 50;
  double action_scale = 1.0;
  // Optional warm start: these parts are loaded after initialization.
  const ParamSet* init_params = nullptr;
  std::set<ModelPart> init_parts;
};

struct LossPoint {
  std::size_t batch = 0;
  double loss = 0.0;
};

struct ModelTrainingResult {
  std::unique_ptr<WorldModel> model;
  std::vector<double> train_loss;    // one per batch, before its update
  std::vector<LossPoint> test_loss;  // every test_every batches and at the end
  double final_test_mse = std::numeric_limits<double>::quiet_NaN();
};

ModelTrainingResult run_model_training(const TransitionBatch& train, const TransitionBatch& test,
                                       const ModelTrainingConfig& config);

struct SweepRow {
  std::size_t dim = 0;
  double final_test_loss = 0.0;
};

std::vector<SweepRow> sweep_latent_dim(const TransitionBatch& train, const TransitionBatch& test,
                                       const std::vector<std::size_t>& dims, const ModelTrainingConfig& base);

struct TransferResult {
  std::vector<LossPoint> scratch;
  std::vector<LossPoint> transfer;
  // First batch at which the transferred run's test loss reaches the scratch
  // run's final test loss.
  std::optional<std::size_t> batches_to_match() const;
};

// Pretrains on `pretrain_train` for `pretrain_batches`, then fine-tunes a
// scratch and a warm-started model on the fine-tune data with identical
// seeds. `finetune.model` describes the fine-tune task (e.g. a longer tau);
// the pretrained model uses `pretrain_model`.
TransferResult run_transfer(const TransitionBatch& pretrain_train, const TransitionBatch& finetune_train,
                            const TransitionBatch& finetune_test, const WorldModelConfig& pretrain_model,
                            std::size_t pretrain_batches, const ModelTrainingConfig& finetune,
                            const std::set<ModelPart>& parts);

// Samples `n` records from a batch, uniformly with replacement.
TransitionBatch sample_rows(const TransitionBatch& data, std::size_t n, Rng& rng);

}  // namespace noda
