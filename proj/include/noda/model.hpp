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

// World models built from an auto-encoder around a latent transition.
//
//   u      = f(s)                  encoder, latent u = (q, p) of length 2K
//   s_next = g(ODE(h, u, a, t0, t0 + tau))
//   r      = g'(u, a)              reward from the pre-evolution latent
//
// The AE baseline replaces the ODE call by a direct network (u, a) -> u'.
// Networks see normalized observations, rewards and actions; the
// ObservationDynamics interface works in raw environment units.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "noda/diffcore.hpp"
#include "noda/dynamics.hpp"
#include "noda/odeint.hpp"
#include "noda/text.hpp"

namespace noda {

enum class ModelKind { noda, ae };

ModelKind parse_model_kind(const std::string& name);
const char* to_string(ModelKind kind);

enum class ModelPart { encoder, decoder, reward, dynamics };

ModelPart parse_model_part(const std::string& name);
const char* to_string(ModelPart part);

struct Normalizer {
  std::vector<double> obs_mean;
  std::vector<double> obs_std;
  double reward_mean = 0.0;
  double reward_std = 1.0;
  double action_scale = 1.0;

  static Normalizer identity(std::size_t obs_dim, double action_scale = 1.0);
  // Mean/std over s and s2 of every record, and over r.
  static Normalizer fit(const TransitionBatch& data, double action_scale);

  Tensor normalize_obs(const Tensor& s) const;
  Tensor denormalize_obs(const Tensor& s) const;
  Tensor normalize_actions(const Tensor& a) const;
  Tensor normalize_rewards(const Tensor& r) const;
  Tensor denormalize_rewards(const Tensor& r) const;
  TransitionBatch normalize(const TransitionBatch& raw) const;
};

struct WorldModelConfig {
  ModelKind kind = ModelKind::noda;
  std::size_t obs_dim = 3;
  std::size_t action_dim = 1;
  std::size_t latent_dim = 2;  // 2K
  std::size_t hidden_width = 32;
  // Width of the AE's direct dynamics network; 0 picks the width whose
  // parameter count best matches the NODA dynamics field.
  std::size_t ae_width = 0;
  IntegratorConfig integrator;
  // The ODE field is field_scale * MLP(u, a, t); 0 picks 1 / tau, so the
  // network output is on the scale of the per-step latent change.
  double field_scale = 0.0;

  void validate() const;
};

// Loss is mu * (recon + pred) + (1 - mu) * reward with mu in (0, 1).
struct LossWeights {
  double mu = 0.5;
  void validate() const;
};

struct LossTerms {
  Var total;
  double recon = 0.0;
  double pred = 0.0;
  double reward = 0.0;
};

struct Prediction {
  Var latent;          // u = f(s)
  Var reconstruction;  // g(u)
  Var next_state;      // g(evolved u)
  Var reward;          // g'(u, a)
};

class WorldModel final : public ObservationDynamics {
 public:
  WorldModel(WorldModelConfig config, std::uint64_t seed);
  // Restores a model from checkpointed parameters and metadata.
  WorldModel(const ParamSet& params, const Metadata& metadata);

  // AE baseline whose parameter count matches `noda` (same encoder/decoders).
  static WorldModel matched_ae(const WorldModel& noda, std::uint64_t seed);

  // --- tape-level, normalized units ---
  Var encode(Tape& tape, Var s) const;
  Var decode(Tape& tape, Var u) const;
  Var predict_reward(Tape& tape, Var u, Var a) const;
  Var evolve(Tape& tape, Var u, Var a) const;
  Prediction forward(Tape& tape, Var s, Var a) const;
  // `batch` must already be normalized.
  LossTerms loss(Tape& tape, const TransitionBatch& batch, const LossWeights& weights) const;

  // --- raw units ---
  StepBatch step(const Tensor& states, const Tensor& actions) const override;
  Tensor encode(const Tensor& states) const;
  Tensor decode(const Tensor& latents) const;
  // Training loss on raw data, evaluated without gradients in chunks.
  double evaluate_loss(const TransitionBatch& raw, const LossWeights& weights) const;
  // Mean squared next-state error per element, in normalized units.
  double one_step_mse(const TransitionBatch& raw) const;

  std::size_t obs_dim() const override { return config_.obs_dim; }
  std::size_t action_dim() const override { return config_.action_dim; }

  const WorldModelConfig& config() const { return config_; }
  void set_integrator(const IntegratorConfig& cfg);
  const ParamSet& params() const { return params_; }
  ParamSet& params() { return params_; }
  const Normalizer& normalizer() const { return normalizer_; }
  void set_normalizer(Normalizer normalizer);
  std::size_t param_count() const { return parameter_count(params_); }

  // Parameter-name prefix of a part ("encoder", "decoder", "reward", "dynamics").
  static std::string prefix(ModelPart part);

  Metadata metadata() const;

 private:
  void build_networks();

  WorldModelConfig config_;
  Normalizer normalizer_;
  ParamSet params_;
  Mlp encoder_, decoder_, reward_, dynamics_;
};

// Width for a direct (in -> W -> W -> out) network whose parameter count is
// closest to `target`.
std::size_t matched_width(std::size_t in, std::size_t out, std::size_t target);

// One Adam update on the raw batch; returns the loss before the update.
double train_step(WorldModel& model, const TransitionBatch& raw_batch, AdamState& optimizer,
                  const LossWeights& weights);

// Replaces the selected parts with the checkpoint's parameters. All shapes are
// checked before anything is modified.
void transfer_load(WorldModel& model, const ParamSet& checkpoint, const std::set<ModelPart>& parts);

struct RolloutResult {
  std::vector<std::vector<double>> states;  // s_1 .. s_n
  std::vector<double> rewards;              // r_0 .. r_{n-1}
};

// n chained one-step predictions from s0 under a fixed action sequence.
RolloutResult rollout_model(const ObservationDynamics& dynamics, const std::vector<double>& s0,
                            const std::vector<std::vector<double>>& actions);

}  // namespace noda
