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

// Soft actor-critic with a tanh-squashed Gaussian actor, twin critics and
// Polyak-averaged target critics; plus the FIFO replay buffer it learns from.

#include <cstdint>
#include <vector>

#include "noda/diffcore.hpp"
#include "noda/dynamics.hpp"
#include "noda/envs.hpp"

namespace noda {

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const noexcept { return size_; }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return size_ == 0; }
  // i = 0 is the oldest record still held.
  const Transition& at(std::size_t i) const;
  // Uniform with replacement.
  std::vector<Transition> sample(std::size_t n, Rng& rng) const;
  void clear();

 private:
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t cursor_ = 0;  // next slot to overwrite
  std::vector<Transition> records_;
};

struct SacConfig {
  std::size_t obs_dim = 3;
  std::size_t action_dim = 1;
  double action_bound = 2.0;
  std::size_t hidden_width = 64;
  double lr = 1e-3;
  double gamma = 0.99;
  double alpha = 0.2;
  double rho = 0.995;

  void validate() const;
};

struct SacLosses {
  double critic = 0.0;
  double actor = 0.0;
};

class SacAgent {
 public:
  SacAgent(SacConfig config, std::uint64_t seed);

  // Action in environment units. Stochastic actions draw from `rng`.
  std::vector<double> act(std::span<const double> state, bool deterministic, Rng& rng) const;
  std::vector<double> act(std::span<const double> state) const;  // deterministic
  // Row-wise actions for a batch of states.
  Tensor act_batch(const Tensor& states, bool deterministic, Rng& rng) const;

  // Soft Bellman targets r + gamma (1 - done)(min Q'(s2, a') - alpha log pi(a'|s2))
  // with a' drawn using the given standard-normal noise [B, m].
  Tensor critic_target(const TransitionBatch& batch, const Tensor& noise) const;
  // Log-density of the squashed actions produced from `noise`, [B, 1].
  Tensor log_prob(const Tensor& states, const Tensor& noise) const;

  // One gradient step on both critics and the actor, then the target update.
  SacLosses update(const TransitionBatch& batch, Rng& rng);

  const SacConfig& config() const { return config_; }
  SacConfig& mutable_config() { return config_; }
  const ParamSet& actor_params() const { return actor_params_; }
  const ParamSet& critic_params() const { return critic_params_; }
  const ParamSet& target_params() const { return target_params_; }

  // All parameters; target critics are prefixed with "target.".
  ParamSet snapshot() const;
  void restore(const ParamSet& params);

 private:
  struct Sample {
    Var action;    // squashed, in [-1, 1]
    Var log_prob;  // [B, 1]
  };
  Sample sample_action(Tape& tape, const ParamSet& actor, Var states, const Tensor& noise) const;
  Var q_value(Tape& tape, const Mlp& net, const ParamSet& params, Var states, Var unit_actions) const;
  Tensor mean_action(const Tensor& states) const;

  SacConfig config_;
  Mlp actor_, q1_, q2_, target_q1_, target_q2_;
  ParamSet actor_params_, critic_params_, target_params_;
  AdamState actor_opt_, critic_opt_;
};

struct PolicyScore {
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> returns;
};

// Undiscounted returns of deterministic episodes from seeded resets.
PolicyScore evaluate_policy(const SacAgent& agent, Environment& env, std::size_t episodes,
                            std::size_t horizon, std::uint64_t seed);

}  // namespace noda
