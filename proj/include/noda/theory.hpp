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

// Empirical Lipschitz constants, point-mass Wasserstein distances, measured
// multi-step model divergence and the transition/value error bounds built from
// them. Suprema are sample maxima: estimates from below of the true constants,
// exact over the set they were computed on.

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "noda/diffcore.hpp"
#include "noda/dynamics.hpp"
#include "noda/model.hpp"

namespace noda {

class Environment;

using State = std::vector<double>;

// Row-wise map of (states [N, l], actions [N, m]) to outputs [N, k].
using BatchMap = std::function<Tensor(const Tensor& states, const Tensor& actions)>;
using RewardFunction = std::function<double(std::span<const double> s, std::span<const double> a)>;

BatchMap next_state_map(const ObservationDynamics& dynamics);
BatchMap reward_map(const ObservationDynamics& dynamics);

double euclidean_distance(std::span<const double> a, std::span<const double> b);
// Distance between two point masses; the optimal coupling is the only one.
double wasserstein_point(std::span<const double> a, std::span<const double> b);

struct LipschitzEstimate {
  double value = 0.0;
  std::size_t first = 0;   // argmax pair (row indices)
  std::size_t second = 0;
  std::size_t action = 0;  // argmax action row
  std::size_t pairs = 0;   // admissible pairs examined
};

// max over actions and over all state pairs with d >= min_sep of
// d(F(s1, a), F(s2, a)) / d(s1, s2).
LipschitzEstimate estimate_lipschitz(const BatchMap& map, const Tensor& states, const Tensor& actions,
                                     double min_sep = 1e-6);
// Same over explicit pairs (first[i], second[i]) under actions[i].
LipschitzEstimate estimate_lipschitz_pairs(const BatchMap& map, const Tensor& first, const Tensor& second,
                                           const Tensor& actions, double min_sep = 1e-6);
// Scalar-valued map; distance on outputs is the absolute difference.
LipschitzEstimate estimate_reward_lipschitz(const BatchMap& reward, const Tensor& states,
                                            const Tensor& actions, double min_sep = 1e-6);

struct DeltaTrace {
  std::vector<double> delta;        // delta(0) .. delta(n)
  std::vector<State> env_states;    // s_0 .. s_n under the environment
  std::vector<State> model_states;  // s_0 .. s_n under the model
};

// Rolls both from s0 under the same actions.
DeltaTrace measure_delta_n(const ObservationDynamics& env, const ObservationDynamics& model,
                           const State& s0, const std::vector<State>& actions);

// max over rows of d(T(s, a), T_model(s, a)).
double estimate_delta(const ObservationDynamics& env, const ObservationDynamics& model, const Tensor& states,
                      const Tensor& actions);

// Delta * sum_{i<n} K^i.
double transition_bound(double delta, double k_bar, std::size_t n);
// gamma K_R Delta / ((1 - gamma)(1 - gamma K)); +inf when gamma K >= 1.
double value_bound(double gamma, double k_reward, double delta, double k_bar);

struct ValueEstimate {
  double value = 0.0;
  double tail_bound = 0.0;  // gamma^(H+1) r_max / (1 - gamma)
};

// sum_{n=0}^{H} gamma^n R(s_n, a_n) along the dynamics from s0, H = actions - 1.
ValueEstimate estimate_value(const ObservationDynamics& dynamics, const RewardFunction& reward,
                             const State& s0, const std::vector<State>& actions, double gamma,
                             double reward_bound);

struct BoundConfig {
  std::size_t rollouts = 100;
  std::size_t n_max = 20;
  double gamma = 0.9;
  double min_sep = 1e-6;
  std::size_t lipschitz_pairs = 10000;
  // Relative slack for the inequality checks, covering rounding only.
  double slack = 1e-9;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BoundRow {
  std::size_t n = 0;
  double delta_measured = 0.0;  // max over rollouts
  double delta_mean = 0.0;
  double bound_closed_form = 0.0;
  double bound_recursive = 0.0;  // Delta + K_bar * delta_measured(n - 1)
  double margin = 0.0;           // closed form minus measured
};

struct BoundConstants {
  double k_env = 0.0;
  double k_model = 0.0;
  double k_bar = 0.0;
  double delta = 0.0;
  double k_reward = 0.0;
};

struct BoundReport {
  BoundConstants constants;
  double gamma = 0.0;
  std::vector<BoundRow> rows;
  std::size_t recursive_checks = 0;
  std::size_t recursive_violations = 0;
  std::size_t closed_form_violations = 0;
  bool vacuous = false;
  double value_bound = std::numeric_limits<double>::infinity();
  std::vector<double> value_gaps;  // |V_env - V_model| per rollout (empty when vacuous)
  std::size_t value_violations = 0;
};

// Rollout batch: start states and per-rollout action sequences of length n.
struct RolloutSet {
  std::vector<State> starts;
  std::vector<std::vector<State>> actions;
};

RolloutSet sample_rollouts(const Environment& env, std::size_t count, std::size_t n, std::uint64_t seed);

// Estimates every constant over the rollouts' visited states (distances in
// normalized units), then checks the bounds on those same rollouts.
BoundReport verify_bounds(const ObservationDynamics& env, const ObservationDynamics& model,
                          const Normalizer& normalizer, const RewardFunction& reward,
                          const RolloutSet& rollouts, const BoundConfig& config);

// Checks fresh rollouts against constants estimated elsewhere.
BoundReport check_bounds(const ObservationDynamics& env, const ObservationDynamics& model,
                         const Normalizer& normalizer, const RewardFunction& reward,
                         const RolloutSet& rollouts, const BoundConstants& constants,
                         const BoundConfig& config);

}  // namespace noda
