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

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "noda/dynamics.hpp"
#include "noda/odeint.hpp"
#include "noda/random.hpp"

namespace noda {

struct EnvState {
  std::vector<double> observation;
  std::vector<double> canonical;  // (q, p)
  double time = 0.0;
};

struct StepResult {
  EnvState state;
  double reward = 0.0;
  bool done = false;
};

// Wraps an angle to [-pi, pi).
double wrap_angle(double theta);

// Analytic environment with Hamiltonian canonical dynamics. Subclasses supply
// the canonical vector field and the maps between observations and canonical
// coordinates; stepping, resetting and the stateless observation-space
// transition are shared.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual std::size_t obs_dim() const = 0;
  virtual std::size_t action_dim() const = 0;
  virtual std::size_t canonical_dim() const = 0;
  // The action box is [-action_bound, action_bound] in every component.
  virtual double action_bound() const = 0;
  virtual double dt() const = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;

  // du/dt with the action already clipped to the box.
  virtual void field(std::span<const double> u, std::span<const double> a, double t,
                     std::span<double> du) const = 0;
  virtual double hamiltonian(std::span<const double> u) const = 0;
  // Reward of taking `a` in observation `s`.
  virtual double reward(std::span<const double> s, std::span<const double> a) const = 0;

  // Exact canonical maps. The encoder rejects observations outside the
  // environment's state manifold.
  virtual std::vector<double> canonical_to_observation(std::span<const double> u) const = 0;
  virtual std::vector<double> observation_to_canonical(std::span<const double> s) const = 0;
  // Nearest-point variant of the encoder, defined for any observation.
  virtual std::vector<double> project_to_canonical(std::span<const double> s) const = 0;

  EnvState reset(std::uint64_t seed);
  EnvState reset(Rng& rng);
  StepResult step(std::span<const double> action);
  std::vector<double> sample_action(std::uint64_t seed) const;
  std::vector<double> sample_action(Rng& rng) const;

  // One environment step from canonical state u.
  std::vector<double> advance(std::span<const double> u, std::span<const double> a) const;
  // One environment step as a map on observations.
  std::vector<double> transition(std::span<const double> s, std::span<const double> a) const;

  IntegratorConfig integrator() const { return {Method::rk4, 0.0, dt(), substeps_}; }
  void set_substeps(std::size_t substeps) { substeps_ = substeps; }
  const EnvState& state() const { return state_; }

 protected:
  virtual std::vector<double> sample_canonical(Rng& rng) const = 0;
  // Applied after each integration step (e.g. velocity saturation).
  virtual void post_step(std::vector<double>& u) const { (void)u; }
  void check_action(std::span<const double> a) const;

  EnvState state_;
  std::size_t substeps_ = 10;
};

struct PendulumParams {
  double mass = 1.0;
  double length = 1.0;
  double g_grav = 10.0;
  double dt = 0.05;
  double max_torque = 2.0;
  double max_speed = 8.0;

  void validate() const;
};

// Swing-up pendulum; observation [cos theta, sin theta, theta_dot], canonical
// (q, p) = (theta, m l^2 theta_dot / 3). q is kept unwrapped internally.
class Pendulum final : public Environment {
 public:
  explicit Pendulum(PendulumParams params = {});

  std::string name() const override { return "pendulum"; }
  std::size_t obs_dim() const override { return 3; }
  std::size_t action_dim() const override { return 1; }
  std::size_t canonical_dim() const override { return 2; }
  double action_bound() const override { return params_.max_torque; }
  double dt() const override { return params_.dt; }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<Pendulum>(*this); }

  void field(std::span<const double> u, std::span<const double> a, double t,
             std::span<double> du) const override;
  double hamiltonian(std::span<const double> u) const override;
  double reward(std::span<const double> s, std::span<const double> a) const override;

  std::vector<double> canonical_to_observation(std::span<const double> u) const override;
  std::vector<double> observation_to_canonical(std::span<const double> s) const override;
  std::vector<double> project_to_canonical(std::span<const double> s) const override;

  const PendulumParams& params() const { return params_; }
  // Momentum corresponding to |theta_dot| = max_speed.
  double momentum_bound() const;

 protected:
  std::vector<double> sample_canonical(Rng& rng) const override;
  void post_step(std::vector<double>& u) const override;

 private:
  double inertia_factor() const;  // m l^2 / 3

  PendulumParams params_;
};

struct SpringMassParams {
  double k1 = 1.0;  // wall to mass 1
  double k2 = 1.0;  // mass 1 to mass 2
  double dt = 0.1;
  double max_force = 1.0;
  std::size_t obs_dim = 8;

  void validate() const;
};

// Two unit masses on a line; canonical (x1, x2, p1, p2). Observations are a
// fixed full-rank linear lift of (x1, x2, v1, v2).
class SpringMass final : public Environment {
 public:
  // `lift` is [obs_dim, 4]; it must have full column rank.
  SpringMass(SpringMassParams params, Tensor lift);

  static Tensor random_lift(std::size_t obs_dim, Rng& rng);

  std::string name() const override { return "spring"; }
  std::size_t obs_dim() const override { return params_.obs_dim; }
  std::size_t action_dim() const override { return 1; }
  std::size_t canonical_dim() const override { return 4; }
  double action_bound() const override { return params_.max_force; }
  double dt() const override { return params_.dt; }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<SpringMass>(*this); }

  void field(std::span<const double> u, std::span<const double> a, double t,
             std::span<double> du) const override;
  double hamiltonian(std::span<const double> u) const override;
  double reward(std::span<const double> s, std::span<const double> a) const override;

  std::vector<double> canonical_to_observation(std::span<const double> u) const override;
  std::vector<double> observation_to_canonical(std::span<const double> s) const override;
  std::vector<double> project_to_canonical(std::span<const double> s) const override;

  const Tensor& lift() const { return lift_; }
  const SpringMassParams& params() const { return params_; }

 protected:
  std::vector<double> sample_canonical(Rng& rng) const override;

 private:
  SpringMassParams params_;
  Tensor lift_;
  Tensor pseudo_inverse_;  // [4, obs_dim]
};

// "pendulum" or "spring"; the spring lift is drawn from the seed.
std::unique_ptr<Environment> make_environment(const std::string& name, std::uint64_t seed);

// The environment as a deterministic observation-space map.
class EnvironmentDynamics final : public ObservationDynamics {
 public:
  explicit EnvironmentDynamics(const Environment& env) : env_(env) {}
  std::size_t obs_dim() const override { return env_.obs_dim(); }
  std::size_t action_dim() const override { return env_.action_dim(); }
  StepBatch step(const Tensor& states, const Tensor& actions) const override;

 private:
  const Environment& env_;
};

// Rolls a uniform-random policy; episodes are cut every `horizon` steps.
std::vector<Transition> collect_random(Environment& env, std::size_t count, std::size_t horizon,
                                       std::uint64_t seed);

// Like collect_random, but each record spans `hold` steps with the action held
// constant; r is the reward of the first step.
std::vector<Transition> collect_random_multistep(Environment& env, std::size_t count,
                                                 std::size_t horizon, std::size_t hold,
                                                 std::uint64_t seed);

}  // namespace noda
