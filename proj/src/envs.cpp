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
#include "noda/envs.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "noda/errors.hpp"

namespace noda {

using std::numbers::pi;

TransitionBatch stack(const std::vector<Transition>& records) {
  if (records.empty()) fail(ErrorKind::contract, "cannot stack an empty transition list");
  const std::size_t n = records.size();
  const std::size_t l = records[0].s.size(), m = records[0].a.size();
  TransitionBatch b{Tensor({n, l}), Tensor({n, m}), Tensor({n, l}), Tensor({n, 1}), Tensor({n, 1})};
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& t = records[i];
    if (t.s.size() != l || t.s2.size() != l || t.a.size() != m)
      fail(ErrorKind::dimension, "transition " + std::to_string(i) + " has inconsistent dimensions");
    std::copy(t.s.begin(), t.s.end(), b.s.row(i).begin());
    std::copy(t.a.begin(), t.a.end(), b.a.row(i).begin());
    std::copy(t.s2.begin(), t.s2.end(), b.s2.row(i).begin());
    b.r[i] = t.r;
    b.done[i] = t.done ? 1.0 : 0.0;
  }
  return b;
}

double wrap_angle(double theta) {
  double w = std::fmod(theta + pi, 2.0 * pi);
  if (w < 0.0) w += 2.0 * pi;
  w -= pi;
  // fmod can land exactly on +pi after rounding.
  return w >= pi ? -pi : w;
}

// --- Environment ----------------------------------------------------------

void Environment::check_action(std::span<const double> a) const {
  if (a.size() != action_dim())
    fail(ErrorKind::dimension, name() + " expects an action of length " + std::to_string(action_dim()));
  for (double x : a)
    if (!std::isfinite(x)) fail(ErrorKind::domain, "non-finite action");
}

EnvState Environment::reset(std::uint64_t seed) {
  Rng rng(seed);
  return reset(rng);
}

EnvState Environment::reset(Rng& rng) {
  state_.canonical = sample_canonical(rng);
  state_.observation = canonical_to_observation(state_.canonical);
  state_.time = 0.0;
  return state_;
}

std::vector<double> Environment::advance(std::span<const double> u, std::span<const double> a) const {
  check_action(a);
  const Field f = [this](std::span<const double> uu, std::span<const double> aa, double t,
                         std::span<double> du) { field(uu, aa, t, du); };
  auto next = integrate(f, u, a, integrator());
  post_step(next);
  return next;
}

StepResult Environment::step(std::span<const double> action) {
  if (state_.canonical.empty()) fail(ErrorKind::contract, "step() before reset()");
  StepResult out;
  out.reward = reward(state_.observation, action);
  state_.canonical = advance(state_.canonical, action);
  state_.observation = canonical_to_observation(state_.canonical);
  state_.time += dt();
  out.state = state_;
  out.done = false;
  return out;
}

std::vector<double> Environment::sample_action(std::uint64_t seed) const {
  Rng rng(seed);
  return sample_action(rng);
}

std::vector<double> Environment::sample_action(Rng& rng) const {
  std::vector<double> a(action_dim());
  for (double& x : a) x = uniform(rng, -action_bound(), action_bound());
  return a;
}

std::vector<double> Environment::transition(std::span<const double> s, std::span<const double> a) const {
  return canonical_to_observation(advance(project_to_canonical(s), a));
}

// --- Pendulum -------------------------------------------------------------

void PendulumParams::validate() const {
  if (!(mass > 0 && length > 0 && g_grav > 0 && dt > 0 && max_torque > 0 && max_speed > 0))
    fail(ErrorKind::contract, "pendulum parameters must all be positive");
}

Pendulum::Pendulum(PendulumParams params) : params_(params) { params_.validate(); }

double Pendulum::inertia_factor() const {
  return params_.mass * params_.length * params_.length / 3.0;
}

double Pendulum::momentum_bound() const { return params_.max_speed * inertia_factor(); }

void Pendulum::field(std::span<const double> u, std::span<const double> a, double,
                     std::span<double> du) const {
  const double q = u[0], p = u[1];
  const double torque = std::clamp(a[0], -params_.max_torque, params_.max_torque);
  const double force =
      0.5 * params_.mass * params_.g_grav * params_.length * std::sin(q) + torque;
  du[0] = p / inertia_factor();
  const double bound = momentum_bound();
  if (p > bound) {
    du[1] = std::min(force, 0.0);
  } else if (p < -bound) {
    du[1] = std::max(force, 0.0);
  } else {
    du[1] = force;
  }
}

void Pendulum::post_step(std::vector<double>& u) const {
  const double bound = momentum_bound();
  u[1] = std::clamp(u[1], -bound, bound);
}

double Pendulum::hamiltonian(std::span<const double> u) const {
  const double q = u[0], p = u[1];
  return p * p / (2.0 * inertia_factor()) +
         0.5 * params_.mass * params_.g_grav * params_.length * std::cos(q);
}

double Pendulum::reward(std::span<const double> s, std::span<const double> a) const {
  check_action(a);
  const double theta = wrap_angle(std::atan2(s[1], s[0]));
  const double speed = s[2];
  const double torque = std::clamp(a[0], -params_.max_torque, params_.max_torque);
  return -(theta * theta + 0.1 * speed * speed + 0.001 * torque * torque);
}

std::vector<double> Pendulum::canonical_to_observation(std::span<const double> u) const {
  if (u.size() != 2) fail(ErrorKind::dimension, "pendulum canonical state has length 2");
  return {std::cos(u[0]), std::sin(u[0]), u[1] / inertia_factor()};
}

std::vector<double> Pendulum::observation_to_canonical(std::span<const double> s) const {
  if (s.size() != 3) fail(ErrorKind::dimension, "pendulum observation has length 3");
  const double radius2 = s[0] * s[0] + s[1] * s[1];
  if (std::abs(radius2 - 1.0) > 1e-6)
    fail(ErrorKind::domain, "observation is off the unit circle (cos^2+sin^2 = " +
                                std::to_string(radius2) + ")");
  return project_to_canonical(s);
}

std::vector<double> Pendulum::project_to_canonical(std::span<const double> s) const {
  if (s.size() != 3) fail(ErrorKind::dimension, "pendulum observation has length 3");
  return {wrap_angle(std::atan2(s[1], s[0])), inertia_factor() * s[2]};
}

std::vector<double> Pendulum::sample_canonical(Rng& rng) const {
  const double theta = uniform(rng, -pi, pi);
  const double speed = uniform(rng, -1.0, 1.0);
  return {theta, inertia_factor() * speed};
}

// --- SpringMass -----------------------------------------------------------

void SpringMassParams::validate() const {
  if (!(k1 > 0 && k2 > 0 && dt > 0 && max_force > 0 && obs_dim >= 4))
    fail(ErrorKind::contract, "spring-mass parameters must be positive with obs_dim >= 4");
}

namespace {
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
}

SpringMass::SpringMass(SpringMassParams params, Tensor lift) : params_(params), lift_(std::move(lift)) {
  params_.validate();
  if (lift_.rank() != 2 || lift_.rows() != params_.obs_dim || lift_.cols() != 4)
    fail(ErrorKind::dimension, "lift must be [" + std::to_string(params_.obs_dim) + ",4], got " +
                                   shape_string(lift_.shape()));
  Eigen::Map<const RowMat> L(lift_.data().data(), params_.obs_dim, 4);
  Eigen::ColPivHouseholderQR<RowMat> qr(L);
  if (qr.rank() < 4) fail(ErrorKind::contract, "lift matrix is rank deficient");
  const RowMat pinv = (L.transpose() * L).inverse() * L.transpose();
  pseudo_inverse_ = Tensor({4, params_.obs_dim}, std::vector<double>(pinv.data(), pinv.data() + pinv.size()));
}

Tensor SpringMass::random_lift(std::size_t obs_dim, Rng& rng) {
  Tensor lift({obs_dim, 4});
  for (double& x : lift.data()) x = standard_normal(rng) / 2.0;
  return lift;
}

void SpringMass::field(std::span<const double> u, std::span<const double> a, double,
                       std::span<double> du) const {
  const double x1 = u[0], x2 = u[1], p1 = u[2], p2 = u[3];
  const double force = std::clamp(a[0], -params_.max_force, params_.max_force);
  du[0] = p1;
  du[1] = p2;
  du[2] = -params_.k1 * x1 + params_.k2 * (x2 - x1);
  du[3] = -params_.k2 * (x2 - x1) + force;
}

double SpringMass::hamiltonian(std::span<const double> u) const {
  const double x1 = u[0], x2 = u[1], p1 = u[2], p2 = u[3];
  return 0.5 * (p1 * p1 + p2 * p2) + 0.5 * params_.k1 * x1 * x1 +
         0.5 * params_.k2 * (x2 - x1) * (x2 - x1);
}

double SpringMass::reward(std::span<const double> s, std::span<const double> a) const {
  check_action(a);
  const auto u = project_to_canonical(s);
  return -(u[0] * u[0] + u[1] * u[1]);
}

std::vector<double> SpringMass::canonical_to_observation(std::span<const double> u) const {
  if (u.size() != 4) fail(ErrorKind::dimension, "spring-mass canonical state has length 4");
  std::vector<double> s(params_.obs_dim, 0.0);
  for (std::size_t i = 0; i < params_.obs_dim; ++i)
    for (std::size_t j = 0; j < 4; ++j) s[i] += lift_(i, j) * u[j];
  return s;
}

std::vector<double> SpringMass::project_to_canonical(std::span<const double> s) const {
  if (s.size() != params_.obs_dim)
    fail(ErrorKind::dimension, "spring-mass observation has length " + std::to_string(params_.obs_dim));
  std::vector<double> u(4, 0.0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < params_.obs_dim; ++j) u[i] += pseudo_inverse_(i, j) * s[j];
  return u;
}

std::vector<double> SpringMass::observation_to_canonical(std::span<const double> s) const {
  auto u = project_to_canonical(s);
  const auto back = canonical_to_observation(u);
  double residual = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    residual += (back[i] - s[i]) * (back[i] - s[i]);
    norm += s[i] * s[i];
  }
  if (std::sqrt(residual) > 1e-6 * (1.0 + std::sqrt(norm)))
    fail(ErrorKind::domain, "observation is outside the lifted state space");
  return u;
}

std::vector<double> SpringMass::sample_canonical(Rng& rng) const {
  std::vector<double> u(4);
  for (double& x : u) x = uniform(rng, -1.0, 1.0);
  return u;
}

// --- helpers --------------------------------------------------------------

std::unique_ptr<Environment> make_environment(const std::string& name, std::uint64_t seed) {
  if (name == "pendulum") return std::make_unique<Pendulum>();
  if (name == "spring") {
    Rng rng = make_rng(seed, "lift");
    SpringMassParams params;
    return std::make_unique<SpringMass>(params, SpringMass::random_lift(params.obs_dim, rng));
  }
  fail(ErrorKind::contract, "unknown environment '" + name + "'");
}

StepBatch EnvironmentDynamics::step(const Tensor& states, const Tensor& actions) const {
  const std::size_t n = states.rows();
  if (states.cols() != env_.obs_dim() || actions.cols() != env_.action_dim() || actions.rows() != n)
    fail(ErrorKind::dimension, "environment step batch has the wrong shape");
  StepBatch out{Tensor({n, env_.obs_dim()}), Tensor({n, 1})};
  for (std::size_t i = 0; i < n; ++i) {
    const auto next = env_.transition(states.row(i), actions.row(i));
    std::copy(next.begin(), next.end(), out.next_states.row(i).begin());
    out.rewards[i] = env_.reward(states.row(i), actions.row(i));
  }
  return out;
}

std::vector<Transition> collect_random(Environment& env, std::size_t count, std::size_t horizon,
                                       std::uint64_t seed) {
  return collect_random_multistep(env, count, horizon, 1, seed);
}

std::vector<Transition> collect_random_multistep(Environment& env, std::size_t count,
                                                 std::size_t horizon, std::size_t hold,
                                                 std::uint64_t seed) {
  if (hold == 0 || horizon < hold) fail(ErrorKind::contract, "hold must be in [1, horizon]");
  Rng reset_rng = make_rng(seed, "reset");
  Rng action_rng = make_rng(seed, "action");
  std::vector<Transition> out;
  out.reserve(count);
  std::size_t steps_in_episode = horizon;
  while (out.size() < count) {
    if (steps_in_episode + hold > horizon) {
      env.reset(reset_rng);
      steps_in_episode = 0;
    }
    Transition t;
    t.s = env.state().observation;
    t.a = env.sample_action(action_rng);
    for (std::size_t k = 0; k < hold; ++k) {
      const StepResult r = env.step(t.a);
      if (k == 0) t.r = r.reward;
    }
    t.s2 = env.state().observation;
    t.done = false;
    steps_in_episode += hold;
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace noda
