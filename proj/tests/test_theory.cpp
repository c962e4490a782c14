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
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "noda/envs.hpp"
#include "noda/errors.hpp"
#include "noda/theory.hpp"

using namespace noda;

namespace {

BatchMap constant_map(double c) {
  return [c](const Tensor& s, const Tensor&) { return Tensor({s.rows(), 2}, c); };
}

BatchMap doubling() {
  return [](const Tensor& s, const Tensor&) {
    Tensor out = s;
    for (double& x : out.data()) x *= 2.0;
    return out;
  };
}

// A pendulum with the wrong gravity: a smooth, imperfect model of the real one.
struct WrongGravity final : ObservationDynamics {
  Pendulum env{PendulumParams{1.0, 1.0, 10.8}};
  EnvironmentDynamics dyn{env};
  std::size_t obs_dim() const override { return 3; }
  std::size_t action_dim() const override { return 1; }
  StepBatch step(const Tensor& s, const Tensor& a) const override { return dyn.step(s, a); }
};

RewardFunction pendulum_reward() {
  return [](std::span<const double> s, std::span<const double> a) { return Pendulum().reward(s, a); };
}

}  // namespace

TEST_CASE("Lipschitz estimates") {
  Rng rng = make_rng(1, "test.lip");
  const Tensor states = testing::random_tensor({20, 3}, rng), actions({2, 1}, 0.0);
  CHECK(estimate_lipschitz(constant_map(4.0), states, actions).value == 0.0);
  const LipschitzEstimate two = estimate_lipschitz(doubling(), states, actions);
  CHECK(two.value == 2.0);
  CHECK(two.pairs == 2 * 190);

  const Tensor close({3, 3}, std::vector<double>{0, 0, 0, 1e-8, 0, 0, 0, 1e-8, 0});
  try {
    estimate_lipschitz(doubling(), close, actions);
    FAIL("expected insufficient spread");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::insufficient_spread);
  }

  const BatchMap constant_reward = [](const Tensor& s, const Tensor&) { return Tensor({s.rows(), 1}, -1.5); };
  CHECK(estimate_reward_lipschitz(constant_reward, states, actions).value == 0.0);
  const BatchMap linear_reward = [](const Tensor& s, const Tensor&) {
    Tensor r({s.rows(), 1});
    for (std::size_t i = 0; i < s.rows(); ++i) r[i] = 3.0 * s(i, 0);
    return r;
  };
  // Pairs that differ only in the first coordinate attain the supremum 3 exactly.
  const Tensor line({4, 3}, std::vector<double>{0, 1, 2, 0.5, 1, 2, -1, 1, 2, 2, 1, 2});
  CHECK(estimate_reward_lipschitz(linear_reward, line, actions).value == 3.0);
  CHECK(estimate_reward_lipschitz(linear_reward, states, actions).value <= 3.0 + 1e-12);
}

TEST_CASE("estimates never shrink when samples are added") {
  Pendulum env;
  const EnvironmentDynamics dyn(env);
  const WrongGravity model;
  const auto data = collect_random(env, 60, 200, 3);
  Tensor actions({1, 1}, 1.0);
  double prev_k = 0.0, prev_d = 0.0;
  for (std::size_t n = 10; n <= 60; n += 10) {
    std::vector<Transition> head(data.begin(), data.begin() + static_cast<long>(n));
    const TransitionBatch b = stack(head);
    const double k = estimate_lipschitz(next_state_map(dyn), b.s, actions).value;
    const double d = estimate_delta(dyn, model, b.s, b.a);
    CHECK(k >= prev_k);
    CHECK(d >= prev_d);
    prev_k = k;
    prev_d = d;
  }
}

TEST_CASE("point-mass Wasserstein distance") {
  const std::vector<double> o{0, 0}, p{3, 4};
  CHECK(wasserstein_point(o, o) == 0.0);
  CHECK(wasserstein_point(o, p) == 5.0);
  Rng rng = make_rng(3, "test.w");
  for (int i = 0; i < 200; ++i) {
    std::vector<double> a(4), b(4), c(4);
    for (auto* v : {&a, &b, &c})
      for (double& x : *v) x = uniform(rng, -3, 3);
    CHECK(wasserstein_point(a, b) == wasserstein_point(b, a));
    CHECK(wasserstein_point(a, c) <= wasserstein_point(a, b) + wasserstein_point(b, c) + 1e-12);
    CHECK(wasserstein_point(a, a) == 0.0);
  }
  CHECK_THROWS_AS(wasserstein_point(o, std::vector<double>{1, 2, 3}), Error);
}

TEST_CASE("delta measurements") {
  Pendulum env;
  const EnvironmentDynamics dyn(env);
  const WrongGravity model;
  const State s0{0.0, 1.0, 0.5};
  std::vector<State> actions;
  for (int k = 0; k < 12; ++k) actions.push_back({1.5 * std::cos(k * 0.7)});

  const DeltaTrace same = measure_delta_n(dyn, dyn, s0, actions);
  REQUIRE(same.delta.size() == 13);
  for (double d : same.delta) CHECK(d == 0.0);

  const DeltaTrace off = measure_delta_n(dyn, model, s0, actions);
  CHECK(off.delta[0] == 0.0);
  CHECK(off.delta[5] > 0.0);
  for (double d : off.delta) CHECK(std::isfinite(d));
  CHECK(off.env_states.size() == 13);

  const Tensor s({1, 3}, s0), a({1, 1}, 0.3);
  CHECK(estimate_delta(dyn, dyn, s, a) == 0.0);
  const double one = wasserstein_point(dyn.step(s, a).next_states.data(), model.step(s, a).next_states.data());
  CHECK(estimate_delta(dyn, model, s, a) == one);
}

TEST_CASE("transition and value bounds") {
  CHECK(transition_bound(0.3, 1.7, 1) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(transition_bound(0.1, 2.0, 3) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(transition_bound(0.2, 1.0, 5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(transition_bound(0.1, 2.0, 0), Error);
  for (double k : {0.0, 0.3, 0.999999, 1.0, 1.0 + 1e-13, 1.2, 3.0})
    for (std::size_t n = 1; n < 25; ++n) {
      const double lhs = transition_bound(0.05, k, n + 1), rhs = 0.05 + k * transition_bound(0.05, k, n);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(rhs));
    }
  CHECK(value_bound(0.9, 1.0, 0.1, 1.0) == doctest::Approx(9.0).epsilon(1e-14));
  CHECK(std::isinf(value_bound(0.9, 1.0, 0.1, 1.0 / 0.9)));
  CHECK(std::isinf(value_bound(0.9, 1.0, 0.1, 2.0)));
}

TEST_CASE("truncated values") {
  Pendulum env;
  const EnvironmentDynamics dyn(env);
  const State s0{1.0, 0.0, 0.2};
  const std::vector<State> actions(60, State{0.5});
  const RewardFunction zero = [](std::span<const double>, std::span<const double>) { return 0.0; };
  const ValueEstimate z = estimate_value(dyn, zero, s0, actions, 0.9, 0.0);
  CHECK(z.value == 0.0);
  CHECK(z.tail_bound == 0.0);

  const RewardFunction c = [](std::span<const double>, std::span<const double>) { return -1.25; };
  const ValueEstimate v = estimate_value(dyn, c, s0, actions, 0.5, 1.25);
  CHECK(std::abs(v.value - 2 * -1.25) <= v.tail_bound + 1e-15);

  const ValueEstimate myopic = estimate_value(dyn, pendulum_reward(), s0, actions, 0.0, 20.0);
  CHECK(myopic.value == env.reward(s0, actions[0]));
  CHECK_THROWS_AS(estimate_value(dyn, zero, s0, actions, 1.0, 0.0), Error);
}

TEST_CASE("bound verification") {
  Pendulum env;
  const EnvironmentDynamics dyn(env);
  const Normalizer norm = Normalizer::fit(stack(collect_random(env, 500, 200, 4)), 2.0);
  BoundConfig cfg;
  cfg.rollouts = 20;
  cfg.n_max = 15;
  cfg.lipschitz_pairs = 500;
  const RolloutSet set = sample_rollouts(env, cfg.rollouts, cfg.n_max, 5);
  REQUIRE(set.starts.size() == 20);

  SUBCASE("oracle model") {
    const BoundReport r = verify_bounds(dyn, dyn, norm, pendulum_reward(), set, cfg);
    CHECK(r.constants.delta == 0.0);
    REQUIRE(r.rows.size() == 15);
    for (const BoundRow& row : r.rows) {
      CHECK(row.delta_measured == 0.0);
      CHECK(row.margin == row.bound_closed_form);
    }
    CHECK(r.recursive_violations == 0);
    CHECK(r.constants.k_bar == std::min(r.constants.k_env, r.constants.k_model));
    for (double g : r.value_gaps) CHECK(g == 0.0);
  }
  SUBCASE("imperfect model is certified in sample") {
    const WrongGravity model;
    const BoundReport r = verify_bounds(dyn, model, norm, pendulum_reward(), set, cfg);
    CHECK(r.constants.delta > 0.0);
    CHECK(r.recursive_checks == 20 * 15);
    CHECK(r.recursive_violations == 0);
    CHECK(r.closed_form_violations == 0);
    CHECK(r.vacuous == !(0.9 * r.constants.k_bar < 1.0));
    if (!r.vacuous) CHECK(r.value_violations == 0);
    else CHECK(r.value_gaps.empty());
    for (const BoundRow& row : r.rows) CHECK(row.margin == row.bound_closed_form - row.delta_measured);

    // The literal form with the model constant alone also holds.
    BoundConstants k2 = r.constants;
    k2.k_bar = r.constants.k_model;
    CHECK(check_bounds(dyn, model, norm, pendulum_reward(), set, k2, cfg).recursive_violations == 0);
  }
  SUBCASE("vacuous value bound") {
    const WrongGravity model;
    cfg.gamma = 0.99;
    BoundConstants big;
    big.k_env = big.k_model = big.k_bar = 2.0;
    big.delta = 1.0;
    big.k_reward = 1.0;
    const BoundReport r = check_bounds(dyn, model, norm, pendulum_reward(), set, big, cfg);
    CHECK(r.vacuous);
    CHECK(r.value_gaps.empty());
    CHECK(std::isinf(r.value_bound));
  }
}
