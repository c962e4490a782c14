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
#include <limits>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "noda/errors.hpp"
#include "noda/odeint.hpp"

using namespace noda;

namespace {

void decay(std::span<const double> u, std::span<const double>, double, std::span<double> du) {
  for (std::size_t i = 0; i < u.size(); ++i) du[i] = -u[i];
}

void oscillator(std::span<const double> u, std::span<const double>, double, std::span<double> du) {
  du[0] = u[1];
  du[1] = -u[0];
}

IntegratorConfig cfg(Method m, double tau, std::size_t s, double t0 = 0.0) { return {m, t0, tau, s}; }

}  // namespace

TEST_CASE("zero field leaves the state unchanged") {
  auto zero = [](std::span<const double>, std::span<const double>, double, std::span<double> du) {
    for (double& x : du) x = 0.0;
  };
  const std::vector<double> u0{0.3, -1.7, 2.0};
  for (Method m : {Method::euler, Method::rk4}) CHECK(integrate(zero, u0, {}, cfg(m, 0.7, 3)) == u0);
}

TEST_CASE("exponential decay and rotation") {
  const std::vector<double> one{1.0};
  const double e = integrate(decay, one, {}, cfg(Method::rk4, 1.0, 100))[0];
  CHECK(std::abs(e - std::exp(-1.0)) <= 1e-8);
  CHECK(std::abs(e - 0.36787944) <= 1e-8);

  const auto r = integrate(oscillator, std::vector<double>{1.0, 0.0}, {}, cfg(Method::rk4, std::numbers::pi / 2, 100));
  CHECK(std::abs(r[0]) <= 1e-6);
  CHECK(std::abs(r[1] + 1.0) <= 1e-6);
}

TEST_CASE("convergence order") {
  const std::vector<double> one{1.0}, ref{std::exp(-1.0)};
  const std::vector<std::size_t> steps{10, 20, 40, 80};
  const auto rk = convergence_order(decay, one, {}, Method::rk4, 0.0, 1.0, steps, ref);
  const auto eu = convergence_order(decay, one, {}, Method::euler, 0.0, 1.0, steps, ref);
  REQUIRE(rk.size() == 4);
  for (std::size_t i = 0; i + 1 < rk.size(); ++i) {
    const double f4 = rk[i].error / rk[i + 1].error;
    const double f1 = eu[i].error / eu[i + 1].error;
    CHECK(f4 >= 12.0);
    CHECK(f4 <= 20.0);
    CHECK(f1 >= 1.8);
    CHECK(f1 <= 2.2);
  }

  auto constant = [](std::span<const double>, std::span<const double>, double, std::span<double> du) {
    du[0] = 2.5;
  };
  const std::vector<double> exact{1.0 + 2.5 * 0.8};
  for (Method m : {Method::euler, Method::rk4})
    for (const auto& p : convergence_order(constant, one, {}, m, 0.0, 0.8, steps, exact))
      CHECK(p.error <= 1e-13);  // exact up to rounding
}

TEST_CASE("time and action enter the field") {
  // du/dt = a + t from t0 = 1: exact u = u0 + a tau + ((t0 + tau)^2 - t0^2) / 2, a polynomial
  // of degree 2 in t that RK4 integrates exactly.
  auto f = [](std::span<const double>, std::span<const double> a, double t, std::span<double> du) {
    du[0] = a[0] + t;
  };
  const std::vector<double> u0{0.5}, a{-0.3};
  const double got = integrate(f, u0, a, cfg(Method::rk4, 0.4, 3, 1.0))[0];
  CHECK(got == doctest::Approx(0.5 - 0.3 * 0.4 + (1.4 * 1.4 - 1.0) / 2).epsilon(1e-14));
}

TEST_CASE("flow composition for random linear fields") {
  Rng rng = make_rng(7, "test.flow");
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor m = testing::random_tensor({3, 3}, rng);
    auto f = [&](std::span<const double> u, std::span<const double>, double, std::span<double> du) {
      for (std::size_t i = 0; i < 3; ++i) {
        du[i] = 0.0;
        for (std::size_t j = 0; j < 3; ++j) du[i] += m(i, j) * u[j];
      }
    };
    const std::vector<double> u0{uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)};
    const double t1 = uniform(rng, 0.1, 0.5), t2 = uniform(rng, 0.1, 0.5);
    const auto mid = integrate(f, u0, {}, cfg(Method::rk4, t1, 50));
    const auto two = integrate(f, mid, {}, cfg(Method::rk4, t2, 50, t1));
    const auto whole = integrate(f, u0, {}, cfg(Method::rk4, t1 + t2, 100));
    CHECK(testing::max_abs_diff(two, whole) <= 1e-7);
  }
}

TEST_CASE("tape integration matches the plain integrator and differentiates") {
  Rng rng = make_rng(8, "test.tape");
  const Tensor m = testing::random_tensor({2, 2}, rng);
  ParamSet params{{"u0", testing::random_tensor({1, 2}, rng)}, {"a", testing::random_tensor({1, 2}, rng)}};
  const IntegratorConfig c = cfg(Method::rk4, 0.5, 7);

  auto tape_field = [&](Tape& t) {
    return [&t, &m](Var u, Var a, double time) {
      return add(add(matmul(tanh(u), t.constant(m)), a), t.constant(Tensor::matrix(1, 2, {time, -time})));
    };
  };
  auto plain = [&](std::span<const double> u, std::span<const double> a, double time, std::span<double> du) {
    for (std::size_t j = 0; j < 2; ++j) {
      du[j] = a[j] + (j == 0 ? time : -time);
      for (std::size_t i = 0; i < 2; ++i) du[j] += std::tanh(u[i]) * m(i, j);
    }
  };

  Tape tape;
  const Tensor got = integrate(tape_field(tape), tape.param(params, "u0"), tape.param(params, "a"), c).value();
  const auto want = integrate(plain, params["u0"].data(), params["a"].data(), c);
  CHECK(testing::max_abs_diff(got.data(), want) <= 1e-14);

  auto loss = [&](Tape& t, const ParamSet& p) {
    return sum(square(integrate(tape_field(t), t.param(p, "u0"), t.param(p, "a"), c)));
  };
  const GradCheckReport r = grad_check(loss, params, 1e-5, 1e-4);
  CHECK(r.pass);
}

TEST_CASE("divergence carries the substep") {
  auto f = [](std::span<const double> u, std::span<const double>, double, std::span<double> du) {
    du[0] = u[0] > 1e3 ? std::numeric_limits<double>::infinity() : 10.0 * u[0];
  };
  try {
    integrate(f, std::vector<double>{1.0}, {}, cfg(Method::euler, 10.0, 10));
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.kind() == ErrorKind::divergence);
    CHECK(e.substep() == 3);  // 1, 11, 121, 1331: the fourth step (index 3) sees u > 1e3
  }
}

TEST_CASE("determinism and config validation") {
  const std::vector<double> u0{0.2, 0.9};
  CHECK(integrate(oscillator, u0, {}, cfg(Method::rk4, 1.3, 9)) ==
        integrate(oscillator, u0, {}, cfg(Method::rk4, 1.3, 9)));
  CHECK_THROWS_AS(cfg(Method::rk4, 1.0, 0).validate(), Error);
  CHECK_THROWS_AS(cfg(Method::rk4, 0.0, 3).validate(), Error);
  CHECK_THROWS_AS(cfg(Method::rk4, -1.0, 3).validate(), Error);
  CHECK(parse_method("euler") == Method::euler);
  CHECK(parse_method("rk4") == Method::rk4);
  CHECK_THROWS_AS(parse_method("dopri"), Error);
}
