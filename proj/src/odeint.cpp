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
#include "noda/odeint.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "noda/errors.hpp"

namespace noda {

Method parse_method(std::string_view name) {
  if (name == "rk4") return Method::rk4;
  if (name == "euler") return Method::euler;
  fail(ErrorKind::contract, "unknown integrator '" + std::string(name) + "'");
}

const char* to_string(Method method) { return method == Method::rk4 ? "rk4" : "euler"; }

void IntegratorConfig::validate() const {
  if (substeps < 1) fail(ErrorKind::contract, "integrator needs at least one substep");
  if (!(tau > 0.0) || !std::isfinite(tau)) fail(ErrorKind::contract, "integrator horizon must be positive");
  if (!std::isfinite(t0)) fail(ErrorKind::contract, "integrator start time must be finite");
}

namespace {

void check_finite(std::span<const double> v, std::size_t substep) {
  for (double x : v)
    if (!std::isfinite(x)) throw DivergenceError(substep, "field output");
}

}  // namespace

std::vector<double> integrate(const Field& field, std::span<const double> u0, std::span<const double> a,
                              const IntegratorConfig& cfg) {
  cfg.validate();
  for (double x : u0)
    if (!std::isfinite(x)) fail(ErrorKind::domain, "initial state is not finite");

  const std::size_t n = u0.size();
  const double h = cfg.step_size();
  std::vector<double> u(u0.begin(), u0.end());
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);

  for (std::size_t s = 0; s < cfg.substeps; ++s) {
    const double t = cfg.t0 + static_cast<double>(s) * h;
    field(u, a, t, k1);
    check_finite(k1, s);
    if (cfg.method == Method::euler) {
      for (std::size_t i = 0; i < n; ++i) u[i] += h * k1[i];
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * h * k1[i];
    field(tmp, a, t + 0.5 * h, k2);
    check_finite(k2, s);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * h * k2[i];
    field(tmp, a, t + 0.5 * h, k3);
    check_finite(k3, s);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + h * k3[i];
    field(tmp, a, t + h, k4);
    check_finite(k4, s);
    for (std::size_t i = 0; i < n; ++i) u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  check_finite(u, cfg.substeps - 1);
  return u;
}

Var integrate(const TapeField& field, Var u0, Var a, const IntegratorConfig& cfg) {
  cfg.validate();
  if (!u0.value().all_finite()) fail(ErrorKind::domain, "initial state is not finite");
  const double h = cfg.step_size();
  Var u = u0;
  for (std::size_t s = 0; s < cfg.substeps; ++s) {
    const double t = cfg.t0 + static_cast<double>(s) * h;
    try {
      Var k1 = field(u, a, t);
      if (k1.shape() != u.shape())
        fail(ErrorKind::dimension, "field returned " + shape_string(k1.shape()) + " for state " +
                                       shape_string(u.shape()));
      if (cfg.method == Method::euler) {
        u = add(u, scale(k1, h));
        continue;
      }
      Var k2 = field(add(u, scale(k1, 0.5 * h)), a, t + 0.5 * h);
      Var k3 = field(add(u, scale(k2, 0.5 * h)), a, t + 0.5 * h);
      Var k4 = field(add(u, scale(k3, h)), a, t + h);
      Var incr = add(add(k1, scale(k2, 2.0)), add(scale(k3, 2.0), k4));
      u = add(u, scale(incr, h / 6.0));
    } catch (const DivergenceError&) {
      throw;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::domain) throw;
      throw DivergenceError(s, e.what());
    }
  }
  return u;
}

std::vector<ConvergencePoint> convergence_order(const Field& field, std::span<const double> u0,
                                                std::span<const double> a, Method method, double t0,
                                                double tau, std::span<const std::size_t> substep_list,
                                                std::span<const double> reference) {
  if (reference.size() != u0.size()) fail(ErrorKind::dimension, "reference has the wrong length");
  std::vector<ConvergencePoint> out;
  for (std::size_t s : substep_list) {
    IntegratorConfig cfg{method, t0, tau, s};
    const auto u = integrate(field, u0, a, cfg);
    double err = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) err = std::max(err, std::abs(u[i] - reference[i]));
    out.push_back({s, err});
  }
  return out;
}

}  // namespace noda
