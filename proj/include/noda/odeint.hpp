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

// Fixed-step integration of du/dt = field(u, a, t) with the action held
// constant over [t0, t0 + tau]. The tape variant unrolls the steps so
// gradients are exact for the discrete solution.

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "noda/diffcore.hpp"

namespace noda {

enum class Method { euler, rk4 };

Method parse_method(std::string_view name);
const char* to_string(Method method);

struct IntegratorConfig {
  Method method = Method::rk4;
  double t0 = 0.0;
  double tau = 0.05;
  std::size_t substeps = 10;

  void validate() const;
  double step_size() const { return tau / static_cast<double>(substeps); }
};

// Writes du/dt into `du` (same length as u).
using Field =
    std::function<void(std::span<const double> u, std::span<const double> a, double t, std::span<double> du)>;

// Field evaluated on a tape; u is [B, n], a is [B, m], result is [B, n].
using TapeField = std::function<Var(Var u, Var a, double t)>;

std::vector<double> integrate(const Field& field, std::span<const double> u0, std::span<const double> a,
                              const IntegratorConfig& cfg);

Var integrate(const TapeField& field, Var u0, Var a, const IntegratorConfig& cfg);

struct ConvergencePoint {
  std::size_t substeps = 0;
  double error = 0.0;  // max-abs error against the reference
};

std::vector<ConvergencePoint> convergence_order(const Field& field, std::span<const double> u0,
                                                std::span<const double> a, Method method, double t0,
                                                double tau, std::span<const std::size_t> substep_list,
                                                std::span<const double> reference);

}  // namespace noda
