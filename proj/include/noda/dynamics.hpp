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

// Shared vocabulary for anything that maps observation batches to next
// observations: the analytic environments, the learned world models, and the
// oracles used in tests.

#include <cstddef>
#include <vector>

#include "noda/diffcore.hpp"

namespace noda {

// One interaction record {s, a, s2, r, done}.
struct Transition {
  std::vector<double> s;
  std::vector<double> a;
  std::vector<double> s2;
  double r = 0.0;
  bool done = false;
};

// Row-stacked transitions: s/s2 are [B, l], a is [B, m], r and done are [B, 1].
struct TransitionBatch {
  Tensor s;
  Tensor a;
  Tensor s2;
  Tensor r;
  Tensor done;

  std::size_t size() const { return s.rows(); }
};

TransitionBatch stack(const std::vector<Transition>& records);

struct StepBatch {
  Tensor next_states;  // [B, l]
  Tensor rewards;      // [B, 1]
};

class ObservationDynamics {
 public:
  virtual ~ObservationDynamics() = default;
  virtual std::size_t obs_dim() const = 0;
  virtual std::size_t action_dim() const = 0;
  // Deterministic one-step map on observation rows.
  virtual StepBatch step(const Tensor& states, const Tensor& actions) const = 0;
};

}  // namespace noda
