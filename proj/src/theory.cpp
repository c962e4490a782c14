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
#include "noda/theory.hpp"

#include <algorithm>
#include <cmath>

#include "noda/envs.hpp"
#include "noda/errors.hpp"

namespace noda {
namespace {

Tensor rows_tensor(const std::vector<State>& rows) {
  if (rows.empty()) fail(ErrorKind::contract, "empty row set");
  const std::size_t cols = rows.front().size();
  Tensor out({rows.size(), cols});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) fail(ErrorKind::dimension, "ragged row set");
    std::copy(rows[i].begin(), rows[i].end(), out.row(i).begin());
  }
  return out;
}

std::vector<State> tensor_rows(const Tensor& t) {
  std::vector<State> out(t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) out[i].assign(t.row(i).begin(), t.row(i).end());
  return out;
}

State normalized(const Normalizer& n, const State& s) {
  State out(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) out[j] = (s[j] - n.obs_mean[j]) / n.obs_std[j];
  return out;
}

void consider(LipschitzEstimate& best, double ratio, std::size_t i, std::size_t j, std::size_t a) {
  ++best.pairs;
  if (ratio > best.value) {
    best.value = ratio;
    best.first = i;
    best.second = j;
    best.action = a;
  }
}

void check_map_output(const Tensor& out, std::size_t rows) {
  if (out.rank() != 2 || out.rows() != rows) fail(ErrorKind::dimension, "map returned the wrong number of rows");
}

// Every quantity below is computed once and reused, so the inequality checks
// compare the very numbers the constants were estimated from.
struct Traces {
  std::size_t n = 0;
  // [rollout][k], raw units
  std::vector<std::vector<State>> env, model;
  std::vector<std::vector<State>> model_on_env;  // T_model(env_k, a_k), k < n
  std::vector<std::vector<State>> env_on_model;  // T(model_k, a_k), k < n
  // normalized copies
  std::vector<std::vector<State>> env_n, model_n, model_on_env_n, env_on_model_n;
  std::vector<std::vector<double>> delta;  // [rollout][k], k = 0..n
};

Traces run_traces(const ObservationDynamics& env, const ObservationDynamics& model, const Normalizer& norm,
                  const RolloutSet& set) {
  const std::size_t m = set.starts.size();
  if (m == 0 || set.actions.size() != m) fail(ErrorKind::contract, "rollout set is empty or inconsistent");
  Traces tr;
  tr.n = set.actions.front().size();
  if (tr.n == 0) fail(ErrorKind::contract, "rollouts need at least one action");
  for (const auto& seq : set.actions)
    if (seq.size() != tr.n) fail(ErrorKind::contract, "rollouts must share one length");
  tr.env.assign(m, {});
  tr.model.assign(m, {});
  tr.model_on_env.assign(m, {});
  tr.env_on_model.assign(m, {});
  for (std::size_t r = 0; r < m; ++r) {
    tr.env[r].push_back(set.starts[r]);
    tr.model[r].push_back(set.starts[r]);
  }
  for (std::size_t k = 0; k < tr.n; ++k) {
    std::vector<State> both, acts;
    for (std::size_t r = 0; r < m; ++r) both.push_back(tr.env[r][k]);
    for (std::size_t r = 0; r < m; ++r) both.push_back(tr.model[r][k]);
    for (int twice = 0; twice < 2; ++twice)
      for (std::size_t r = 0; r < m; ++r) acts.push_back(set.actions[r][k]);
    const Tensor s = rows_tensor(both), a = rows_tensor(acts);
    const std::vector<State> env_next = tensor_rows(env.step(s, a).next_states);
    const std::vector<State> model_next = tensor_rows(model.step(s, a).next_states);
    for (std::size_t r = 0; r < m; ++r) {
      tr.env[r].push_back(env_next[r]);
      tr.env_on_model[r].push_back(env_next[m + r]);
      tr.model_on_env[r].push_back(model_next[r]);
      tr.model[r].push_back(model_next[m + r]);
    }
  }
  auto norm_all = [&](const std::vector<std::vector<State>>& src) {
    std::vector<std::vector<State>> out(src.size());
    for (std::size_t r = 0; r < src.size(); ++r)
      for (const auto& s : src[r]) out[r].push_back(normalized(norm, s));
    return out;
  };
  tr.env_n = norm_all(tr.env);
  tr.model_n = norm_all(tr.model);
  tr.model_on_env_n = norm_all(tr.model_on_env);
  tr.env_on_model_n = norm_all(tr.env_on_model);
  tr.delta.assign(m, {});
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t k = 0; k <= tr.n; ++k)
      tr.delta[r].push_back(wasserstein_point(tr.env_n[r][k], tr.model_n[r][k]));
  return tr;
}

BatchMap normalized_map(const ObservationDynamics& dynamics, const Normalizer& norm) {
  return [&dynamics, &norm](const Tensor& s, const Tensor& a) {
    return norm.normalize_obs(dynamics.step(norm.denormalize_obs(s), a).next_states);
  };
}

BoundReport apply_bounds(const Traces& tr, const RolloutSet& set, const RewardFunction& reward,
                         const BoundConstants& c, const BoundConfig& cfg) {
  BoundReport report;
  report.constants = c;
  report.gamma = cfg.gamma;
  const std::size_t m = tr.env.size();
  const double up = 1.0 + cfg.slack;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t k = 0; k < tr.n; ++k) {
      ++report.recursive_checks;
      if (tr.delta[r][k + 1] > (c.delta + c.k_bar * tr.delta[r][k]) * up) ++report.recursive_violations;
    }
    for (std::size_t k = 1; k <= tr.n; ++k)
      if (tr.delta[r][k] > transition_bound(c.delta, c.k_bar, k) * up) ++report.closed_form_violations;
  }
  double previous_max = 0.0;
  for (std::size_t k = 1; k <= tr.n; ++k) {
    BoundRow row;
    row.n = k;
    for (std::size_t r = 0; r < m; ++r) {
      row.delta_measured = std::max(row.delta_measured, tr.delta[r][k]);
      row.delta_mean += tr.delta[r][k] / static_cast<double>(m);
    }
    row.bound_closed_form = transition_bound(c.delta, c.k_bar, k);
    row.bound_recursive = c.delta + c.k_bar * previous_max;
    row.margin = row.bound_closed_form - row.delta_measured;
    previous_max = row.delta_measured;
    report.rows.push_back(row);
  }
  report.vacuous = !(cfg.gamma * c.k_bar < 1.0);
  if (!report.vacuous) {
    report.value_bound = value_bound(cfg.gamma, c.k_reward, c.delta, c.k_bar);
    for (std::size_t r = 0; r < m; ++r) {
      double v_env = 0.0, v_model = 0.0, discount = 1.0;
      for (std::size_t k = 0; k < tr.n; ++k) {
        v_env += discount * reward(tr.env[r][k], set.actions[r][k]);
        v_model += discount * reward(tr.model[r][k], set.actions[r][k]);
        discount *= cfg.gamma;
      }
      const double gap = std::abs(v_env - v_model);
      report.value_gaps.push_back(gap);
      if (gap > report.value_bound * up) ++report.value_violations;
    }
  }
  return report;
}

}  // namespace

BatchMap next_state_map(const ObservationDynamics& dynamics) {
  return [&dynamics](const Tensor& s, const Tensor& a) { return dynamics.step(s, a).next_states; };
}

BatchMap reward_map(const ObservationDynamics& dynamics) {
  return [&dynamics](const Tensor& s, const Tensor& a) { return dynamics.step(s, a).rewards; };
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    fail(ErrorKind::dimension, "distance between states of length " + std::to_string(a.size()) + " and " +
                                   std::to_string(b.size()));
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sum);
}

double wasserstein_point(std::span<const double> a, std::span<const double> b) {
  return euclidean_distance(a, b);
}

LipschitzEstimate estimate_lipschitz(const BatchMap& map, const Tensor& states, const Tensor& actions,
                                     double min_sep) {
  const std::size_t n = states.rows();
  if (states.rank() != 2 || n < 2) fail(ErrorKind::contract, "Lipschitz estimate needs at least two states");
  if (actions.rank() != 2 || actions.rows() == 0) fail(ErrorKind::contract, "Lipschitz estimate needs actions");
  if (!(min_sep > 0.0)) fail(ErrorKind::contract, "min_sep must be positive");
  LipschitzEstimate best;
  for (std::size_t ai = 0; ai < actions.rows(); ++ai) {
    Tensor a({n, actions.cols()});
    for (std::size_t i = 0; i < n; ++i) std::copy(actions.row(ai).begin(), actions.row(ai).end(), a.row(i).begin());
    const Tensor out = map(states, a);
    check_map_output(out, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d_in = euclidean_distance(states.row(i), states.row(j));
        if (d_in < min_sep) continue;
        consider(best, euclidean_distance(out.row(i), out.row(j)) / d_in, i, j, ai);
      }
    }
  }
  if (best.pairs == 0) fail(ErrorKind::insufficient_spread, "every state pair is closer than min_sep");
  return best;
}

LipschitzEstimate estimate_lipschitz_pairs(const BatchMap& map, const Tensor& first, const Tensor& second,
                                           const Tensor& actions, double min_sep) {
  const std::size_t n = first.rows();
  if (first.rank() != 2 || second.shape() != first.shape() || actions.rank() != 2 || actions.rows() != n || n == 0)
    fail(ErrorKind::dimension, "pair sets must be equally shaped and non-empty");
  if (!(min_sep > 0.0)) fail(ErrorKind::contract, "min_sep must be positive");
  const Tensor out1 = map(first, actions);
  const Tensor out2 = map(second, actions);
  check_map_output(out1, n);
  check_map_output(out2, n);
  LipschitzEstimate best;
  for (std::size_t i = 0; i < n; ++i) {
    const double d_in = euclidean_distance(first.row(i), second.row(i));
    if (d_in < min_sep) continue;
    consider(best, euclidean_distance(out1.row(i), out2.row(i)) / d_in, i, i, i);
  }
  if (best.pairs == 0) fail(ErrorKind::insufficient_spread, "every state pair is closer than min_sep");
  return best;
}

LipschitzEstimate estimate_reward_lipschitz(const BatchMap& reward, const Tensor& states, const Tensor& actions,
                                            double min_sep) {
  const BatchMap scalar = [&reward](const Tensor& s, const Tensor& a) {
    const Tensor r = reward(s, a);
    if (r.rank() != 2 || r.cols() != 1) fail(ErrorKind::dimension, "reward map must return [N, 1]");
    return r;
  };
  return estimate_lipschitz(scalar, states, actions, min_sep);
}

DeltaTrace measure_delta_n(const ObservationDynamics& env, const ObservationDynamics& model, const State& s0,
                           const std::vector<State>& actions) {
  if (actions.empty()) fail(ErrorKind::contract, "measure_delta_n needs at least one action");
  if (s0.size() != env.obs_dim() || s0.size() != model.obs_dim())
    fail(ErrorKind::dimension, "start state does not match the dynamics");
  DeltaTrace out;
  out.env_states.push_back(s0);
  out.model_states.push_back(s0);
  out.delta.push_back(0.0);
  for (const State& a : actions) {
    const Tensor at({1, a.size()}, a);
    const Tensor e = env.step(Tensor({1, s0.size()}, out.env_states.back()), at).next_states;
    const Tensor m = model.step(Tensor({1, s0.size()}, out.model_states.back()), at).next_states;
    out.env_states.push_back(e.values());
    out.model_states.push_back(m.values());
    out.delta.push_back(wasserstein_point(e.data(), m.data()));
  }
  return out;
}

double estimate_delta(const ObservationDynamics& env, const ObservationDynamics& model, const Tensor& states,
                      const Tensor& actions) {
  if (states.rank() != 2 || states.rows() == 0) fail(ErrorKind::contract, "estimate_delta needs states");
  const Tensor e = env.step(states, actions).next_states;
  const Tensor m = model.step(states, actions).next_states;
  double best = 0.0;
  for (std::size_t i = 0; i < states.rows(); ++i) best = std::max(best, wasserstein_point(e.row(i), m.row(i)));
  return best;
}

double transition_bound(double delta, double k_bar, std::size_t n) {
  if (n == 0) fail(ErrorKind::contract, "transition bound needs n >= 1");
  if (!(delta >= 0.0) || !(k_bar >= 0.0)) fail(ErrorKind::contract, "Delta and K must be non-negative");
  const double nd = static_cast<double>(n);
  const double km1 = k_bar - 1.0;
  if (std::abs(km1) <= 1e-12) return nd * delta;
  // (K^n - 1) / (K - 1), written to stay accurate for K close to 1.
  return delta * std::expm1(nd * std::log1p(km1)) / km1;
}

double value_bound(double gamma, double k_reward, double delta, double k_bar) {
  if (!(gamma >= 0.0 && gamma < 1.0)) fail(ErrorKind::contract, "gamma must lie in [0, 1)");
  if (!(gamma * k_bar < 1.0)) return std::numeric_limits<double>::infinity();
  return gamma * k_reward * delta / ((1.0 - gamma) * (1.0 - gamma * k_bar));
}

ValueEstimate estimate_value(const ObservationDynamics& dynamics, const RewardFunction& reward, const State& s0,
                             const std::vector<State>& actions, double gamma, double reward_bound) {
  if (!(gamma >= 0.0 && gamma < 1.0)) fail(ErrorKind::contract, "gamma must lie in [0, 1)");
  if (actions.empty()) fail(ErrorKind::contract, "estimate_value needs at least one action");
  ValueEstimate out;
  State s = s0;
  double discount = 1.0;
  for (std::size_t k = 0; k < actions.size(); ++k) {
    out.value += discount * reward(s, actions[k]);
    if (k + 1 < actions.size()) {
      const Tensor next = dynamics
                              .step(Tensor({1, s.size()}, s), Tensor({1, actions[k].size()}, actions[k]))
                              .next_states;
      s = next.values();
    }
    discount *= gamma;
  }
  out.tail_bound = discount * std::abs(reward_bound) / (1.0 - gamma);
  return out;
}

void BoundConfig::validate() const {
  if (rollouts == 0 || n_max == 0) fail(ErrorKind::contract, "rollouts and n_max must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) fail(ErrorKind::contract, "gamma must lie in [0, 1)");
  if (!(min_sep > 0.0)) fail(ErrorKind::contract, "min_sep must be positive");
  if (!(slack >= 0.0)) fail(ErrorKind::contract, "slack must be non-negative");
}

RolloutSet sample_rollouts(const Environment& env, std::size_t count, std::size_t n, std::uint64_t seed) {
  std::unique_ptr<Environment> local = env.clone();
  Rng reset_rng = make_rng(seed, "bounds.reset");
  Rng action_rng = make_rng(seed, "bounds.action");
  RolloutSet set;
  for (std::size_t r = 0; r < count; ++r) {
    set.starts.push_back(local->reset(reset_rng).observation);
    std::vector<State> seq;
    for (std::size_t k = 0; k < n; ++k) seq.push_back(local->sample_action(action_rng));
    set.actions.push_back(std::move(seq));
  }
  return set;
}

BoundReport verify_bounds(const ObservationDynamics& env, const ObservationDynamics& model,
                          const Normalizer& normalizer, const RewardFunction& reward, const RolloutSet& rollouts,
                          const BoundConfig& cfg) {
  cfg.validate();
  const Traces tr = run_traces(env, model, normalizer, rollouts);
  const std::size_t m = tr.env.size();
  BoundConstants c;

  // One-step error at every visited state of either rollout, and the
  // Lipschitz ratios of the (env state, model state) pairs themselves.
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t k = 0; k < tr.n; ++k) {
      c.delta = std::max(c.delta, wasserstein_point(tr.env_n[r][k + 1], tr.model_on_env_n[r][k]));
      c.delta = std::max(c.delta, wasserstein_point(tr.env_on_model_n[r][k], tr.model_n[r][k + 1]));
      const double d = tr.delta[r][k];
      if (d > 0.0) {
        c.k_env = std::max(c.k_env, wasserstein_point(tr.env_n[r][k + 1], tr.env_on_model_n[r][k]) / d);
        c.k_model = std::max(c.k_model, wasserstein_point(tr.model_on_env_n[r][k], tr.model_n[r][k + 1]) / d);
        const double dr = std::abs(reward(tr.env[r][k], rollouts.actions[r][k]) -
                                   reward(tr.model[r][k], rollouts.actions[r][k]));
        c.k_reward = std::max(c.k_reward, dr / d);
      }
    }
  }

  // Random pairs from the visited set widen the constants beyond the rollout pairs.
  if (cfg.lipschitz_pairs > 0) {
    std::vector<State> visited, visited_actions;
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t k = 0; k < tr.n; ++k) {
        visited.push_back(tr.env_n[r][k]);
        visited.push_back(tr.model_n[r][k]);
        visited_actions.push_back(rollouts.actions[r][k]);
      }
    }
    Rng rng = make_rng(cfg.seed, "bounds.pairs");
    std::vector<State> first, second, acts;
    for (std::size_t p = 0; p < cfg.lipschitz_pairs; ++p) {
      first.push_back(visited[uniform_index(rng, visited.size())]);
      second.push_back(visited[uniform_index(rng, visited.size())]);
      acts.push_back(visited_actions[uniform_index(rng, visited_actions.size())]);
    }
    const Tensor f = rows_tensor(first), s = rows_tensor(second), a = rows_tensor(acts);
    const BatchMap reward_batch = [&](const Tensor& states, const Tensor& actions) {
      const Tensor raw = normalizer.denormalize_obs(states);
      Tensor out({states.rows(), 1});
      for (std::size_t i = 0; i < states.rows(); ++i) out[i] = reward(raw.row(i), actions.row(i));
      return out;
    };
    try {
      c.k_env = std::max(c.k_env, estimate_lipschitz_pairs(normalized_map(env, normalizer), f, s, a, cfg.min_sep).value);
      c.k_model =
          std::max(c.k_model, estimate_lipschitz_pairs(normalized_map(model, normalizer), f, s, a, cfg.min_sep).value);
      c.k_reward = std::max(c.k_reward, estimate_lipschitz_pairs(reward_batch, f, s, a, cfg.min_sep).value);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::insufficient_spread) throw;
      bool any_pair = false;
      for (const auto& row : tr.delta)
        for (double d : row) any_pair = any_pair || d > 0.0;
      if (!any_pair) throw;
    }
  }
  c.k_bar = std::min(c.k_env, c.k_model);
  return apply_bounds(tr, rollouts, reward, c, cfg);
}

BoundReport check_bounds(const ObservationDynamics& env, const ObservationDynamics& model,
                         const Normalizer& normalizer, const RewardFunction& reward, const RolloutSet& rollouts,
                         const BoundConstants& constants, const BoundConfig& cfg) {
  cfg.validate();
  return apply_bounds(run_traces(env, model, normalizer, rollouts), rollouts, reward, constants, cfg);
}

}  // namespace noda
