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
#include "noda/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "noda/errors.hpp"

namespace noda {
namespace {

constexpr double kLogStdMin = -20.0;
constexpr double kLogStdMax = 2.0;

Tensor normal_noise(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor out({rows, cols});
  for (double& x : out.data()) x = standard_normal(rng);
  return out;
}

}  // namespace

// --- ReplayBuffer ---------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) fail(ErrorKind::contract, "replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (records_.size() < capacity_) {
    records_.push_back(std::move(t));
  } else {
    records_[cursor_] = std::move(t);
  }
  cursor_ = (cursor_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) fail(ErrorKind::contract, "replay index out of range");
  const std::size_t oldest = size_ < capacity_ ? 0 : cursor_;
  return records_[(oldest + i) % capacity_];
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (size_ == 0) fail(ErrorKind::contract, "cannot sample from an empty replay buffer");
  std::vector<Transition> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(records_[uniform_index(rng, size_)]);
  return out;
}

void ReplayBuffer::clear() {
  records_.clear();
  size_ = 0;
  cursor_ = 0;
}

// --- SacAgent -------------------------------------------------------------

void SacConfig::validate() const {
  if (obs_dim == 0 || action_dim == 0 || hidden_width == 0)
    fail(ErrorKind::contract, "agent dimensions must be positive");
  if (!(action_bound > 0.0)) fail(ErrorKind::contract, "action bound must be positive");
  if (!(lr > 0.0)) fail(ErrorKind::contract, "agent learning rate must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) fail(ErrorKind::contract, "gamma must lie in [0, 1)");
  if (!(alpha >= 0.0)) fail(ErrorKind::contract, "alpha must be non-negative");
  if (!(rho >= 0.0 && rho <= 1.0)) fail(ErrorKind::contract, "rho must lie in [0, 1]");
}

SacAgent::SacAgent(SacConfig config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const std::size_t l = config_.obs_dim, m = config_.action_dim, w = config_.hidden_width;
  actor_ = Mlp("actor", l, {w, w}, 2 * m);
  q1_ = Mlp("q1", l + m, {w, w}, 1);
  q2_ = Mlp("q2", l + m, {w, w}, 1);
  target_q1_ = Mlp("target.q1", l + m, {w, w}, 1);
  target_q2_ = Mlp("target.q2", l + m, {w, w}, 1);
  Rng rng = make_rng(seed, "agent");
  actor_.init(actor_params_, rng);
  q1_.init(critic_params_, rng);
  q2_.init(critic_params_, rng);
  for (const auto& [name, value] : critic_params_) target_params_.emplace("target." + name, value);
  AdamConfig adam;
  adam.lr = config_.lr;
  actor_opt_ = make_adam(actor_params_, adam);
  critic_opt_ = make_adam(critic_params_, adam);
}

SacAgent::Sample SacAgent::sample_action(Tape& tape, const ParamSet& actor, Var states,
                                         const Tensor& noise) const {
  const std::size_t m = config_.action_dim;
  const Var out = actor_.forward(tape, actor, states);
  const Var mean = slice(out, 0, m);
  const Var log_std = clip(slice(out, m, 2 * m), kLogStdMin, kLogStdMax);
  const Var eps = tape.constant(noise);
  const Var pre = add(mean, mul(exp(log_std), eps));
  const Var action = tanh(pre);
  // log N(pre; mean, std) minus log |d tanh / d pre|, the latter written as
  // 2 (log 2 - pre - softplus(-2 pre)) for numerical stability.
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  const Var gaussian = sub(scale(square(eps), -0.5), shift(log_std, half_log_2pi));
  const Var jacobian = scale(sub(shift(scale(pre, -1.0), std::numbers::ln2), softplus(scale(pre, -2.0))), 2.0);
  return {action, row_sum(sub(gaussian, jacobian))};
}

Var SacAgent::q_value(Tape& tape, const Mlp& net, const ParamSet& params, Var states, Var unit_actions) const {
  return net.forward(tape, params, concat({states, unit_actions}));
}

Tensor SacAgent::mean_action(const Tensor& states) const {
  Tape tape;
  const Var out = actor_.forward(tape, actor_params_, tape.constant(states));
  Tensor a = tanh(slice(out, 0, config_.action_dim)).value();
  for (double& x : a.data()) x *= config_.action_bound;
  return a;
}

Tensor SacAgent::act_batch(const Tensor& states, bool deterministic, Rng& rng) const {
  if (states.rank() != 2 || states.cols() != config_.obs_dim)
    fail(ErrorKind::dimension, "agent expects states of shape [B," + std::to_string(config_.obs_dim) + "]");
  if (deterministic) return mean_action(states);
  Tape tape;
  const Tensor noise = normal_noise(states.rows(), config_.action_dim, rng);
  Tensor a = sample_action(tape, actor_params_, tape.constant(states), noise).action.value();
  for (double& x : a.data()) x *= config_.action_bound;
  return a;
}

std::vector<double> SacAgent::act(std::span<const double> state, bool deterministic, Rng& rng) const {
  const Tensor a = act_batch(Tensor({1, state.size()}, std::vector<double>(state.begin(), state.end())),
                             deterministic, rng);
  return a.values();
}

std::vector<double> SacAgent::act(std::span<const double> state) const {
  return mean_action(Tensor({1, state.size()}, std::vector<double>(state.begin(), state.end()))).values();
}

Tensor SacAgent::log_prob(const Tensor& states, const Tensor& noise) const {
  Tape tape;
  return sample_action(tape, actor_params_, tape.constant(states), noise).log_prob.value();
}

Tensor SacAgent::critic_target(const TransitionBatch& batch, const Tensor& noise) const {
  Tape tape;
  const Var s2 = tape.constant(batch.s2);
  const Sample next = sample_action(tape, actor_params_, s2, noise);
  const Tensor& q1 = q_value(tape, target_q1_, target_params_, s2, next.action).value();
  const Tensor& q2 = q_value(tape, target_q2_, target_params_, s2, next.action).value();
  const Tensor& logp = next.log_prob.value();
  Tensor y({batch.size(), 1});
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double soft = std::min(q1[i], q2[i]) - config_.alpha * logp[i];
    y[i] = batch.r[i] + config_.gamma * (1.0 - batch.done[i]) * soft;
  }
  return y;
}

SacLosses SacAgent::update(const TransitionBatch& batch, Rng& rng) {
  const std::size_t n = batch.size(), m = config_.action_dim;
  if (n < 2) fail(ErrorKind::contract, "SAC update needs a batch of at least 2");
  SacLosses losses;

  const Tensor target = critic_target(batch, normal_noise(n, m, rng));
  Tensor unit_actions = batch.a;
  for (double& x : unit_actions.data()) x /= config_.action_bound;
  {
    Tape tape;
    const Var s = tape.constant(batch.s);
    const Var a = tape.constant(unit_actions);
    const Var y = tape.constant(target);
    const Var l1 = mean(square(sub(q_value(tape, q1_, critic_params_, s, a), y)));
    const Var l2 = mean(square(sub(q_value(tape, q2_, critic_params_, s, a), y)));
    const Var loss = add(l1, l2);
    losses.critic = loss.value().item();
    adam_step(critic_params_, tape.backward(loss), critic_opt_);
  }
  {
    Tape tape;
    const Var s = tape.constant(batch.s);
    const Sample pi = sample_action(tape, actor_params_, s, normal_noise(n, m, rng));
    const Var q = minimum(q_value(tape, q1_, critic_params_, s, pi.action),
                          q_value(tape, q2_, critic_params_, s, pi.action));
    const Var loss = mean(sub(scale(pi.log_prob, config_.alpha), q));
    losses.actor = loss.value().item();
    adam_step(actor_params_, tape.backward(loss), actor_opt_);
  }
  const double rho = config_.rho;
  for (const auto& [name, online] : critic_params_) {
    Tensor& tgt = target_params_.at("target." + name);
    for (std::size_t i = 0; i < tgt.size(); ++i) tgt[i] = rho * tgt[i] + (1.0 - rho) * online[i];
  }
  return losses;
}

ParamSet SacAgent::snapshot() const {
  ParamSet all = actor_params_;
  all.insert(critic_params_.begin(), critic_params_.end());
  all.insert(target_params_.begin(), target_params_.end());
  return all;
}

void SacAgent::restore(const ParamSet& params) {
  for (ParamSet* set : {&actor_params_, &critic_params_, &target_params_}) {
    for (const auto& [name, value] : *set) {
      auto it = params.find(name);
      if (it == params.end() || it->second.shape() != value.shape())
        fail(ErrorKind::incompatible_checkpoint, "agent parameter '" + name + "' missing or misshapen");
    }
  }
  for (ParamSet* set : {&actor_params_, &critic_params_, &target_params_})
    for (auto& [name, value] : *set) value = params.at(name);
}

PolicyScore evaluate_policy(const SacAgent& agent, Environment& env, std::size_t episodes,
                            std::size_t horizon, std::uint64_t seed) {
  if (episodes == 0) fail(ErrorKind::contract, "evaluation needs at least one episode");
  Rng rng = make_rng(seed, "eval");
  PolicyScore score;
  for (std::size_t e = 0; e < episodes; ++e) {
    env.reset(rng);
    double total = 0.0;
    for (std::size_t t = 0; t < horizon; ++t) {
      const std::vector<double> a = agent.act(env.state().observation);
      total += env.step(a).reward;
    }
    score.returns.push_back(total);
  }
  double sum = 0.0;
  for (double r : score.returns) sum += r;
  score.mean = sum / static_cast<double>(episodes);
  double var = 0.0;
  for (double r : score.returns) var += (r - score.mean) * (r - score.mean);
  score.std = std::sqrt(var / static_cast<double>(episodes));
  return score;
}

}  // namespace noda
