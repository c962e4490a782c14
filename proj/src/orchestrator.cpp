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
#include "noda/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "noda/errors.hpp"

namespace noda {
namespace {

Transition record_at(const TransitionBatch& data, std::size_t i) {
  Transition t;
  t.s.assign(data.s.row(i).begin(), data.s.row(i).end());
  t.a.assign(data.a.row(i).begin(), data.a.row(i).end());
  t.s2.assign(data.s2.row(i).begin(), data.s2.row(i).end());
  t.r = data.r[i];
  t.done = data.done[i] != 0.0;
  return t;
}

std::size_t imaginary_updates(const TrainConfig& cfg, std::size_t t) {
  const double half = static_cast<double>(cfg.n4) / 2.0;
  const double hi = static_cast<double>(cfg.imag_updates_max), lo = static_cast<double>(cfg.imag_updates_min);
  if (static_cast<double>(t) <= half) return cfg.imag_updates_max;
  const double frac = std::min(1.0, (static_cast<double>(t) - half) / half);
  return static_cast<std::size_t>(std::lround(hi + (lo - hi) * frac));
}

}  // namespace

WorldModelChoice parse_world_model(const std::string& name) {
  if (name == "noda") return WorldModelChoice::noda;
  if (name == "ae") return WorldModelChoice::ae;
  if (name == "none") return WorldModelChoice::none;
  fail(ErrorKind::contract, "unknown world model '" + name + "' (expected noda, ae or none)");
}

const char* to_string(WorldModelChoice choice) {
  switch (choice) {
    case WorldModelChoice::noda: return "noda";
    case WorldModelChoice::ae: return "ae";
    case WorldModelChoice::none: return "none";
  }
  return "?";
}

EnvDefaults env_defaults(const std::string& env) {
  if (env == "pendulum") return {4, 32};
  if (env == "spring") return {4, 64};
  fail(ErrorKind::contract, "unknown environment '" + env + "'");
}

WorldModelConfig model_config_for(const Environment& env, std::size_t latent_dim, std::size_t hidden_width) {
  WorldModelConfig cfg;
  cfg.obs_dim = env.obs_dim();
  cfg.action_dim = env.action_dim();
  cfg.latent_dim = latent_dim;
  cfg.hidden_width = hidden_width;
  cfg.integrator.tau = env.dt();
  cfg.integrator.t0 = 0.0;
  return cfg;
}

void TrainConfig::validate() const {
  if (n4 == 0 || n1 == 0) fail(ErrorKind::contract, "n1 and n4 must be positive");
  if (n1 > n4) fail(ErrorKind::contract, "warmup n1 must not exceed the step budget n4");
  if (n2 == 0 || n3 == 0 || b1 < 2 || b2 == 0 || model_batch == 0 || block == 0)
    fail(ErrorKind::contract, "n2, n3, b2, model_batch and block must be positive and b1 >= 2");
  if (eval_interval == 0 || eval_episodes == 0 || horizon == 0)
    fail(ErrorKind::contract, "evaluation settings must be positive");
  if (imag_updates_min > imag_updates_max) fail(ErrorKind::contract, "imag_updates_min exceeds imag_updates_max");
  if (!(imag_mix_ratio >= 0.0 && imag_mix_ratio <= 1.0)) fail(ErrorKind::contract, "imag_mix_ratio must lie in [0, 1]");
  LossWeights{mu}.validate();
  if (!(lr_model > 0.0)) fail(ErrorKind::contract, "lr_model must be positive");
}

std::optional<std::size_t> RunMetrics::steps_to(double threshold) const {
  for (const auto& row : rows)
    if (row.eval_return_mean >= threshold) return row.env_steps;
  return std::nullopt;
}

TransitionBatch sample_rows(const TransitionBatch& data, std::size_t n, Rng& rng) {
  if (data.size() == 0) fail(ErrorKind::contract, "cannot sample from an empty dataset");
  std::vector<Transition> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) rows.push_back(record_at(data, uniform_index(rng, data.size())));
  return stack(rows);
}

ImaginaryStats generate_imaginary(const SacAgent& agent, const ObservationDynamics& model, const ReplayBuffer& real,
                                  ReplayBuffer& imaginary, std::size_t b2, std::size_t n3, Rng& replay_rng,
                                  Rng& policy_rng) {
  if (real.size() < b2) fail(ErrorKind::contract, "real buffer holds fewer records than B2");
  if (b2 == 0 || n3 == 0) fail(ErrorKind::contract, "B2 and N3 must be positive");
  const std::vector<Transition> starts = real.sample(b2, replay_rng);
  const std::size_t l = model.obs_dim(), m = model.action_dim();
  std::vector<std::vector<Transition>> rollouts(b2);
  std::vector<std::size_t> alive(b2);
  for (std::size_t i = 0; i < b2; ++i) alive[i] = i;
  Tensor s({b2, l}), a({b2, m});
  for (std::size_t i = 0; i < b2; ++i) {
    std::copy(starts[i].s.begin(), starts[i].s.end(), s.row(i).begin());
    std::copy(starts[i].a.begin(), starts[i].a.end(), a.row(i).begin());
  }
  ImaginaryStats stats;
  for (std::size_t k = 0; k < n3 && !alive.empty(); ++k) {
    StepBatch next;
    std::vector<bool> ok(alive.size(), true);
    try {
      next = model.step(s, a);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::divergence && e.kind() != ErrorKind::domain) throw;
      // Retry row by row so one diverging rollout does not take the rest down.
      next = StepBatch{Tensor({alive.size(), l}), Tensor({alive.size(), 1})};
      for (std::size_t i = 0; i < alive.size(); ++i) {
        try {
          const StepBatch one = model.step(Tensor({1, l}, std::vector<double>(s.row(i).begin(), s.row(i).end())),
                                           Tensor({1, m}, std::vector<double>(a.row(i).begin(), a.row(i).end())));
          std::copy(one.next_states.data().begin(), one.next_states.data().end(), next.next_states.row(i).begin());
          next.rewards[i] = one.rewards[0];
        } catch (const Error& inner) {
          if (inner.kind() != ErrorKind::divergence && inner.kind() != ErrorKind::domain) throw;
          ok[i] = false;
        }
      }
    }
    std::vector<std::size_t> still;
    std::vector<double> s_next, a_keep;
    for (std::size_t i = 0; i < alive.size(); ++i) {
      if (!ok[i]) {
        ++stats.dropped;
        continue;
      }
      Transition t;
      t.s.assign(s.row(i).begin(), s.row(i).end());
      t.a.assign(a.row(i).begin(), a.row(i).end());
      t.s2.assign(next.next_states.row(i).begin(), next.next_states.row(i).end());
      t.r = next.rewards[i];
      t.done = false;
      rollouts[alive[i]].push_back(t);
      still.push_back(alive[i]);
      s_next.insert(s_next.end(), t.s2.begin(), t.s2.end());
    }
    alive = std::move(still);
    if (alive.empty() || k + 1 == n3) break;
    s = Tensor({alive.size(), l}, std::move(s_next));
    a = agent.act_batch(s, false, policy_rng);
  }
  for (auto& rollout : rollouts) {
    for (auto& t : rollout) {
      imaginary.push(std::move(t));
      ++stats.appended;
    }
  }
  return stats;
}

RunResult run_noda_sac(const TrainConfig& cfg, const std::function<void(const MetricsRow&)>& on_row) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  std::unique_ptr<Environment> env = make_environment(cfg.env, cfg.seed);
  std::unique_ptr<Environment> eval_env = env->clone();

  SacConfig agent_cfg = cfg.agent;
  agent_cfg.obs_dim = env->obs_dim();
  agent_cfg.action_dim = env->action_dim();
  agent_cfg.action_bound = env->action_bound();
  RunResult result;
  result.agent = std::make_unique<SacAgent>(agent_cfg, cfg.seed);
  SacAgent& agent = *result.agent;

  const EnvDefaults defaults = env_defaults(cfg.env);
  std::optional<AdamState> model_opt;
  TransitionBatch model_test;
  if (cfg.world_model != WorldModelChoice::none) {
    WorldModelConfig mc = model_config_for(*env, cfg.latent_dim ? cfg.latent_dim : defaults.latent_dim,
                                           cfg.hidden_width ? cfg.hidden_width : defaults.hidden_width);
    mc.integrator.method = cfg.integrator.method;
    mc.integrator.substeps = cfg.integrator.substeps;
    if (cfg.integrator.tau > 0.0) mc.integrator.tau = cfg.integrator.tau;
    const WorldModel noda(mc, cfg.seed);
    result.model = std::make_unique<WorldModel>(cfg.world_model == WorldModelChoice::ae
                                                    ? WorldModel::matched_ae(noda, cfg.seed)
                                                    : noda);
    AdamConfig adam;
    adam.lr = cfg.lr_model;
    model_opt = make_adam(result.model->params(), adam);
    std::unique_ptr<Environment> probe = env->clone();
    model_test = stack(collect_random(*probe, cfg.model_test_size, cfg.horizon, derive_seed(cfg.seed, "model.test")));
  }

  Rng reset_rng = make_rng(cfg.seed, "reset");
  Rng action_rng = make_rng(cfg.seed, "action");
  Rng policy_rng = make_rng(cfg.seed, "policy");
  Rng agent_replay_rng = make_rng(cfg.seed, "replay.agent");
  Rng model_replay_rng = make_rng(cfg.seed, "replay.model");
  Rng imag_rng = make_rng(cfg.seed, "replay.imaginary");
  const std::uint64_t eval_seed = derive_seed(cfg.seed, "eval");

  ReplayBuffer real(1000000), imaginary(100000);
  const LossWeights weights{cfg.mu};
  double model_loss = std::numeric_limits<double>::quiet_NaN();

  auto evaluate = [&](std::size_t t) {
    MetricsRow row;
    row.env_steps = t;
    const PolicyScore score = evaluate_policy(agent, *eval_env, cfg.eval_episodes, cfg.horizon, eval_seed);
    row.eval_return_mean = score.mean;
    row.eval_return_std = score.std;
    if (result.model) {
      row.model_test_mse = result.model->one_step_mse(model_test);
      row.model_loss = model_loss;
    }
    if (cfg.wall_clock)
      row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.metrics.rows.push_back(row);
    if (on_row) on_row(row);
  };

  std::vector<double> s = env->reset(reset_rng).observation;
  std::size_t episode_t = 0;
  for (std::size_t t = 1; t <= cfg.n4; ++t) {
    const std::vector<double> a = t <= cfg.n1 ? env->sample_action(action_rng) : agent.act(s, false, policy_rng);
    const StepResult step = env->step(a);
    real.push({s, a, step.state.observation, step.reward, step.done});
    s = step.state.observation;
    if (++episode_t == cfg.horizon || step.done) {
      s = env->reset(reset_rng).observation;
      episode_t = 0;
    }
    result.env_steps = t;

    if (t == cfg.n1 && result.model) {
      std::vector<Transition> all;
      for (std::size_t i = 0; i < real.size(); ++i) all.push_back(real.at(i));
      result.model->set_normalizer(Normalizer::fit(stack(all), env->action_bound()));
    }
    if (t > cfg.n1 && t % cfg.block == 0) {
      for (std::size_t u = 0; u < cfg.block; ++u) agent.update(stack(real.sample(cfg.b1, agent_replay_rng)), policy_rng);
      if (result.model) {
        double sum = 0.0;
        for (std::size_t u = 0; u < cfg.block; ++u)
          sum += train_step(*result.model, stack(real.sample(cfg.model_batch, model_replay_rng)), *model_opt, weights);
        model_loss = sum / static_cast<double>(cfg.block);
      }
    }
    if (result.model && t > cfg.n1 && t % cfg.n2 == 0 && real.size() >= cfg.b2) {
      const ImaginaryStats stats =
          generate_imaginary(agent, *result.model, real, imaginary, cfg.b2, cfg.n3, imag_rng, policy_rng);
      result.imaginary_transitions += stats.appended;
      result.dropped_rollouts += stats.dropped;
      const std::size_t updates = imaginary_updates(cfg, t);
      const std::size_t from_imag =
          imaginary.empty() ? 0 : static_cast<std::size_t>(std::lround(cfg.imag_mix_ratio * static_cast<double>(cfg.b1)));
      for (std::size_t u = 0; u < updates; ++u) {
        std::vector<Transition> batch = real.sample(cfg.b1 - from_imag, imag_rng);
        if (from_imag > 0) {
          std::vector<Transition> extra = imaginary.sample(from_imag, imag_rng);
          batch.insert(batch.end(), std::make_move_iterator(extra.begin()), std::make_move_iterator(extra.end()));
        }
        agent.update(stack(batch), policy_rng);
      }
    }
    if (t % cfg.eval_interval == 0 || t == cfg.n4) {
      evaluate(t);
      if (result.metrics.rows.back().eval_return_mean >= cfg.stop_return) break;
    }
  }
  result.real_transitions = real.size();
  return result;
}

ModelTrainingResult run_model_training(const TransitionBatch& train, const TransitionBatch& test,
                                       const ModelTrainingConfig& cfg) {
  if (train.size() == 0 || test.size() == 0) fail(ErrorKind::contract, "model training needs train and test data");
  if (cfg.batch_size == 0 || cfg.test_every == 0) fail(ErrorKind::contract, "batch size and test interval must be positive");
  cfg.weights.validate();
  ModelTrainingResult out;
  const WorldModel noda(cfg.model, cfg.seed);
  out.model = std::make_unique<WorldModel>(cfg.kind == ModelKind::ae ? WorldModel::matched_ae(noda, cfg.seed) : noda);
  WorldModel& model = *out.model;
  model.set_normalizer(Normalizer::fit(train, cfg.action_scale));
  if (cfg.init_params != nullptr) transfer_load(model, *cfg.init_params, cfg.init_parts);
  AdamConfig adam;
  adam.lr = cfg.lr;
  AdamState opt = make_adam(model.params(), adam);
  Rng rng = make_rng(cfg.seed, "model.batches");
  for (std::size_t b = 1; b <= cfg.batches; ++b) {
    out.train_loss.push_back(train_step(model, sample_rows(train, cfg.batch_size, rng), opt, cfg.weights));
    if (b % cfg.test_every == 0 || b == cfg.batches) out.test_loss.push_back({b, model.evaluate_loss(test, cfg.weights)});
  }
  if (cfg.batches > 0) out.final_test_mse = model.one_step_mse(test);
  return out;
}

std::vector<SweepRow> sweep_latent_dim(const TransitionBatch& train, const TransitionBatch& test,
                                       const std::vector<std::size_t>& dims, const ModelTrainingConfig& base) {
  if (dims.empty()) fail(ErrorKind::contract, "latent sweep needs at least one dimension");
  std::vector<SweepRow> rows;
  for (std::size_t dim : dims) {
    ModelTrainingConfig cfg = base;
    cfg.model.latent_dim = dim;
    cfg.init_params = nullptr;
    const ModelTrainingResult run = run_model_training(train, test, cfg);
    const double final_loss =
        run.test_loss.empty() ? run.model->evaluate_loss(test, cfg.weights) : run.test_loss.back().loss;
    rows.push_back({dim, final_loss});
  }
  return rows;
}

std::optional<std::size_t> TransferResult::batches_to_match() const {
  if (scratch.empty()) return std::nullopt;
  const double target = scratch.back().loss;
  for (const auto& p : transfer)
    if (p.loss <= target) return p.batch;
  return std::nullopt;
}

TransferResult run_transfer(const TransitionBatch& pretrain_train, const TransitionBatch& finetune_train,
                            const TransitionBatch& finetune_test, const WorldModelConfig& pretrain_model,
                            std::size_t pretrain_batches, const ModelTrainingConfig& finetune,
                            const std::set<ModelPart>& parts) {
  ModelTrainingConfig pre = finetune;
  pre.model = pretrain_model;
  pre.batches = pretrain_batches;
  pre.init_params = nullptr;
  pre.test_every = std::max<std::size_t>(pretrain_batches, 1);
  const ModelTrainingResult pretrained = run_model_training(pretrain_train, pretrain_train, pre);

  ModelTrainingConfig scratch = finetune;
  scratch.init_params = nullptr;
  ModelTrainingConfig warm = finetune;
  warm.init_params = &pretrained.model->params();
  warm.init_parts = parts;

  TransferResult out;
  out.scratch = run_model_training(finetune_train, finetune_test, scratch).test_loss;
  out.transfer = run_model_training(finetune_train, finetune_test, warm).test_loss;
  return out;
}

}  // namespace noda
