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
#include "noda/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "noda/agent.hpp"
#include "noda/errors.hpp"
#include "noda/orchestrator.hpp"
#include "noda/text.hpp"
#include "noda/theory.hpp"

namespace noda {
namespace {

std::string cell(double v) { return std::isnan(v) ? std::string() : format_double(v); }

std::size_t resolve_size(const Config& cfg, const std::string& key, std::size_t fallback) {
  const std::string& v = cfg.get(key);
  if (v == "auto") return fallback;
  const long long n = parse_int(v);
  if (n <= 0) throw ConfigError(0, "'" + key + "' must be positive or auto");
  return static_cast<std::size_t>(n);
}

std::set<ModelPart> parts_from(const Config& cfg) {
  std::set<ModelPart> parts;
  for (const auto& name : cfg.get_list("parts")) parts.insert(parse_model_part(name));
  return parts;
}

struct Datasets {
  TransitionBatch train;
  TransitionBatch test;
};

Datasets datasets_for(const Config& cfg, Environment& env, std::size_t hold) {
  const std::uint64_t seed = cfg.get_uint("seed");
  const std::size_t horizon = cfg.get_uint("horizon");
  Datasets d;
  if (!cfg.get("dataset").empty()) {
    d.train = stack(load_dataset(cfg.get("dataset")));
  } else {
    d.train = stack(collect_random_multistep(env, cfg.get_uint("train_size"), horizon, hold,
                                             derive_seed(seed, "data.train." + std::to_string(hold))));
  }
  if (!cfg.get("test_dataset").empty()) {
    d.test = stack(load_dataset(cfg.get("test_dataset")));
  } else {
    d.test = stack(collect_random_multistep(env, cfg.get_uint("test_size"), horizon, hold,
                                            derive_seed(seed, "data.test." + std::to_string(hold))));
  }
  return d;
}

ModelTrainingConfig training_config(const Config& cfg, const Environment& env) {
  ModelTrainingConfig t;
  t.model = model_config_from(cfg, env);
  t.kind = parse_model_kind(cfg.get("model_kind"));
  t.batches = cfg.get_uint("batches");
  t.batch_size = cfg.get_uint("model_batch");
  t.lr = cfg.get_double("lr_model");
  t.weights.mu = cfg.get_double("mu");
  t.seed = cfg.get_uint("seed");
  t.action_scale = env.action_bound();
  return t;
}

std::vector<std::vector<std::string>> loss_rows(const ModelTrainingResult& run) {
  std::vector<std::vector<std::string>> rows;
  std::size_t next_test = 0;
  for (std::size_t b = 0; b < run.train_loss.size(); ++b) {
    std::string test;
    if (next_test < run.test_loss.size() && run.test_loss[next_test].batch == b + 1)
      test = format_double(run.test_loss[next_test++].loss);
    rows.push_back({std::to_string(b + 1), format_double(run.train_loss[b]), test});
  }
  return rows;
}

std::string path_in(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void cmd_collect(const Config& cfg, const std::string& out) {
  auto env = make_environment(cfg.get("env"), cfg.get_uint("seed"));
  const std::size_t hold = cfg.get_uint("hold");
  const std::uint64_t seed = cfg.get_uint("seed");
  const std::size_t horizon = cfg.get_uint("horizon");
  save_dataset(path_in(out, "train.bin"),
               collect_random_multistep(*env, cfg.get_uint("train_size"), horizon, hold,
                                        derive_seed(seed, "data.train." + std::to_string(hold))));
  save_dataset(path_in(out, "test.bin"),
               collect_random_multistep(*env, cfg.get_uint("test_size"), horizon, hold,
                                        derive_seed(seed, "data.test." + std::to_string(hold))));
}

WorldModel train_model_into(const Config& cfg, const std::string& out) {
  auto env = make_environment(cfg.get("env"), cfg.get_uint("seed"));
  const Datasets data = datasets_for(cfg, *env, cfg.get_uint("hold"));
  ModelTrainingResult run = run_model_training(data.train, data.test, training_config(cfg, *env));
  write_csv(path_in(out, "losses.csv"), {"batch", "train_loss", "test_loss"}, loss_rows(run));
  save_checkpoint(path_in(out, "model.ckpt"), model_checkpoint(*run.model, *env, cfg.get_uint("seed")));
  return std::move(*run.model);
}

void cmd_train_model(const Config& cfg, const std::string& out) { train_model_into(cfg, out); }

void cmd_train_rl(const Config& cfg, const std::string& out) {
  TrainConfig t;
  t.env = cfg.get("env");
  t.seed = cfg.get_uint("seed");
  t.n1 = cfg.get_uint("n1");
  t.n2 = cfg.get_uint("n2");
  t.n3 = cfg.get_uint("n3");
  t.n4 = cfg.get_uint("n4");
  t.b1 = cfg.get_uint("b1");
  t.b2 = cfg.get_uint("b2");
  t.model_batch = cfg.get_uint("model_batch");
  t.eval_interval = cfg.get_uint("eval_interval");
  t.eval_episodes = cfg.get_uint("eval_episodes");
  t.horizon = cfg.get_uint("horizon");
  t.imag_mix_ratio = cfg.get_double("imag_mix_ratio");
  t.mu = cfg.get_double("mu");
  t.lr_model = cfg.get_double("lr_model");
  t.world_model = parse_world_model(cfg.get("world_model"));
  auto env = make_environment(t.env, t.seed);
  const WorldModelConfig mc = model_config_from(cfg, *env);
  t.latent_dim = mc.latent_dim;
  t.hidden_width = mc.hidden_width;
  t.integrator = mc.integrator;
  t.agent.lr = cfg.get_double("lr_agent");
  t.agent.gamma = cfg.get_double("gamma");
  t.agent.alpha = cfg.get_double("alpha");
  t.agent.rho = cfg.get_double("rho");
  const std::string wall = cfg.get("wall_clock");
  if (wall != "true" && wall != "false") throw ConfigError(0, "wall_clock must be true or false");
  t.wall_clock = wall == "true";

  const std::vector<std::string> header = {"env_steps", "eval_return_mean", "eval_return_std", "model_test_mse",
                                           "wall_seconds"};
  std::vector<std::vector<std::string>> rows;
  const std::string csv = path_in(out, "rl.csv");
  const RunResult result = run_noda_sac(t, [&](const MetricsRow& row) {
    rows.push_back({std::to_string(row.env_steps), format_double(row.eval_return_mean),
                    format_double(row.eval_return_std), cell(row.model_test_mse), cell(row.wall_seconds)});
    write_csv(csv, header, rows);
  });
  Checkpoint agent_ckpt;
  agent_ckpt.params = result.agent->snapshot();
  agent_ckpt.metadata = environment_metadata(*env, t.seed);
  agent_ckpt.metadata["agent.hidden_width"] = std::to_string(result.agent->config().hidden_width);
  agent_ckpt.metadata["agent.gamma"] = format_double(result.agent->config().gamma);
  agent_ckpt.metadata["agent.alpha"] = format_double(result.agent->config().alpha);
  agent_ckpt.metadata["agent.rho"] = format_double(result.agent->config().rho);
  save_checkpoint(path_in(out, "agent.ckpt"), agent_ckpt);
  if (result.model) save_checkpoint(path_in(out, "model.ckpt"), model_checkpoint(*result.model, *env, t.seed));
}

void cmd_sweep_dim(const Config& cfg, const std::string& out) {
  auto env = make_environment(cfg.get("env"), cfg.get_uint("seed"));
  const Datasets data = datasets_for(cfg, *env, cfg.get_uint("hold"));
  std::vector<std::size_t> dims;
  for (auto d : cfg.get_int_list("dims")) {
    if (d <= 0) throw ConfigError(0, "dims must be positive");
    dims.push_back(static_cast<std::size_t>(d));
  }
  const auto rows = sweep_latent_dim(data.train, data.test, dims, training_config(cfg, *env));
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : rows) cells.push_back({std::to_string(row.dim), format_double(row.final_test_loss)});
  write_csv(path_in(out, "sweep.csv"), {"dim", "final_test_loss"}, cells);
}

void cmd_transfer(const Config& cfg, const std::string& out) {
  auto env = make_environment(cfg.get("env"), cfg.get_uint("seed"));
  const std::size_t hold = cfg.get_uint("finetune_hold");
  if (hold == 0) throw ConfigError(0, "finetune_hold must be positive");
  const Datasets pre = datasets_for(cfg, *env, 1);
  Config finetune_cfg = cfg;
  finetune_cfg.set("dataset", "");
  finetune_cfg.set("test_dataset", "");
  const Datasets fine = datasets_for(finetune_cfg, *env, hold);
  ModelTrainingConfig tc = training_config(cfg, *env);
  const WorldModelConfig pretrain_model = tc.model;
  // The fine-tune model integrates the same field over `hold` env steps.
  tc.model.field_scale = 1.0 / pretrain_model.integrator.tau;
  tc.model.integrator.tau = pretrain_model.integrator.tau * static_cast<double>(hold);
  tc.model.integrator.substeps = pretrain_model.integrator.substeps * hold;
  WorldModelConfig pre_model = pretrain_model;
  pre_model.field_scale = tc.model.field_scale;
  const TransferResult result =
      run_transfer(pre.train, fine.train, fine.test, pre_model, cfg.get_uint("pretrain_batches"), tc, parts_from(cfg));
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < result.scratch.size(); ++i)
    rows.push_back({std::to_string(result.scratch[i].batch), format_double(result.scratch[i].loss),
                    format_double(result.transfer[i].loss)});
  write_csv(path_in(out, "transfer.csv"), {"batch", "scratch_test_loss", "transfer_test_loss"}, rows);
}

std::vector<std::string> bound_cells(const BoundRow& row) {
  return {std::to_string(row.n), format_double(row.delta_measured), format_double(row.bound_closed_form),
          format_double(row.bound_recursive), format_double(row.margin)};
}

void write_bounds(const std::string& path, const BoundReport& report) {
  std::vector<std::vector<std::string>> rows;
  BoundRow all;
  all.margin = std::numeric_limits<double>::infinity();
  for (const auto& row : report.rows) {
    rows.push_back(bound_cells(row));
    all.delta_measured = std::max(all.delta_measured, row.delta_measured);
    all.bound_closed_form = std::max(all.bound_closed_form, row.bound_closed_form);
    all.bound_recursive = std::max(all.bound_recursive, row.bound_recursive);
    all.margin = std::min(all.margin, row.margin);
  }
  std::vector<std::string> summary = bound_cells(all);
  summary[0] = "all";
  rows.push_back(summary);
  write_csv(path, {"n", "delta_measured", "bound_closed_form", "bound_recursive", "margin"}, rows);
}

void append_summary(std::vector<std::vector<std::string>>& rows, const std::string& prefix, const BoundReport& r) {
  double worst_gap = 0.0;
  for (double g : r.value_gaps) worst_gap = std::max(worst_gap, g);
  auto add = [&](const std::string& key, const std::string& value) { rows.push_back({prefix + key, value}); };
  add("recursive_checks", std::to_string(r.recursive_checks));
  add("recursive_violations", std::to_string(r.recursive_violations));
  add("closed_form_violations", std::to_string(r.closed_form_violations));
  add("vacuous", r.vacuous ? "true" : "false");
  add("value_bound", r.vacuous ? "" : format_double(r.value_bound));
  add("value_gap_max", r.vacuous ? "" : format_double(worst_gap));
  add("value_violations", std::to_string(r.value_violations));
}

void cmd_verify_bounds(const Config& cfg, const std::string& out) {
  std::unique_ptr<WorldModel> model;
  std::unique_ptr<Environment> env;
  if (!cfg.get("checkpoint").empty()) {
    const Checkpoint ckpt = load_checkpoint(cfg.get("checkpoint"));
    env = environment_from_metadata(ckpt.metadata);
    model = std::make_unique<WorldModel>(model_from_checkpoint(ckpt));
  } else {
    model = std::make_unique<WorldModel>(train_model_into(cfg, out));
    env = make_environment(cfg.get("env"), cfg.get_uint("seed"));
  }
  BoundConfig bc;
  bc.rollouts = cfg.get_uint("rollouts");
  bc.n_max = cfg.get_uint("n_max");
  bc.gamma = cfg.get_double("bound_gamma");
  bc.seed = cfg.get_uint("seed");
  const EnvironmentDynamics truth(*env);
  const RewardFunction reward = [&](std::span<const double> s, std::span<const double> a) { return env->reward(s, a); };
  const RolloutSet in_sample = sample_rollouts(*env, bc.rollouts, bc.n_max, derive_seed(bc.seed, "bounds.in"));
  const BoundReport report = verify_bounds(truth, *model, model->normalizer(), reward, in_sample, bc);
  const RolloutSet held_out = sample_rollouts(*env, bc.rollouts, bc.n_max, derive_seed(bc.seed, "bounds.out"));
  const BoundReport heldout = check_bounds(truth, *model, model->normalizer(), reward, held_out, report.constants, bc);

  write_bounds(path_in(out, "bounds.csv"), report);
  write_bounds(path_in(out, "bounds_heldout.csv"), heldout);
  std::vector<std::vector<std::string>> rows = {
      {"k_env", format_double(report.constants.k_env)},
      {"k_model", format_double(report.constants.k_model)},
      {"k_bar", format_double(report.constants.k_bar)},
      {"delta", format_double(report.constants.delta)},
      {"k_reward", format_double(report.constants.k_reward)},
      {"gamma", format_double(report.gamma)},
  };
  append_summary(rows, "", report);
  append_summary(rows, "heldout_", heldout);
  write_csv(path_in(out, "bounds_summary.csv"), {"key", "value"}, rows);
}

void cmd_eval(const Config& cfg, const std::string& out) {
  if (cfg.get("checkpoint").empty()) throw ConfigError(0, "eval needs the 'checkpoint' key");
  const Checkpoint ckpt = load_checkpoint(cfg.get("checkpoint"));
  auto env = environment_from_metadata(ckpt.metadata);
  std::vector<std::vector<std::string>> rows;
  if (ckpt.metadata.count("model.kind")) {
    const WorldModel model = model_from_checkpoint(ckpt);
    const Datasets data = datasets_for(cfg, *env, cfg.get_uint("hold"));
    const LossWeights w{cfg.get_double("mu")};
    rows.push_back({"test_loss", format_double(model.evaluate_loss(data.test, w))});
    rows.push_back({"test_mse", format_double(model.one_step_mse(data.test))});
  } else {
    SacConfig sc;
    sc.obs_dim = env->obs_dim();
    sc.action_dim = env->action_dim();
    sc.action_bound = env->action_bound();
    sc.hidden_width = static_cast<std::size_t>(parse_int(require(ckpt.metadata, "agent.hidden_width")));
    SacAgent agent(sc, 0);
    agent.restore(ckpt.params);
    const PolicyScore score = evaluate_policy(agent, *env, cfg.get_uint("eval_episodes"), cfg.get_uint("horizon"),
                                              derive_seed(cfg.get_uint("seed"), "eval"));
    rows.push_back({"eval_return_mean", format_double(score.mean)});
    rows.push_back({"eval_return_std", format_double(score.std)});
  }
  write_csv(path_in(out, "eval.csv"), {"metric", "value"}, rows);
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"collect", "train-model", "train-rl", "sweep-dim",
                                                 "transfer", "verify-bounds", "eval"};
  return names;
}

bool is_command(const std::string& name) {
  const auto& names = command_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

WorldModelConfig model_config_from(const Config& cfg, const Environment& env) {
  const EnvDefaults defaults = env_defaults(env.name());
  WorldModelConfig mc =
      model_config_for(env, resolve_size(cfg, "latent_dim", defaults.latent_dim),
                       resolve_size(cfg, "hidden_width", defaults.hidden_width));
  mc.integrator.method = parse_method(cfg.get("integrator"));
  mc.integrator.substeps = cfg.get_uint("substeps");
  if (cfg.get("tau") != "auto") mc.integrator.tau = parse_double(cfg.get("tau"));
  mc.validate();
  return mc;
}

Metadata environment_metadata(const Environment& env, std::uint64_t seed) {
  Metadata meta;
  meta["env.name"] = env.name();
  meta["env.seed"] = std::to_string(seed);
  if (const auto* spring = dynamic_cast<const SpringMass*>(&env)) {
    meta["env.lift_rows"] = std::to_string(spring->lift().rows());
    meta["env.lift"] = join_doubles(spring->lift().values());
  }
  return meta;
}

std::unique_ptr<Environment> environment_from_metadata(const Metadata& meta) {
  const std::string& name = require(meta, "env.name");
  if (name == "spring" && meta.count("env.lift")) {
    const std::size_t rows = static_cast<std::size_t>(parse_int(require(meta, "env.lift_rows")));
    std::vector<double> lift = split_doubles(require(meta, "env.lift"));
    if (rows == 0 || lift.size() != rows * 4) fail(ErrorKind::format, "stored lift has the wrong size");
    SpringMassParams params;
    params.obs_dim = rows;
    return std::make_unique<SpringMass>(params, Tensor({rows, 4}, std::move(lift)));
  }
  return make_environment(name, static_cast<std::uint64_t>(parse_int(require(meta, "env.seed"))));
}

Checkpoint model_checkpoint(const WorldModel& model, const Environment& env, std::uint64_t seed) {
  Checkpoint ckpt;
  ckpt.params = model.params();
  ckpt.metadata = model.metadata();
  for (const auto& [k, v] : environment_metadata(env, seed)) ckpt.metadata[k] = v;
  return ckpt;
}

WorldModel model_from_checkpoint(const Checkpoint& checkpoint) {
  return WorldModel(checkpoint.params, checkpoint.metadata);
}

void run_command(const std::string& command, const Config& cfg, const std::string& out_dir) {
  if (!is_command(command)) fail(ErrorKind::contract, "unknown command '" + command + "'");
  if (out_dir.empty()) fail(ErrorKind::config, "an output directory is required");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create '" + out_dir + "': " + ec.message());
  write_file(path_in(out_dir, "config.txt"), cfg.to_text());
  if (command == "collect") return cmd_collect(cfg, out_dir);
  if (command == "train-model") return cmd_train_model(cfg, out_dir);
  if (command == "train-rl") return cmd_train_rl(cfg, out_dir);
  if (command == "sweep-dim") return cmd_sweep_dim(cfg, out_dir);
  if (command == "transfer") return cmd_transfer(cfg, out_dir);
  if (command == "verify-bounds") return cmd_verify_bounds(cfg, out_dir);
  cmd_eval(cfg, out_dir);
}

}  // namespace noda
