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
#include "noda/noda.h"

#include <cstring>
#include <memory>
#include <string>

#include "noda/commands.hpp"
#include "noda/config.hpp"
#include "noda/envs.hpp"
#include "noda/errors.hpp"
#include "noda/io.hpp"
#include "noda/model.hpp"

struct noda_config {
  noda::Config config;
};

struct noda_env {
  std::unique_ptr<noda::Environment> env;
};

struct noda_model {
  std::unique_ptr<noda::WorldModel> model;
};

namespace {

thread_local std::string last_error;

noda_status status_of(noda::ErrorKind kind) {
  switch (kind) {
    case noda::ErrorKind::dimension: return NODA_ERR_DIMENSION;
    case noda::ErrorKind::domain: return NODA_ERR_DOMAIN;
    case noda::ErrorKind::contract: return NODA_ERR_CONTRACT;
    case noda::ErrorKind::divergence: return NODA_ERR_DIVERGENCE;
    case noda::ErrorKind::insufficient_spread: return NODA_ERR_INSUFFICIENT_SPREAD;
    case noda::ErrorKind::incompatible_checkpoint: return NODA_ERR_INCOMPATIBLE_CHECKPOINT;
    case noda::ErrorKind::format: return NODA_ERR_FORMAT;
    case noda::ErrorKind::io: return NODA_ERR_IO;
    case noda::ErrorKind::config: return NODA_ERR_CONFIG;
  }
  return NODA_ERR_INTERNAL;
}

template <typename F>
noda_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return NODA_OK;
  } catch (const noda::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    last_error = e.what();
    return NODA_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return NODA_ERR_INTERNAL;
  }
}

noda_status bad_argument(const char* what) {
  last_error = what;
  return NODA_ERR_ARGUMENT;
}

}  // namespace

extern "C" {

const char* noda_version(void) { return "1.0.0"; }

const char* noda_last_error(void) { return last_error.c_str(); }

const char* noda_status_name(noda_status status) {
  switch (status) {
    case NODA_OK: return "ok";
    case NODA_ERR_ARGUMENT: return "argument";
    case NODA_ERR_CONFIG: return "config";
    case NODA_ERR_DIMENSION: return "dimension";
    case NODA_ERR_DOMAIN: return "domain";
    case NODA_ERR_CONTRACT: return "contract";
    case NODA_ERR_DIVERGENCE: return "divergence";
    case NODA_ERR_INSUFFICIENT_SPREAD: return "insufficient-spread";
    case NODA_ERR_INCOMPATIBLE_CHECKPOINT: return "incompatible-checkpoint";
    case NODA_ERR_FORMAT: return "format";
    case NODA_ERR_IO: return "io";
    case NODA_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

noda_status noda_config_new(noda_config** out) {
  if (out == nullptr) return bad_argument("null output pointer");
  return guarded([&] { *out = new noda_config(); });
}

void noda_config_free(noda_config* config) { delete config; }

noda_status noda_config_load_file(noda_config* config, const char* path) {
  if (config == nullptr || path == nullptr) return bad_argument("null argument");
  return guarded([&] { config->config.apply_file(path); });
}

noda_status noda_config_set(noda_config* config, const char* key, const char* value) {
  if (config == nullptr || key == nullptr || value == nullptr) return bad_argument("null argument");
  return guarded([&] { config->config.set(key, value); });
}

noda_status noda_config_get(const noda_config* config, const char* key, char* buf, size_t len, size_t* needed) {
  if (config == nullptr || key == nullptr) return bad_argument("null argument");
  return guarded([&] {
    const std::string& value = config->config.get(key);
    if (needed != nullptr) *needed = value.size() + 1;
    if (buf != nullptr && len > 0) {
      const std::size_t n = std::min(len - 1, value.size());
      std::memcpy(buf, value.data(), n);
      buf[n] = '\0';
    }
  });
}

int noda_is_command(const char* name) { return name != nullptr && noda::is_command(name) ? 1 : 0; }

noda_status noda_run(const noda_config* config, const char* command, const char* out_dir) {
  if (config == nullptr || command == nullptr || out_dir == nullptr) return bad_argument("null argument");
  if (!noda::is_command(command)) return bad_argument("unknown command");
  return guarded([&] { noda::run_command(command, config->config, out_dir); });
}

noda_status noda_env_new(const char* name, uint64_t seed, noda_env** out) {
  if (name == nullptr || out == nullptr) return bad_argument("null argument");
  return guarded([&] { *out = new noda_env{noda::make_environment(name, seed)}; });
}

void noda_env_free(noda_env* env) { delete env; }

size_t noda_env_obs_dim(const noda_env* env) { return env ? env->env->obs_dim() : 0; }

size_t noda_env_action_dim(const noda_env* env) { return env ? env->env->action_dim() : 0; }

noda_status noda_env_reset(noda_env* env, uint64_t seed, double* observation) {
  if (env == nullptr || observation == nullptr) return bad_argument("null argument");
  return guarded([&] {
    const noda::EnvState s = env->env->reset(seed);
    std::copy(s.observation.begin(), s.observation.end(), observation);
  });
}

noda_status noda_env_step(noda_env* env, const double* action, double* observation, double* reward) {
  if (env == nullptr || action == nullptr || observation == nullptr) return bad_argument("null argument");
  return guarded([&] {
    const noda::StepResult r = env->env->step(std::span<const double>(action, env->env->action_dim()));
    std::copy(r.state.observation.begin(), r.state.observation.end(), observation);
    if (reward != nullptr) *reward = r.reward;
  });
}

noda_status noda_model_load(const char* path, noda_model** out) {
  if (path == nullptr || out == nullptr) return bad_argument("null argument");
  return guarded([&] {
    const noda::Checkpoint ckpt = noda::load_checkpoint(path);
    *out = new noda_model{std::make_unique<noda::WorldModel>(noda::model_from_checkpoint(ckpt))};
  });
}

void noda_model_free(noda_model* model) { delete model; }

size_t noda_model_obs_dim(const noda_model* model) { return model ? model->model->obs_dim() : 0; }

size_t noda_model_action_dim(const noda_model* model) { return model ? model->model->action_dim() : 0; }

size_t noda_model_latent_dim(const noda_model* model) { return model ? model->model->config().latent_dim : 0; }

noda_status noda_model_step(const noda_model* model, size_t rows, const double* states, const double* actions,
                            double* next_states, double* rewards) {
  if (model == nullptr || states == nullptr || actions == nullptr || next_states == nullptr)
    return bad_argument("null argument");
  if (rows == 0) return bad_argument("rows must be positive");
  return guarded([&] {
    const std::size_t l = model->model->obs_dim(), m = model->model->action_dim();
    const noda::StepBatch out = model->model->step(noda::Tensor({rows, l}, std::vector<double>(states, states + rows * l)),
                                                   noda::Tensor({rows, m}, std::vector<double>(actions, actions + rows * m)));
    std::copy(out.next_states.data().begin(), out.next_states.data().end(), next_states);
    if (rewards != nullptr) std::copy(out.rewards.data().begin(), out.rewards.data().end(), rewards);
  });
}

}  // extern "C"
