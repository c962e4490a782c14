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
#ifndef NODA_NODA_H_
#define NODA_NODA_H_

/* C interface to the NODA library. Objects are opaque handles; every call
 * that can fail returns a noda_status and leaves a message retrievable with
 * noda_last_error() on the calling thread. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define NODA_API __declspec(dllexport)
#else
#define NODA_API __attribute__((visibility("default")))
#endif

typedef enum noda_status {
  NODA_OK = 0,
  NODA_ERR_ARGUMENT = 1,
  NODA_ERR_CONFIG = 2,
  NODA_ERR_DIMENSION = 3,
  NODA_ERR_DOMAIN = 4,
  NODA_ERR_CONTRACT = 5,
  NODA_ERR_DIVERGENCE = 6,
  NODA_ERR_INSUFFICIENT_SPREAD = 7,
  NODA_ERR_INCOMPATIBLE_CHECKPOINT = 8,
  NODA_ERR_FORMAT = 9,
  NODA_ERR_IO = 10,
  NODA_ERR_INTERNAL = 11
} noda_status;

typedef struct noda_config noda_config;
typedef struct noda_env noda_env;
typedef struct noda_model noda_model;

NODA_API const char* noda_version(void);
/* Message of the last failed call on this thread ("" if none). */
NODA_API const char* noda_last_error(void);
NODA_API const char* noda_status_name(noda_status status);

/* --- configuration --- */
NODA_API noda_status noda_config_new(noda_config** out);
NODA_API void noda_config_free(noda_config* config);
NODA_API noda_status noda_config_load_file(noda_config* config, const char* path);
NODA_API noda_status noda_config_set(noda_config* config, const char* key, const char* value);
/* Copies the value (NUL-terminated) into buf; *needed receives the required size. */
NODA_API noda_status noda_config_get(const noda_config* config, const char* key, char* buf, size_t len,
                                     size_t* needed);

/* --- commands --- */
NODA_API int noda_is_command(const char* name);
/* Runs collect, train-model, train-rl, sweep-dim, transfer, verify-bounds or eval. */
NODA_API noda_status noda_run(const noda_config* config, const char* command, const char* out_dir);

/* --- environments --- */
NODA_API noda_status noda_env_new(const char* name, uint64_t seed, noda_env** out);
NODA_API void noda_env_free(noda_env* env);
NODA_API size_t noda_env_obs_dim(const noda_env* env);
NODA_API size_t noda_env_action_dim(const noda_env* env);
NODA_API noda_status noda_env_reset(noda_env* env, uint64_t seed, double* observation);
NODA_API noda_status noda_env_step(noda_env* env, const double* action, double* observation, double* reward);

/* --- world models --- */
NODA_API noda_status noda_model_load(const char* path, noda_model** out);
NODA_API void noda_model_free(noda_model* model);
NODA_API size_t noda_model_obs_dim(const noda_model* model);
NODA_API size_t noda_model_action_dim(const noda_model* model);
NODA_API size_t noda_model_latent_dim(const noda_model* model);
/* states [rows, obs_dim], actions [rows, action_dim] -> next_states, rewards[rows]. */
NODA_API noda_status noda_model_step(const noda_model* model, size_t rows, const double* states,
                                     const double* actions, double* next_states, double* rewards);

#ifdef __cplusplus
}
#endif

#endif /* NODA_NODA_H_ */
