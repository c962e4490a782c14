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
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "noda/noda.h"

namespace {

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("noda_capi_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(NODA_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config handles") {
  noda_config* cfg = nullptr;
  REQUIRE(noda_config_new(&cfg) == NODA_OK);
  char buf[64];
  size_t needed = 0;
  CHECK(noda_config_get(cfg, "n4", buf, sizeof buf, &needed) == NODA_OK);
  CHECK(std::string(buf) == "30000");
  CHECK(noda_config_set(cfg, "seed", "12") == NODA_OK);
  CHECK(noda_config_get(cfg, "seed", buf, sizeof buf, &needed) == NODA_OK);
  CHECK(std::string(buf) == "12");
  // Short buffers truncate like snprintf and report the size required.
  CHECK(noda_config_get(cfg, "seed", buf, 2, &needed) == NODA_OK);
  CHECK(needed == 3);
  CHECK(std::string(buf) == "1");
  CHECK(noda_config_set(cfg, "bogus", "1") == NODA_ERR_CONFIG);
  CHECK(std::string(noda_last_error()).find("bogus") != std::string::npos);
  CHECK(noda_config_load_file(cfg, "/nonexistent/x.cfg") == NODA_ERR_IO);
  CHECK(noda_config_new(nullptr) == NODA_ERR_ARGUMENT);
  CHECK(noda_is_command("collect") == 1);
  CHECK(noda_is_command("fly") == 0);
  CHECK(std::string(noda_status_name(NODA_ERR_FORMAT)).size() > 0);
  noda_config_free(cfg);
}

TEST_CASE("environment handles") {
  noda_env* env = nullptr;
  REQUIRE(noda_env_new("pendulum", 1, &env) == NODA_OK);
  CHECK(noda_env_obs_dim(env) == 3);
  CHECK(noda_env_action_dim(env) == 1);
  double obs[3], reward = 0.0;
  CHECK(noda_env_reset(env, 2, obs) == NODA_OK);
  CHECK(obs[0] * obs[0] + obs[1] * obs[1] == doctest::Approx(1.0));
  const double torque = 1.0;
  CHECK(noda_env_step(env, &torque, obs, &reward) == NODA_OK);
  CHECK(reward <= 0.0);
  const double nan_torque = std::nan("");
  CHECK(noda_env_step(env, &nan_torque, obs, &reward) == NODA_ERR_DOMAIN);
  noda_env_free(env);
  CHECK(noda_env_new("cartpole", 1, &env) != NODA_OK);
}

TEST_CASE("run, load and step a model") {
  const std::string out = temp_path("run");
  noda_config* cfg = nullptr;
  REQUIRE(noda_config_new(&cfg) == NODA_OK);
  for (const auto& [k, v] : std::vector<std::pair<const char*, const char*>>{
           {"train_size", "100"}, {"test_size", "50"}, {"batches", "3"}, {"model_batch", "10"},
           {"hidden_width", "8"}, {"substeps", "2"}})
    REQUIRE(noda_config_set(cfg, k, v) == NODA_OK);
  REQUIRE(noda_run(cfg, "train-model", out.c_str()) == NODA_OK);
  CHECK(noda_run(cfg, "fly", out.c_str()) != NODA_OK);
  noda_config_free(cfg);

  noda_model* model = nullptr;
  REQUIRE(noda_model_load((out + "/model.ckpt").c_str(), &model) == NODA_OK);
  CHECK(noda_model_obs_dim(model) == 3);
  CHECK(noda_model_latent_dim(model) == 4);
  const double s[6] = {1, 0, 0, 0, 1, 0.5};
  const double a[2] = {0.5, -1.0};
  double s2[6], r[2];
  CHECK(noda_model_step(model, 2, s, a, s2, r) == NODA_OK);
  for (double v : s2) CHECK(std::isfinite(v));
  noda_model_free(model);

  std::ofstream(out + "/bad.ckpt") << "NOTACKPT";
  CHECK(noda_model_load((out + "/bad.ckpt").c_str(), &model) == NODA_ERR_FORMAT);
}

TEST_CASE("command-line exit codes") {
  const std::string out = temp_path("cli");
  CHECK(cli("--version") == 0);
  CHECK(cli("badcmd --out " + out) == 1);
  CHECK(cli("collect") == 1);
  CHECK(cli("collect --out " + out + " --set bogus=1") == 1);
  CHECK(cli("collect --out " + out + " --config /nonexistent.cfg") == 2);
  CHECK(cli("eval --out " + out) == 1);
  CHECK(cli("collect --out " + out + " --set train_size=20 --set test_size=10") == 0);
  CHECK(std::filesystem::exists(out + "/train.bin"));
  std::ofstream(out + "/broken.ckpt") << "x";
  CHECK(cli("eval --out " + out + " --set checkpoint=" + out + "/broken.ckpt") == 2);
}
