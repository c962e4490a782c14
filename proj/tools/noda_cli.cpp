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
// Command-line front end; talks to the library only through noda.h.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "noda/noda.h"

namespace {

struct ConfigHandle {
  noda_config* ptr = nullptr;
  ~ConfigHandle() { noda_config_free(ptr); }
};

int fail(int code) {
  std::fprintf(stderr, "noda: %s\n", noda_last_error());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NODA world models, SAC training and bound checks"};
  app.set_version_flag("--version", std::string(noda_version()));

  std::string command, config_path, out_dir;
  std::vector<std::string> overrides;
  app.add_option("command", command,
                 "collect | train-model | train-rl | sweep-dim | transfer | verify-bounds | eval")
      ->required();
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--set", overrides, "override one key (k=v); repeatable");
  app.add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (!noda_is_command(command.c_str())) {
    std::fprintf(stderr, "noda: unknown command '%s'\n%s", command.c_str(), app.help().c_str());
    return 1;
  }
  if (out_dir.empty()) {
    std::fprintf(stderr, "noda: --out DIR is required\n%s", app.help().c_str());
    return 1;
  }

  ConfigHandle cfg;
  if (noda_config_new(&cfg.ptr) != NODA_OK) return fail(2);
  if (!config_path.empty()) {
    const noda_status s = noda_config_load_file(cfg.ptr, config_path.c_str());
    if (s != NODA_OK) return fail(s == NODA_ERR_IO ? 2 : 1);
  }
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "noda: --set expects key=value, got '%s'\n", kv.c_str());
      return 1;
    }
    const noda_status s = noda_config_set(cfg.ptr, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (s != NODA_OK) return fail(1);
  }

  const noda_status s = noda_run(cfg.ptr, command.c_str(), out_dir.c_str());
  if (s == NODA_ERR_CONFIG) return fail(1);
  if (s != NODA_OK) return fail(2);
  return 0;
}
