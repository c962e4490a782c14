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

// Experiment commands behind the command-line tool. Each reads a Config and
// writes its artifacts into an output directory.

#include <memory>
#include <string>
#include <vector>

#include "noda/config.hpp"
#include "noda/envs.hpp"
#include "noda/io.hpp"
#include "noda/model.hpp"

namespace noda {

const std::vector<std::string>& command_names();
bool is_command(const std::string& name);

void run_command(const std::string& command, const Config& config, const std::string& out_dir);

// Helpers shared with tests.
WorldModelConfig model_config_from(const Config& config, const Environment& env);
// Environment described by checkpoint metadata (including a stored lift).
std::unique_ptr<Environment> environment_from_metadata(const Metadata& meta);
Metadata environment_metadata(const Environment& env, std::uint64_t seed);
Checkpoint model_checkpoint(const WorldModel& model, const Environment& env, std::uint64_t seed);
WorldModel model_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace noda
