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
#include "noda/config.hpp"

#include <algorithm>
#include <cmath>

#include "noda/errors.hpp"
#include "noda/io.hpp"
#include "noda/text.hpp"

namespace noda {
namespace {

enum class Kind { text, integer, count, real, int_list, word_list };

struct KeySpec {
  const char* key;
  Kind kind;
  const char* fallback;
};

// "auto" defaults resolve per environment when the experiment is built.
const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = {
      {"env", Kind::text, "pendulum"},
      {"seed", Kind::count, "0"},
      {"latent_dim", Kind::text, "auto"},
      {"hidden_width", Kind::text, "auto"},
      {"mu", Kind::real, "0.5"},
      {"tau", Kind::text, "auto"},
      {"integrator", Kind::text, "rk4"},
      {"substeps", Kind::count, "10"},
      {"lr_model", Kind::real, "0.001"},
      {"lr_agent", Kind::real, "0.001"},
      {"gamma", Kind::real, "0.99"},
      {"alpha", Kind::real, "0.2"},
      {"rho", Kind::real, "0.995"},
      {"n1", Kind::count, "1000"},
      {"n2", Kind::count, "250"},
      {"n3", Kind::count, "5"},
      {"n4", Kind::count, "30000"},
      {"b1", Kind::count, "256"},
      {"b2", Kind::count, "400"},
      {"model_batch", Kind::count, "200"},
      {"eval_interval", Kind::count, "4000"},
      {"world_model", Kind::text, "noda"},
      {"imag_mix_ratio", Kind::real, "0.5"},
      {"dims", Kind::int_list, "2,4,6,8"},
      {"parts", Kind::word_list, "encoder,decoder,reward,dynamics"},
      {"horizon", Kind::count, "200"},
      {"rollouts", Kind::count, "100"},
      {"n_max", Kind::count, "20"},
      // Keys beyond the core list.
      {"batches", Kind::count, "2000"},
      {"pretrain_batches", Kind::count, "100"},
      {"train_size", Kind::count, "20000"},
      {"test_size", Kind::count, "20000"},
      {"dataset", Kind::text, ""},
      {"test_dataset", Kind::text, ""},
      {"checkpoint", Kind::text, ""},
      {"model_kind", Kind::text, "noda"},
      {"eval_episodes", Kind::count, "10"},
      {"bound_gamma", Kind::real, "0.9"},
      {"hold", Kind::count, "1"},
      {"finetune_hold", Kind::count, "2"},
      {"wall_clock", Kind::text, "false"},
  };
  return specs;
}

const KeySpec* find_spec(const std::string& key) {
  for (const auto& spec : key_specs())
    if (key == spec.key) return &spec;
  return nullptr;
}

void check_value(const KeySpec& spec, const std::string& value) {
  switch (spec.kind) {
    case Kind::text:
      break;
    case Kind::integer:
      parse_int(value);
      break;
    case Kind::count:
      if (parse_int(value) < 0) fail(ErrorKind::config, "must be non-negative");
      break;
    case Kind::real:
      if (!std::isfinite(parse_double(value))) fail(ErrorKind::config, "must be finite");
      break;
    case Kind::int_list:
      for (const auto& piece : split(value, ',')) parse_int(piece);
      break;
    case Kind::word_list:
      break;
  }
}

}  // namespace

Config::Config() {
  for (const auto& spec : key_specs()) values_[spec.key] = spec.fallback;
}

const std::vector<std::string>& Config::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& spec : key_specs()) out.emplace_back(spec.key);
    return out;
  }();
  return names;
}

void Config::set(const std::string& key, const std::string& value, std::size_t line) {
  const KeySpec* spec = find_spec(key);
  if (spec == nullptr) throw ConfigError(line, "unknown key '" + key + "'");
  try {
    check_value(*spec, value);
  } catch (const Error& e) {
    throw ConfigError(line, "bad value '" + value + "' for '" + key + "': " + e.what());
  }
  values_[key] = value;
}

void Config::apply_text(const std::string& text, const std::string& origin) {
  std::size_t line_no = 0, start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    std::string line = text.substr(start, end - start);
    start = end + 1;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line_no, origin + ": expected 'key = value', got '" + line + "'");
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no);
    } catch (const ConfigError& e) {
      throw ConfigError(line_no, origin + ": " + e.what());
    }
  }
}

void Config::apply_file(const std::string& path) { apply_text(read_file(path), path); }

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError(0, "override '" + assignment + "' is not key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)), 0);
}

bool Config::has_key(const std::string& key) const { return values_.count(key) != 0; }

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(0, "unknown key '" + key + "'");
  return it->second;
}

std::int64_t Config::get_int(const std::string& key) const { return parse_int(get(key)); }

std::uint64_t Config::get_uint(const std::string& key) const {
  const auto v = get_int(key);
  if (v < 0) throw ConfigError(0, "'" + key + "' must be non-negative");
  return static_cast<std::uint64_t>(v);
}

double Config::get_double(const std::string& key) const { return parse_double(get(key)); }

std::vector<std::int64_t> Config::get_int_list(const std::string& key) const {
  std::vector<std::int64_t> out;
  for (const auto& piece : split(get(key), ',')) out.push_back(parse_int(piece));
  return out;
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  std::vector<std::string> out;
  for (auto& piece : split(get(key), ','))
    if (!piece.empty()) out.push_back(piece);
  return out;
}

std::string Config::to_text() const {
  std::string text;
  for (const auto& [key, value] : values_) text += key + " = " + value + "\n";
  return text;
}

}  // namespace noda
