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

// Flat "key = value" experiment configuration. Every key has a default, so an
// empty file is valid; unknown keys and malformed values are rejected with
// the offending line number. Overrides applied later win.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace noda {

class Config {
 public:
  Config();

  // Parses config-file text; `origin` prefixes error messages.
  void apply_text(const std::string& text, const std::string& origin = "config");
  void apply_file(const std::string& path);
  // A single "key=value" override.
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value, std::size_t line = 0);

  bool has_key(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::vector<std::int64_t> get_int_list(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  // Sorted "key = value" lines; parsing the result reproduces the config.
  std::string to_text() const;
  static const std::vector<std::string>& keys();

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace noda
