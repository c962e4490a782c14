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

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace noda {

// Shortest text that round-trips a double ("%.17g").
std::string format_double(double value);
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::string join_doubles(const std::vector<double>& values);
std::vector<double> split_doubles(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);
std::string trim(std::string_view text);

// Ordered key=value metadata carried next to parameters in checkpoints.
using Metadata = std::map<std::string, std::string>;

const std::string& require(const Metadata& meta, const std::string& key);

}  // namespace noda
