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
#include "noda/errors.hpp"

namespace noda {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension: return "dimension error";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::contract: return "contract error";
    case ErrorKind::divergence: return "divergence error";
    case ErrorKind::insufficient_spread: return "insufficient-spread error";
    case ErrorKind::incompatible_checkpoint: return "incompatible-checkpoint error";
    case ErrorKind::format: return "format error";
    case ErrorKind::io: return "I/O error";
    case ErrorKind::config: return "config error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

DivergenceError::DivergenceError(std::size_t substep, const std::string& detail)
    : Error(ErrorKind::divergence,
            "non-finite field value at substep " + std::to_string(substep) + " (" + detail + ")"),
      substep_(substep) {}

FormatError::FormatError(std::size_t offset, const std::string& detail)
    : Error(ErrorKind::format, detail + " at byte offset " + std::to_string(offset)),
      offset_(offset) {}

ConfigError::ConfigError(std::size_t line, const std::string& detail)
    : Error(ErrorKind::config,
            line > 0 ? "line " + std::to_string(line) + ": " + detail : detail),
      line_(line) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace noda
