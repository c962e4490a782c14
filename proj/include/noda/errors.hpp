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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace noda {

enum class ErrorKind {
  dimension,
  domain,
  contract,
  divergence,
  insufficient_spread,
  incompatible_checkpoint,
  format,
  io,
  config,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised by the integrators when the field produces a non-finite value.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t substep, const std::string& detail);
  std::size_t substep() const noexcept { return substep_; }

 private:
  std::size_t substep_;
};

// Raised by binary loaders; carries the byte offset where decoding stopped.
class FormatError : public Error {
 public:
  FormatError(std::size_t offset, const std::string& detail);
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Config problems carry the 1-based line number (0 when from an override).
class ConfigError : public Error {
 public:
  ConfigError(std::size_t line, const std::string& detail);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace noda
