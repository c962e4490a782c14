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

// Binary checkpoint and dataset files, and CSV output.
//
// Checkpoint (little-endian throughout):
//   "NODACKPT" | u32 version | u32 count |
//   count x { u16 name_len | name | u8 rank | rank x u32 dim | f64 payload } |
//   u32 meta_len | "key=value\n" lines
//
// Dataset:
//   "NODADATA" | u32 version | u64 count | u32 s_dim | u32 a_dim |
//   count x { s f64[s_dim] | a f64[a_dim] | s2 f64[s_dim] | r f64 | done u8 }

#include <cstdint>
#include <string>
#include <vector>

#include "noda/diffcore.hpp"
#include "noda/dynamics.hpp"
#include "noda/text.hpp"

namespace noda {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint32_t kDatasetVersion = 1;

struct Checkpoint {
  ParamSet params;
  Metadata metadata;
};

std::string encode_checkpoint(const Checkpoint& checkpoint);
// Throws FormatError with the byte offset of the first inconsistency.
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

std::string encode_dataset(const std::vector<Transition>& records);
std::vector<Transition> decode_dataset(const std::string& bytes);

void save_dataset(const std::string& path, const std::vector<Transition>& records);
std::vector<Transition> load_dataset(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

// Header line and one comma-separated line per row. Cells are written as given.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace noda
