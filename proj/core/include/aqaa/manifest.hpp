// Copyright 2026 The aqaa-forge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace aqaa {

inline constexpr std::string_view kVersion = "0.1.0";

// 64-bit FNV-1a.
class Fnv1a {
 public:
  void update(std::string_view bytes) noexcept {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001B3ULL;
    }
  }
  std::uint64_t value() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xCBF29CE484222325ULL;
};

std::string hex64(std::uint64_t v);

std::uint64_t hash_file(const std::filesystem::path& file);

// Everything needed to re-run a subcommand: its name, seed, every resolved
// parameter, and the outputs it wrote (with content hashes for files).
struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> parameters;
  std::vector<std::filesystem::path> outputs;
};

// Hash over command, seed and parameters.
std::uint64_t config_hash(const RunManifest& m);

void write_run_manifest(const std::filesystem::path& file, const RunManifest& m);

}  // namespace aqaa
