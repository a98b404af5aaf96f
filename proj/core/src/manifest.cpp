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

#include "aqaa/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

#include "aqaa/error.hpp"
#include "json.hpp"

namespace aqaa {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t hash_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read " + file.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Fnv1a h;
  h.update(bytes);
  return h.value();
}

std::uint64_t config_hash(const RunManifest& m) {
  nlohmann::json j;
  j["command"] = m.command;
  j["seed"] = m.seed;
  j["parameters"] = m.parameters;
  Fnv1a h;
  h.update(j.dump());
  return h.value();
}

void write_run_manifest(const std::filesystem::path& file, const RunManifest& m) {
  namespace fs = std::filesystem;
  nlohmann::json j;
  j["tool"] = "aqaa-forge";
  j["version"] = std::string(kVersion);
  j["command"] = m.command;
  j["seed"] = m.seed;
  j["config_hash"] = hex64(config_hash(m));
  j["parameters"] = m.parameters;
  j["outputs"] = nlohmann::json::array();
  for (const auto& out : m.outputs) {
    nlohmann::json o;
    o["path"] = out.filename().string();
    if (fs::is_regular_file(out)) o["fnv1a64"] = hex64(hash_file(out));
    if (fs::is_directory(out) && fs::exists(out / "manifest.json")) o["fnv1a64"] = hex64(hash_file(out / "manifest.json"));
    j["outputs"].push_back(o);
  }
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream f(file, std::ios::trunc);
  if (!f) fail(ErrorCode::kIo, "cannot write " + file.string());
  f << j.dump(2) << '\n';
}

}  // namespace aqaa
