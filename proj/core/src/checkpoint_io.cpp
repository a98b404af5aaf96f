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

#include <bit>
#include <cstring>
#include <fstream>

#include "aqaa/error.hpp"
#include "aqaa/manifest.hpp"
#include "aqaa/tiny_lm.hpp"
#include "json.hpp"

namespace aqaa {
namespace {

using nlohmann::json;

constexpr const char* kFormat = "aqaa-checkpoint";
constexpr int kFormatVersion = 1;

json config_json(const ModelConfig& c) {
  return {{"vocab", c.vocab},         {"d_model", c.d_model},     {"n_layers", c.n_layers},
          {"n_heads", c.n_heads},     {"n_kv_groups", c.n_kv_groups}, {"d_ff", c.d_ff},
          {"max_seq", c.max_seq},     {"seed", c.seed},           {"init_std", c.init_std},
          {"rope_base", c.rope_base}, {"norm_eps", c.norm_eps}};
}

ModelConfig config_from(const json& j) {
  ModelConfig c;
  c.vocab = j.at("vocab").get<std::uint32_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.n_layers = j.at("n_layers").get<std::size_t>();
  c.n_heads = j.at("n_heads").get<std::size_t>();
  c.n_kv_groups = j.at("n_kv_groups").get<std::size_t>();
  c.d_ff = j.at("d_ff").get<std::size_t>();
  c.max_seq = j.at("max_seq").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.init_std = j.at("init_std").get<double>();
  c.rope_base = j.at("rope_base").get<double>();
  c.norm_eps = j.at("norm_eps").get<double>();
  c.validate();
  return c;
}

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0x00000000000000FFULL) << 56) | ((v & 0x000000000000FF00ULL) << 40) |
        ((v & 0x0000000000FF0000ULL) << 24) | ((v & 0x00000000FF000000ULL) << 8) |
        ((v & 0x000000FF00000000ULL) >> 8) | ((v & 0x0000FF0000000000ULL) >> 24) |
        ((v & 0x00FF000000000000ULL) >> 40) | ((v & 0xFF00000000000000ULL) >> 56);
  }
  return v;
}

std::vector<char> encode(const std::vector<double>& values) {
  std::vector<char> bytes(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint64_t le = to_le(std::bit_cast<std::uint64_t>(values[i]));
    std::memcpy(bytes.data() + 8 * i, &le, 8);
  }
  return bytes;
}

std::vector<double> decode(const std::vector<char>& bytes) {
  std::vector<double> values(bytes.size() / 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t le = 0;
    std::memcpy(&le, bytes.data() + 8 * i, 8);
    values[i] = std::bit_cast<double>(to_le(le));
  }
  return values;
}

}  // namespace

std::string config_to_json(const ModelConfig& cfg) { return config_json(cfg).dump(); }

ModelConfig config_from_json(std::string_view text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::exception& e) {
    fail(ErrorCode::kIo, std::string("malformed model config: ") + e.what());
  }
}

std::uint64_t fingerprint(const Checkpoint& ckpt) {
  Fnv1a h;
  h.update(config_to_json(ckpt.config));
  for (const auto& p : ckpt.weights.params) {
    h.update(p.name);
    const auto bytes = encode(p.values);
    h.update(std::string_view(bytes.data(), bytes.size()));
  }
  return h.value();
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "tensors");
  json manifest;
  manifest["format"] = kFormat;
  manifest["version"] = kFormatVersion;
  manifest["config"] = config_json(ckpt.config);
  manifest["tensors"] = json::array();
  for (const auto& p : ckpt.weights.params) {
    const std::string file = "tensors/" + p.name + ".f64";
    const auto bytes = encode(p.values);
    std::ofstream out(dir / file, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write " + (dir / file).string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    Fnv1a h;
    h.update(std::string_view(bytes.data(), bytes.size()));
    manifest["tensors"].push_back(
        {{"name", p.name}, {"shape", p.shape}, {"file", file}, {"fnv1a64", hex64(h.value())}});
  }
  manifest["fingerprint"] = hex64(fingerprint(ckpt));
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) fail(ErrorCode::kIo, "no checkpoint manifest in " + dir.string());
  try {
    const json manifest = json::parse(in);
    if (manifest.at("format").get<std::string>() != kFormat) fail(ErrorCode::kIo, "not a checkpoint manifest");
    Checkpoint ckpt;
    ckpt.config = config_from(manifest.at("config"));
    for (const auto& t : manifest.at("tensors")) {
      Parameter p;
      p.name = t.at("name").get<std::string>();
      p.shape = t.at("shape").get<std::vector<std::size_t>>();
      const auto path = dir / t.at("file").get<std::string>();
      std::ifstream f(path, std::ios::binary);
      if (!f) fail(ErrorCode::kIo, "missing tensor file " + path.string());
      std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
      std::size_t expected = 8;
      for (auto s : p.shape) expected *= s;
      if (bytes.size() != expected) fail(ErrorCode::kIo, "tensor file " + path.string() + " has the wrong size");
      p.values = decode(bytes);
      ckpt.weights.params.push_back(std::move(p));
    }
    const auto schema = parameter_schema(ckpt.config);
    if (schema.size() != ckpt.weights.params.size()) {
      fail(ErrorCode::kIncompatibleCheckpoint, "tensor count does not match config");
    }
    for (std::size_t i = 0; i < schema.size(); ++i) {
      if (schema[i].first != ckpt.weights.params[i].name || schema[i].second != ckpt.weights.params[i].shape) {
        throw IncompatibleCheckpointError(schema[i].first, "tensor does not match the config schema");
      }
    }
    return ckpt;
  } catch (const json::exception& e) {
    fail(ErrorCode::kIo, std::string("malformed checkpoint manifest: ") + e.what());
  }
}

}  // namespace aqaa
