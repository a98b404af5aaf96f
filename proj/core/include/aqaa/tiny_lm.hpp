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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aqaa/token_space.hpp"

namespace aqaa {

struct ModelConfig {
  std::uint32_t vocab = 0;
  std::size_t d_model = 128;
  std::size_t n_layers = 4;
  std::size_t n_heads = 8;
  std::size_t n_kv_groups = 2;
  std::size_t d_ff = 512;
  std::size_t max_seq = 1024;
  std::uint64_t seed = 0;
  double init_std = 0.02;
  double rope_base = 10000.0;
  double norm_eps = 1e-6;

  std::size_t head_dim() const noexcept { return d_model / n_heads; }
  std::size_t kv_dim() const noexcept { return n_kv_groups * head_dim(); }

  // Throws kInvalidConfiguration on zero sizes, n_heads % n_kv_groups != 0,
  // d_model % n_heads != 0 or an odd head dimension (rotary pairs).
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Default toy configuration over the given vocabulary.
ModelConfig default_model_config(const TokenSpace& space, std::uint64_t seed = 0);

// Closed-form parameter count for cfg.
std::size_t parameter_count(const ModelConfig& cfg);

struct Parameter {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }

  friend bool operator==(const Parameter&, const Parameter&) = default;
};

// Named tensors in a fixed order. Used both for weights and for gradients.
struct ParameterSet {
  std::vector<Parameter> params;

  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;
  std::size_t total_size() const noexcept;
  // Same names and shapes in the same order, values zeroed.
  ParameterSet zeros_like() const;
  void set_zero();
  // this += scale * other (schemas must match).
  void add_scaled(const ParameterSet& other, double scale);

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;
};

using Gradients = ParameterSet;

struct Checkpoint {
  ModelConfig config;
  ParameterSet weights;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

// Tensor names and shapes for cfg in schema order.
std::vector<std::pair<std::string, std::vector<std::size_t>>> parameter_schema(const ModelConfig& cfg);

// Deterministic from cfg.seed: normal(0, init_std) matrices, unit norm gains.
Checkpoint init_model(const ModelConfig& cfg);

// Row-major |tokens| x vocab matrix.
struct Logits {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t t) const { return {values.data() + t * cols, cols}; }
  std::span<double> row(std::size_t t) { return {values.data() + t * cols, cols}; }
};

// Throws kSequenceLength when |tokens| > max_seq or tokens is empty, and
// kOutOfVocabulary for ids >= vocab.
// Single-row RMSNorm as used inside every block: gain .* x / sqrt(mean(x^2) + eps).
std::vector<double> rmsnorm(std::span<const double> x, std::span<const double> gain, double eps);

Logits forward(const Checkpoint& ckpt, std::span<const TokenId> tokens);

// Logits for the last position only.
std::vector<double> forward_last(const Checkpoint& ckpt, std::span<const TokenId> tokens);

// Gradients of sum(adjoint .* logits) with respect to every parameter.
// Throws kNumeric when the adjoint has non-finite entries.
Gradients backward(const Checkpoint& ckpt, std::span<const TokenId> tokens, const Logits& adjoint);

// Runs one forward pass and hands the logits to loss_fn, which fills the
// adjoint (same shape, zero-initialized) and returns the loss. Returns the
// loss and accumulates the gradients into grads (when non-null).
double forward_backward(const Checkpoint& ckpt, std::span<const TokenId> tokens,
                        const std::function<double(const Logits&, Logits&)>& loss_fn, Gradients* grads);

enum class DecodeMode { kGreedy, kTemperature };

struct GenerationPolicy {
  DecodeMode mode = DecodeMode::kGreedy;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  // Generation ends right after the stop_count-th emission of stop_token.
  std::optional<TokenId> stop_token;
  std::size_t stop_count = 1;
};

// Autoregressive continuation of prompt (not included in the result). Stops
// at max_new tokens, at the stop token, or when the context reaches max_seq.
// Throws kInvalidConfiguration on an empty prompt.
TokenSeq generate(const Checkpoint& ckpt, std::span<const TokenId> prompt, const GenerationPolicy& policy,
                  std::size_t max_new);

// JSON object text for a config (used in checkpoint and run manifests).
std::string config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(std::string_view text);

// 64-bit FNV-1a over config and raw tensor bytes.
std::uint64_t fingerprint(const Checkpoint& ckpt);

// Directory layout: manifest.json (config + tensor schema) and one raw
// little-endian float64 file per tensor under tensors/.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace aqaa
