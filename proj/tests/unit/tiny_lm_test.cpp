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

#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>

#include "aqaa/error.hpp"
#include "aqaa/tiny_lm.hpp"
#include "test_support.hpp"

namespace aqaa {
namespace {

using testing::random_tokens;
using testing::small_config;

double loss_of(const Logits& lg, const std::vector<double>& probe) {
  double s = 0.0;
  for (std::size_t i = 0; i < lg.values.size(); ++i) s += probe[i] * lg.values[i];
  return s;
}

TEST(TinyLm, InitDeterministicAndGainsOne) {
  const auto cfg = small_config(40);
  const auto a = init_model(cfg);
  EXPECT_EQ(a, init_model(cfg));
  auto other = cfg;
  other.seed += 1;
  EXPECT_NE(a.weights, init_model(other).weights);
  for (const auto& p : a.weights.params) {
    if (p.name.find("norm") != std::string::npos) {
      for (double v : p.values) EXPECT_EQ(v, 1.0);
    }
  }
}

TEST(TinyLm, ParameterCountClosedForm) {
  for (const auto& cfg : {small_config(40), default_model_config(build_token_space(512))}) {
    const std::size_t V = cfg.vocab, d = cfg.d_model, L = cfg.n_layers, f = cfg.d_ff;
    const std::size_t kv = cfg.n_kv_groups * (d / cfg.n_heads);
    // embedding + head, per layer: 2 gains, q, k, v, o, gate, up, down; final gain
    const std::size_t want = 2 * V * d + L * (2 * d + d * d + 2 * d * kv + d * d + 3 * d * f) + d;
    EXPECT_EQ(parameter_count(cfg), want);
    EXPECT_EQ(init_model(cfg).weights.total_size(), want);
  }
}

TEST(TinyLm, ConfigValidation) {
  auto cfg = small_config(40);
  cfg.n_kv_groups = 3;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = small_config(40);
  cfg.d_model = 18;
  EXPECT_THROW((void)init_model(cfg), Error);
}

TEST(TinyLm, ForwardShapeAndReference) {
  const auto cfg = small_config(37);
  const auto ck = init_model(cfg);
  Rng rng(1);
  for (std::size_t n : {1u, 2u, 9u}) {
    const auto toks = random_tokens(rng, n, cfg.vocab);
    const auto lg = forward(ck, toks);
    ASSERT_EQ(lg.rows, n);
    ASSERT_EQ(lg.cols, cfg.vocab);
    const auto ref = testing::reference_forward(ck, toks);
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t v = 0; v < cfg.vocab; ++v) ASSERT_NEAR(lg.row(t)[v], ref[t][v], 1e-11);
    }
    const auto last = forward_last(ck, toks);
    for (std::size_t v = 0; v < cfg.vocab; ++v) EXPECT_NEAR(last[v], lg.row(n - 1)[v], 1e-12);
  }
}

TEST(TinyLm, Causality) {
  const auto cfg = small_config(30);
  const auto ck = init_model(cfg);
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    auto toks = random_tokens(rng, 12, cfg.vocab);
    const auto base = forward(ck, toks);
    const std::size_t t = rng.below(11);
    for (std::size_t k = t + 1; k < toks.size(); ++k) toks[k] = static_cast<TokenId>(rng.below(cfg.vocab));
    const auto edited = forward(ck, toks);
    for (std::size_t r = 0; r <= t; ++r) {
      for (std::size_t v = 0; v < cfg.vocab; ++v) ASSERT_EQ(base.row(r)[v], edited.row(r)[v]);
    }
  }
}

TEST(TinyLm, SequenceLengthErrors) {
  auto cfg = small_config(20);
  cfg.max_seq = 4;
  const auto ck = init_model(cfg);
  try {
    (void)forward(ck, TokenSeq{1, 2, 3, 4, 5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSequenceLength);
  }
  EXPECT_THROW((void)forward(ck, TokenSeq{1, 99}), Error);
}

TEST(TinyLm, RmsNormUnitRms) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(16);
    for (auto& v : x) v = rng.normal() * 5.0;
    const auto y = rmsnorm(x, std::vector<double>(16, 1.0), 1e-12);
    const double ms = std::inner_product(y.begin(), y.end(), y.begin(), 0.0) / 16.0;
    EXPECT_NEAR(std::sqrt(ms), 1.0, 1e-12);
  }
}

// GQA with every kv head duplicated per query head equals the same model run with one kv head per query head.
TEST(TinyLm, GqaMatchesExpandedMha) {
  const auto cfg = small_config(30);
  const auto gqa = init_model(cfg);
  auto mcfg = cfg;
  mcfg.n_kv_groups = cfg.n_heads;
  Checkpoint mha = init_model(mcfg);
  for (auto& p : mha.weights.params) {
    const auto& src = gqa.weights.at(p.name);
    if (p.shape == src.shape) {
      p.values = src.values;
      continue;
    }
    const std::size_t hd = cfg.head_dim();
    const std::size_t per = cfg.n_heads / cfg.n_kv_groups;
    for (std::size_t r = 0; r < cfg.d_model; ++r) {
      for (std::size_t h = 0; h < cfg.n_heads; ++h) {
        for (std::size_t i = 0; i < hd; ++i) {
          p.values[r * mcfg.kv_dim() + h * hd + i] = src.values[r * cfg.kv_dim() + (h / per) * hd + i];
        }
      }
    }
  }
  Rng rng(2);
  const auto toks = random_tokens(rng, 10, cfg.vocab);
  const auto a = forward(gqa, toks);
  const auto b = forward(mha, toks);
  for (std::size_t i = 0; i < a.values.size(); ++i) ASSERT_NEAR(a.values[i], b.values[i], 1e-12);
  const auto ref = testing::reference_forward(mha, toks);
  for (std::size_t t = 0; t < toks.size(); ++t) {
    for (std::size_t v = 0; v < cfg.vocab; ++v) ASSERT_NEAR(b.row(t)[v], ref[t][v], 1e-11);
  }
}

TEST(TinyLm, BackwardMatchesFiniteDifferences) {
  const auto cfg = small_config(23);
  auto ck = init_model(cfg);
  Rng rng(5);
  const auto toks = random_tokens(rng, 7, cfg.vocab);
  std::vector<double> probe(toks.size() * cfg.vocab);
  for (auto& p : probe) p = rng.normal();
  Logits adj = forward(ck, toks);
  adj.values = probe;
  const auto grads = backward(ck, toks, adj);
  ASSERT_EQ(grads.params.size(), ck.weights.params.size());
  for (std::size_t i = 0; i < grads.params.size(); ++i) {
    EXPECT_EQ(grads.params[i].name, ck.weights.params[i].name);
    EXPECT_EQ(grads.params[i].shape, ck.weights.params[i].shape);
  }
  const double h = 1e-4;
  for (auto& p : ck.weights.params) {
    for (int k = 0; k < 6; ++k) {
      std::size_t j = rng.below(p.size());
      if (p.name == "tok_embedding") j = toks[rng.below(toks.size())] * cfg.d_model + rng.below(cfg.d_model);
      const double orig = p.values[j];
      p.values[j] = orig + h;
      const double up = loss_of(forward(ck, toks), probe);
      p.values[j] = orig - h;
      const double dn = loss_of(forward(ck, toks), probe);
      p.values[j] = orig;
      const double fd = (up - dn) / (2 * h);
      const double an = grads.at(p.name).values[j];
      EXPECT_LT(std::abs(fd - an), 1e-5 * std::max(std::abs(fd), std::abs(an)) + 1e-10) << p.name << "[" << j << "]";
    }
  }
}

TEST(TinyLm, ZeroAdjointZeroGradient) {
  const auto cfg = small_config(23);
  const auto ck = init_model(cfg);
  const TokenSeq toks = {1, 2, 3};
  Logits adj = forward(ck, toks);
  std::fill(adj.values.begin(), adj.values.end(), 0.0);
  for (const auto& p : backward(ck, toks, adj).params) {
    for (double v : p.values) ASSERT_EQ(v, 0.0);
  }
  adj.values[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    (void)backward(ck, toks, adj);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
  }
}

TEST(TinyLm, GreedyDeterministicAndInVocab) {
  const auto cfg = small_config(31);
  const auto ck = init_model(cfg);
  GenerationPolicy g;
  const auto a = generate(ck, TokenSeq{1, 2}, g, 20);
  EXPECT_EQ(a, generate(ck, TokenSeq{1, 2}, g, 20));
  EXPECT_EQ(a.size(), 20u);
  for (TokenId t : a) EXPECT_LT(t, cfg.vocab);
  GenerationPolicy s;
  s.mode = DecodeMode::kTemperature;
  s.seed = 3;
  EXPECT_EQ(generate(ck, TokenSeq{1}, s, 15), generate(ck, TokenSeq{1}, s, 15));
  EXPECT_THROW((void)generate(ck, TokenSeq{}, g, 3), Error);
}

TEST(TinyLm, ConstructedLogitsForceToken) {
  ModelConfig cfg = small_config(2);
  Checkpoint ck = init_model(cfg);
  for (auto& p : ck.weights.params) {
    if (p.name.find("norm") != std::string::npos) continue;
    std::fill(p.values.begin(), p.values.end(), 0.0);
  }
  std::fill(ck.weights.at("tok_embedding").values.begin(), ck.weights.at("tok_embedding").values.end(), 1.0);
  auto& head = ck.weights.at("lm_head").values;  // [d, 2]
  for (std::size_t r = 0; r < cfg.d_model; ++r) {
    head[r * 2 + 0] = -1.0;
    head[r * 2 + 1] = 1.0;
  }
  const auto out = generate(ck, TokenSeq{0}, GenerationPolicy{}, 8);
  EXPECT_EQ(out, TokenSeq(8, 1));
  GenerationPolicy stop;
  stop.stop_token = 1;
  stop.stop_count = 3;
  EXPECT_EQ(generate(ck, TokenSeq{0}, stop, 8), TokenSeq(3, 1));
}

TEST(TinyLm, CheckpointRoundTrip) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "aqaa_ckpt_test";
  fs::remove_all(dir);
  const auto ck = init_model(small_config(29));
  save_checkpoint(ck, dir);
  const auto back = load_checkpoint(dir);
  EXPECT_EQ(back, ck);
  EXPECT_EQ(fingerprint(back), fingerprint(ck));
  EXPECT_EQ(config_from_json(config_to_json(ck.config)), ck.config);
  // truncated tensor file
  {
    std::ofstream f(dir / "tensors" / "final_norm.f64", std::ios::binary | std::ios::trunc);
    f << "abc";
  }
  EXPECT_THROW((void)load_checkpoint(dir), Error);
  EXPECT_THROW((void)load_checkpoint(dir / "missing"), Error);
  fs::remove_all(dir);
}

TEST(TinyLm, ParameterSetAlgebra) {
  const auto ck = init_model(small_config(20));
  ParameterSet a = ck.weights;
  const ParameterSet z = a.zeros_like();
  EXPECT_EQ(z.total_size(), a.total_size());
  a.add_scaled(ck.weights, -1.0);
  EXPECT_EQ(a, z);
  EXPECT_THROW((void)a.at("nope"), Error);
}

}  // namespace
}  // namespace aqaa
