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

#include <cmath>
#include <numbers>

#include "aqaa/error.hpp"
#include "aqaa/objectives.hpp"
#include "test_support.hpp"

namespace aqaa {
namespace {

const TokenSpace kSpace = build_token_space(512);

Logits random_logits(Rng& rng, std::size_t rows, std::size_t cols, double scale) {
  Logits lg;
  lg.rows = rows;
  lg.cols = cols;
  lg.values.resize(rows * cols);
  for (auto& v : lg.values) v = rng.normal() * scale;
  return lg;
}

TEST(CeLoss, UniformLogits) {
  Logits lg;
  lg.rows = 3;
  lg.cols = 5634;
  lg.values.assign(3 * 5634, 0.25);
  const auto r = ce_loss(lg, TokenSeq{1, 2, 3}, std::vector<std::uint8_t>{1, 0, 1});
  EXPECT_NEAR(r.loss, std::log(5634.0), 1e-12);
  EXPECT_NEAR(r.loss, 8.6366, 1e-4);
  EXPECT_EQ(r.counted, 2u);
}

TEST(CeLoss, DominantClass) {
  Logits lg;
  lg.rows = 1;
  lg.cols = 4;
  lg.values = {0.0, 800.0, 0.0, 0.0};
  EXPECT_NEAR(ce_loss(lg, TokenSeq{1}, std::vector<std::uint8_t>{1}).loss, 0.0, 1e-300);
}

TEST(CeLoss, BruteForceOracle) {
  Rng rng(12);
  const auto lg = random_logits(rng, 4, 9, 3.0);
  const TokenSeq tg = {3, 0, 8, 5};
  const std::vector<std::uint8_t> mask = {1, 1, 0, 1};
  double want = 0.0;
  for (std::size_t t = 0; t < 4; ++t) {
    if (!mask[t]) continue;
    double z = 0.0;
    for (std::size_t v = 0; v < 9; ++v) z += std::exp(lg.row(t)[v]);
    want -= lg.row(t)[tg[t]] - std::log(z);
  }
  want /= 3.0;
  const auto r = ce_loss(lg, tg, mask);
  EXPECT_NEAR(r.loss, want, 1e-12);
  for (std::size_t v = 0; v < 9; ++v) EXPECT_EQ(r.grad.row(2)[v], 0.0);
}

TEST(CeLoss, GradientMatchesFiniteDifferences) {
  Rng rng(13);
  auto lg = random_logits(rng, 5, 7, 2.0);
  const TokenSeq tg = {1, 2, 3, 4, 5};
  const std::vector<std::uint8_t> mask = {1, 0, 1, 1, 0};
  const auto r = ce_loss(lg, tg, mask);
  const double h = 1e-5;
  for (std::size_t i = 0; i < lg.values.size(); ++i) {
    const double o = lg.values[i];
    lg.values[i] = o + h;
    const double up = ce_loss(lg, tg, mask).loss;
    lg.values[i] = o - h;
    const double dn = ce_loss(lg, tg, mask).loss;
    lg.values[i] = o;
    const double fd = (up - dn) / (2 * h);
    EXPECT_LT(std::abs(fd - r.grad.values[i]), 1e-6 * std::max(std::abs(fd), 1e-3)) << i;
  }
}

TEST(CeLoss, Errors) {
  Logits lg;
  lg.rows = 2;
  lg.cols = 3;
  lg.values.assign(6, 0.0);
  try {
    (void)ce_loss(lg, TokenSeq{0, 1}, std::vector<std::uint8_t>{0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyResponse);
  }
  EXPECT_THROW((void)ce_loss(lg, TokenSeq{0}, std::vector<std::uint8_t>{1}), Error);
}

TEST(AudioMask, Classes) {
  const TokenSeq all_audio = {600, 2000, kSpace.audio_start(), kSpace.audio_end()};
  for (auto m : audio_mask(all_audio, kSpace)) EXPECT_EQ(m, 0);
  TokenSeq text(20, 5);
  TokenSeq audio(30, 700);
  const auto seq = interleave_text_audio(text, audio, RatioMode::kRatio10_15, kSpace);
  const auto m = audio_mask(seq.tokens, kSpace);
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_EQ(std::count(m.begin() + c * 25, m.begin() + (c + 1) * 25, 1), 10);
  }
}

TEST(MaskedDpo, AllAudioIsLn2) {
  const std::vector<double> pw = {-1.0, -2.0}, rw = {-0.5, -3.0}, pl = {-4.0}, rl = {-0.1};
  const std::vector<std::uint8_t> mw = {0, 0}, ml = {0};
  const auto r = masked_dpo_loss(pw, rw, pl, rl, mw, ml, 0.1);
  EXPECT_NEAR(r.loss, std::numbers::ln2, 1e-12);
  for (double g : r.grad_chosen) EXPECT_EQ(g, 0.0);
}

TEST(MaskedDpo, PolicyEqualsReference) {
  const std::vector<double> w = {-1.0, -2.0, -0.3}, l = {-4.0, -0.2};
  const std::vector<std::uint8_t> mw = {1, 0, 1}, ml = {1, 1};
  EXPECT_NEAR(masked_dpo_loss(w, w, l, l, mw, ml, 0.1).loss, std::numbers::ln2, 1e-12);
}

TEST(MaskedDpo, ToyOracle) {
  const std::vector<double> pw = {-0.2, -1.5, -0.7}, rw = {-0.4, -1.0, -0.9};
  const std::vector<double> pl = {-2.0, -0.3, -1.1}, rl = {-1.0, -0.6, -1.2};
  const std::vector<std::uint8_t> mw = {1, 0, 1}, ml = {1, 1, 0};
  const double dw = (-0.2 - -0.4) + (-0.7 - -0.9);
  const double dl = (-2.0 - -1.0) + (-0.3 - -0.6);
  const double m = 0.1 * (dw - dl);
  const auto r = masked_dpo_loss(pw, rw, pl, rl, mw, ml, 0.1);
  EXPECT_NEAR(r.margin, m, 1e-15);
  EXPECT_NEAR(r.loss, -std::log(1.0 / (1.0 + std::exp(-m))), 1e-12);
}

TEST(MaskedDpo, MaskInvarianceAndAntisymmetry) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t nw = 1 + rng.below(8), nl = 1 + rng.below(8);
    std::vector<double> pw(nw), rw(nw), pl(nl), rl(nl);
    std::vector<std::uint8_t> mw(nw), ml(nl);
    for (std::size_t i = 0; i < nw; ++i) {
      pw[i] = -rng.uniform() * 5;
      rw[i] = -rng.uniform() * 5;
      mw[i] = rng.below(2);
    }
    for (std::size_t i = 0; i < nl; ++i) {
      pl[i] = -rng.uniform() * 5;
      rl[i] = -rng.uniform() * 5;
      ml[i] = rng.below(2);
    }
    const auto a = masked_dpo_loss(pw, rw, pl, rl, mw, ml, 0.1);
    auto pw2 = pw, pl2 = pl;
    for (std::size_t i = 0; i < nw; ++i) {
      if (!mw[i]) pw2[i] = -rng.uniform() * 50;
    }
    for (std::size_t i = 0; i < nl; ++i) {
      if (!ml[i]) pl2[i] = -rng.uniform() * 50;
    }
    const auto b = masked_dpo_loss(pw2, rw, pl2, rl, mw, ml, 0.1);
    ASSERT_EQ(a.loss, b.loss);
    ASSERT_EQ(a.grad_chosen, b.grad_chosen);
    ASSERT_EQ(a.grad_rejected, b.grad_rejected);
    const auto s = masked_dpo_loss(pl, rl, pw, rw, ml, mw, 0.1);
    ASSERT_EQ(s.margin, -a.margin);
    ASSERT_NEAR(s.loss, neg_log_sigmoid(-a.margin), 1e-12);
  }
}

TEST(MaskedDpo, MarginDerivative) {
  for (double m0 : {-3.0, -0.2, 0.0, 0.7, 4.0}) {
    const std::vector<double> pw = {m0 * 10.0}, rw = {0.0}, pl = {0.0}, rl = {0.0};
    const std::vector<std::uint8_t> on = {1};
    const auto r = masked_dpo_loss(pw, rw, pl, rl, on, on, 0.1);
    const double want = -0.1 / (1.0 + std::exp(r.margin));
    EXPECT_NEAR(r.grad_chosen[0], want, 1e-15);
    EXPECT_LT(r.grad_chosen[0], 0.0);
    const double h = 1e-6;
    const std::vector<double> up = {pw[0] + h}, dn = {pw[0] - h};
    const double fd = (masked_dpo_loss(up, rw, pl, rl, on, on, 0.1).loss -
                       masked_dpo_loss(dn, rw, pl, rl, on, on, 0.1).loss) / (2 * h);
    EXPECT_NEAR(fd, want, 1e-9);
  }
}

TEST(MaskedDpo, Errors) {
  const std::vector<double> a = {-1.0};
  const std::vector<std::uint8_t> m = {1};
  try {
    (void)masked_dpo_loss(a, a, a, a, m, m, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfiguration);
  }
  try {
    (void)masked_dpo_loss(a, a, a, a, std::vector<std::uint8_t>{1, 1}, m, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAlignment);
  }
}

TEST(Objectives, NegLogSigmoidStable) {
  EXPECT_NEAR(neg_log_sigmoid(0.0), std::numbers::ln2, 1e-15);
  EXPECT_NEAR(neg_log_sigmoid(-800.0), 800.0, 1e-9);
  EXPECT_GE(neg_log_sigmoid(800.0), 0.0);
  EXPECT_TRUE(std::isfinite(neg_log_sigmoid(-1e308)));
}

TEST(Objectives, NextTokenTargets) {
  TrainingExample ex;
  ex.tokens = {5, 6, 7, 8};
  ex.loss_mask = {0, 0, 1, 1};
  ex.prompt_length = 2;
  const auto st = next_token_targets(ex);
  EXPECT_EQ(st.targets, (TokenSeq{6, 7, 8, 0}));
  EXPECT_EQ(st.mask, (std::vector<std::uint8_t>{0, 1, 1, 0}));
}

TEST(Objectives, LogProbsAreNonPositive) {
  const auto ck = init_model(testing::small_config(kSpace.total_size()));
  const auto lp = response_log_probs(ck, TokenSeq{kSpace.audio_start(), 600}, TokenSeq{3, 4, kSpace.audio_end()});
  ASSERT_EQ(lp.size(), 3u);
  for (double v : lp) EXPECT_LE(v, 0.0);
}

// Parameter gradients of both objectives through a small model.
TEST(Objectives, EndToEndFiniteDifferences) {
  const TokenSpace space = build_token_space(89);
  auto ck = init_model(testing::small_config(space.total_size(), 3));
  const Checkpoint ref = init_model(testing::small_config(space.total_size(), 4));
  PreferencePair pair;
  pair.prompt = {space.audio_start(), 100, 101, 2000, 2001, 2002, space.audio_end()};
  pair.chosen = {1, 2, space.audio_start(), 150, 151, 3000, 3001, 3002, space.audio_end()};
  pair.rejected = {7, space.audio_start(), 160, 161, 3100, 3101, 3102, space.audio_end(), 8};
  TrainingExample ex;
  ex.tokens = pair.prompt;
  ex.tokens.insert(ex.tokens.end(), pair.chosen.begin(), pair.chosen.end());
  ex.prompt_length = pair.prompt.size();
  ex.loss_mask.assign(ex.tokens.size(), 0);
  std::fill(ex.loss_mask.begin() + 7, ex.loss_mask.end(), 1);

  const auto rw = response_log_probs(ref, pair.prompt, pair.chosen);
  const auto rl = response_log_probs(ref, pair.prompt, pair.rejected);
  auto dpo_value = [&]() {
    return masked_dpo_loss(response_log_probs(ck, pair.prompt, pair.chosen), rw,
                           response_log_probs(ck, pair.prompt, pair.rejected), rl,
                           audio_mask(pair.chosen, space), audio_mask(pair.rejected, space), 0.5)
        .loss;
  };
  Gradients gd;
  (void)dpo_backward(ck, pair, rw, rl, space, 0.5, &gd);
  Gradients gc;
  (void)example_ce_backward(ck, ex, gc);

  Rng rng(9);
  const double h = 1e-4;
  for (auto& p : ck.weights.params) {
    for (int k = 0; k < 4; ++k) {
      std::size_t j = rng.below(p.size());
      if (p.name == "tok_embedding") j = ex.tokens[rng.below(ex.tokens.size())] * ck.config.d_model + rng.below(ck.config.d_model);
      const double o = p.values[j];
      p.values[j] = o + h;
      const double ce_up = example_ce(ck, ex), dpo_up = dpo_value();
      p.values[j] = o - h;
      const double ce_dn = example_ce(ck, ex), dpo_dn = dpo_value();
      p.values[j] = o;
      const double fce = (ce_up - ce_dn) / (2 * h), fdpo = (dpo_up - dpo_dn) / (2 * h);
      const double ace = gc.at(p.name).values[j], adpo = gd.at(p.name).values[j];
      EXPECT_LT(std::abs(fce - ace), 1e-5 * std::max(std::abs(fce), std::abs(ace)) + 1e-11) << p.name;
      EXPECT_LT(std::abs(fdpo - adpo), 1e-5 * std::max(std::abs(fdpo), std::abs(adpo)) + 1e-11) << p.name;
    }
  }
}

}  // namespace
}  // namespace aqaa
