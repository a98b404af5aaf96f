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

#include "aqaa/error.hpp"
#include "aqaa/interleave.hpp"
#include "aqaa/rng.hpp"

namespace aqaa {
namespace {

const TokenSpace kSpace = build_token_space(512);

TokenSeq text_run(std::size_t n, TokenId first = 1) {
  TokenSeq t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = first + static_cast<TokenId>(i % 500);
  return t;
}

TokenSeq audio_run(std::size_t n, TokenId first = 600) {
  TokenSeq a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = first + static_cast<TokenId>(i % 5000);
  return a;
}

// Run-length shape of a sequence, text runs positive and audio runs negative.
std::vector<long> shape(const TokenSeq& s) {
  std::vector<long> out;
  for (TokenId id : s) {
    const long sign = kSpace.is_text(id) ? 1 : -1;
    if (out.empty() || (out.back() > 0) != (sign > 0)) out.push_back(0);
    out.back() += sign;
  }
  return out;
}

TEST(MergeDual, BlockLayout) {
  const TokenSeq l = {600, 601, 602, 603};
  const TokenSeq s = {2000, 2001, 2002, 2003, 2004, 2005};
  const auto m = merge_dual(l, s);
  EXPECT_EQ(m, (TokenSeq{600, 601, 2000, 2001, 2002, 602, 603, 2003, 2004, 2005}));
  const auto back = split_dual(m, kSpace);
  EXPECT_EQ(back.linguistic, l);
  EXPECT_EQ(back.semantic, s);
  EXPECT_TRUE(merge_dual(TokenSeq{}, TokenSeq{}).empty());
}

TEST(MergeDual, Misaligned) {
  try {
    (void)merge_dual(TokenSeq{600, 601}, TokenSeq{2000, 2001});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMisalignedStream);
  }
}

TEST(SplitDual, ReportsFirstBadIndex) {
  try {
    (void)split_dual(TokenSeq{2000, 600, 601, 2001, 2002}, kSpace);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.index(), 0u);
  }
  try {
    (void)split_dual(TokenSeq{600, 601, 2000, 2001, 602}, kSpace);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.index(), 4u);
  }
  try {
    (void)split_dual(TokenSeq{600, 601, 2000, 2001, 2002, 602}, kSpace);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.index(), 5u);
  }
}

TEST(MergeDual, PeriodicClassPattern) {
  Rng rng(2);
  TokenSeq l;
  TokenSeq s;
  for (int b = 0; b < 40; ++b) {
    for (int k = 0; k < 2; ++k) l.push_back(512 + static_cast<TokenId>(rng.below(1024)));
    for (int k = 0; k < 3; ++k) s.push_back(1536 + static_cast<TokenId>(rng.below(4096)));
  }
  const auto m = merge_dual(l, s);
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(kSpace.classify(m[i]), i % 5 < 2 ? TokenClass::kLinguistic : TokenClass::kSemantic);
  }
  const auto back = split_dual(m, kSpace);
  EXPECT_EQ(back.linguistic, l);
  EXPECT_EQ(back.semantic, s);
}

TEST(Interleave, PaperRatio) {
  const auto seq = interleave_text_audio(text_run(20), audio_run(30), RatioMode::kRatio10_15, kSpace);
  EXPECT_EQ(shape(seq.tokens), (std::vector<long>{10, -15, 10, -15}));
}

TEST(Interleave, GreedyWithRemainder) {
  const auto seq = interleave_text_audio(text_run(25), audio_run(45), RatioMode::kRatio10_15, kSpace);
  EXPECT_EQ(shape(seq.tokens), (std::vector<long>{10, -15, 10, -15, 5, -15}));
}

TEST(Interleave, FillRuleAndAudioExhaustion) {
  EXPECT_EQ(shape(interleave_text_audio(text_run(5), audio_run(40), RatioMode::kRatio10_15, kSpace).tokens),
            (std::vector<long>{5, -40}));
  // audio runs out first: remaining text appended
  EXPECT_EQ(shape(interleave_text_audio(text_run(30), audio_run(20), RatioMode::kRatio10_15, kSpace).tokens),
            (std::vector<long>{10, -15, 10, -5, 10}));
  EXPECT_EQ(interleave_text_audio({}, audio_run(7), RatioMode::kRatio10_15, kSpace).tokens, audio_run(7));
}

TEST(Interleave, OtherModes) {
  EXPECT_EQ(shape(interleave_text_audio(text_run(7), audio_run(60), RatioMode::kRatio6_50, kSpace).tokens),
            (std::vector<long>{6, -50, 1, -10}));
  EXPECT_EQ(shape(interleave_text_audio(text_run(7), audio_run(12), RatioMode::kRatio3_5, kSpace).tokens),
            (std::vector<long>{3, -5, 3, -5, 1, -2}));
  EXPECT_EQ(shape(interleave_text_audio(text_run(7), audio_run(12), RatioMode::kTextCot, kSpace).tokens),
            (std::vector<long>{7, -12}));
  const auto ao = interleave_text_audio(text_run(7), audio_run(12), RatioMode::kAudioOnly, kSpace);
  EXPECT_EQ(shape(ao.tokens), (std::vector<long>{-12}));
  EXPECT_TRUE(deinterleave(ao).text.empty());
}

TEST(Interleave, ClassViolations) {
  EXPECT_THROW((void)interleave_text_audio(TokenSeq{700}, TokenSeq{}, RatioMode::kRatio10_15, kSpace), Error);
  EXPECT_THROW((void)interleave_text_audio(TokenSeq{}, TokenSeq{3}, RatioMode::kRatio10_15, kSpace), Error);
  try {
    (void)interleave_text_audio(TokenSeq{1}, TokenSeq{3}, RatioMode::kRatio10_15, kSpace);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kClassMismatch);
  }
}

TEST(Interleave, DeinterleaveRejectsOov) {
  EXPECT_THROW((void)deinterleave(TokenSeq{1, 99999}, kSpace), Error);
}

TEST(Interleave, RoundTripFuzz) {
  Rng rng(17);
  for (int i = 0; i < 300; ++i) {
    TokenSeq text(rng.below(60));
    for (auto& t : text) t = static_cast<TokenId>(rng.below(512));
    TokenSeq audio(rng.below(120));
    for (auto& a : audio) a = 512 + static_cast<TokenId>(rng.below(5122));
    for (RatioMode m : kAllRatioModes) {
      const auto seq = interleave_text_audio(text, audio, m, kSpace);
      const auto ch = deinterleave(seq);
      EXPECT_EQ(ch.text.size() + ch.audio.size(), seq.tokens.size());
      if (m == RatioMode::kAudioOnly) {
        EXPECT_TRUE(ch.text.empty());
        EXPECT_EQ(ch.audio, audio);
      } else {
        ASSERT_EQ(ch.text, text);
        ASSERT_EQ(ch.audio, audio);
      }
    }
  }
}

TEST(ConcatMultilabel, PaperExamples) {
  const TokenId s = kSpace.audio_start();
  const TokenId e = kSpace.audio_end();
  const std::vector<TokenSeq> segs = {{s, 600, 601, e}, {s, 700, 701, e}};
  EXPECT_EQ(concat_multilabel(segs, ConcatMethod::kMarkerRemoval, {}, kSpace).tokens,
            (TokenSeq{s, 600, 601, 700, 701, e}));
  EXPECT_EQ(concat_multilabel(segs, ConcatMethod::kMarkerPreserving, {}, kSpace).tokens,
            (TokenSeq{s, 600, 601, e, s, 700, 701, e}));
  EXPECT_EQ(concat_multilabel(segs, ConcatMethod::kPreInterleaved, {}, kSpace).tokens,
            (TokenSeq{s, 600, 601, e, s, 700, 701, e}));
}

TEST(ConcatMultilabel, PreInterleavedSplit) {
  const TokenId s = kSpace.audio_start();
  const TokenId e = kSpace.audio_end();
  const std::vector<TokenSeq> segs = {wrap_audio(audio_run(10), kSpace), wrap_audio(audio_run(28), kSpace)};
  const auto seq = concat_multilabel(segs, ConcatMethod::kPreInterleaved, text_run(10), kSpace);
  // shares: 10*12/42 = 2, remainder 8
  ASSERT_EQ(seq.piece_starts, (std::vector<std::size_t>{0, 14}));
  EXPECT_EQ(shape(seq.tokens), (std::vector<long>{2, -12, 8, -30}));
  EXPECT_EQ(seq.tokens[2], s);
  EXPECT_EQ(seq.tokens[13], e);
  const auto ch = deinterleave(seq);
  EXPECT_EQ(ch.text, text_run(10));
}

TEST(ConcatMultilabel, SingleSegmentAgreesAfterStripping) {
  const std::vector<TokenSeq> segs = {wrap_audio(audio_run(33), kSpace)};
  const auto text = text_run(17);
  auto strip = [](const TokenSeq& t) {
    TokenSeq o;
    for (TokenId id : t) {
      if (!kSpace.is_marker(id)) o.push_back(id);
    }
    return o;
  };
  const auto a = concat_multilabel(segs, ConcatMethod::kMarkerRemoval, text, kSpace).tokens;
  const auto b = concat_multilabel(segs, ConcatMethod::kMarkerPreserving, text, kSpace).tokens;
  const auto c = concat_multilabel(segs, ConcatMethod::kPreInterleaved, text, kSpace).tokens;
  EXPECT_EQ(a, b);
  EXPECT_EQ(strip(a), strip(c));
}

TEST(ConcatMultilabel, UnwrappedSegment) {
  const std::vector<TokenSeq> segs = {{600, 601}};
  EXPECT_THROW((void)concat_multilabel(segs, ConcatMethod::kMarkerPreserving, {}, kSpace), FormatError);
  const std::vector<TokenSeq> nested = {{kSpace.audio_start(), kSpace.audio_start(), kSpace.audio_end()}};
  EXPECT_THROW((void)concat_multilabel(nested, ConcatMethod::kMarkerRemoval, {}, kSpace), FormatError);
}

TEST(ProportionalSplit, Shares) {
  const std::vector<std::size_t> w = {1, 1, 1};
  const auto s = proportional_split(10, w);
  EXPECT_EQ(s, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 3}, {3, 6}, {6, 10}}));
  EXPECT_TRUE(proportional_split(5, std::vector<std::size_t>{}).empty());
}

TEST(Modes, ParseAndPrint) {
  for (RatioMode m : kAllRatioModes) EXPECT_EQ(parse_ratio_mode(to_string(m)), m);
  for (ConcatMethod m : kAllConcatMethods) EXPECT_EQ(parse_concat_method(to_string(m)), m);
  EXPECT_THROW((void)parse_ratio_mode("ratio_1_1"), Error);
  EXPECT_THROW((void)parse_concat_method("glue"), Error);
}

}  // namespace
}  // namespace aqaa
