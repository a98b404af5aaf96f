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
#include "aqaa/token_space.hpp"

namespace aqaa {
namespace {

TEST(TokenSpace, TotalSizeFor512) {
  const auto s = build_token_space(512);
  EXPECT_EQ(s.total_size(), 5634u);
  EXPECT_EQ(s.linguistic_offset(), 512u);
  EXPECT_EQ(s.semantic_offset(), 1536u);
  EXPECT_EQ(s.audio_start(), 5632u);
  EXPECT_EQ(s.audio_end(), 5633u);
}

TEST(TokenSpace, SmallestConfig) {
  const auto s = build_token_space(1);
  EXPECT_EQ(s.linguistic_offset(), 1u);
  EXPECT_EQ(s.classify(0), TokenClass::kText);
  EXPECT_EQ(s.classify(1), TokenClass::kLinguistic);
}

TEST(TokenSpace, ZeroTextSizeRejected) {
  try {
    (void)build_token_space(0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfiguration);
  }
}

TEST(TokenSpace, RangeEdges) {
  const auto s = build_token_space(512);
  EXPECT_EQ(s.classify(0), TokenClass::kText);
  EXPECT_EQ(s.classify(511), TokenClass::kText);
  EXPECT_EQ(s.classify(512), TokenClass::kLinguistic);
  EXPECT_EQ(s.classify(1535), TokenClass::kLinguistic);
  EXPECT_EQ(s.classify(1536), TokenClass::kSemantic);
  EXPECT_EQ(s.classify(5631), TokenClass::kSemantic);
  EXPECT_EQ(s.classify(5632), TokenClass::kMarker);
  EXPECT_EQ(s.classify(5633), TokenClass::kMarker);
}

TEST(TokenSpace, OutOfVocabulary) {
  const auto s = build_token_space(512);
  try {
    (void)s.classify(5634);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfVocabulary);
  }
  EXPECT_FALSE(s.contains(5634));
  EXPECT_THROW(check_in_vocabulary(std::vector<TokenId>{1, 2, 9999}, s), Error);
}

// Exhaustive partition check against an independent range oracle.
TEST(TokenSpace, ExhaustivePartition) {
  for (std::uint32_t text : {1u, 7u, 89u}) {
    const auto s = build_token_space(text);
    std::size_t counts[4] = {0, 0, 0, 0};
    for (TokenId id = 0; id < s.total_size(); ++id) {
      TokenClass want;
      if (id < text) {
        want = TokenClass::kText;
      } else if (id < text + 1024) {
        want = TokenClass::kLinguistic;
      } else if (id < text + 5120) {
        want = TokenClass::kSemantic;
      } else {
        want = TokenClass::kMarker;
      }
      ASSERT_EQ(s.classify(id), want) << id;
      ++counts[static_cast<int>(want)];
      EXPECT_NE(s.is_audio(id), s.is_text(id));
      EXPECT_EQ(s.is_audio(id), want != TokenClass::kText);
    }
    EXPECT_EQ(counts[0], text);
    EXPECT_EQ(counts[1], 1024u);
    EXPECT_EQ(counts[2], 4096u);
    EXPECT_EQ(counts[3], 2u);
  }
}

}  // namespace
}  // namespace aqaa
