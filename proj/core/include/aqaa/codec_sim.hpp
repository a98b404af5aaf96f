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
#include <string>
#include <string_view>
#include <vector>

#include "aqaa/token_space.hpp"

namespace aqaa {

using FrameCode = std::uint16_t;

inline constexpr std::uint32_t kLinguisticFrameMs = 60;  // 50/3 Hz
inline constexpr std::uint32_t kSemanticFrameMs = 40;    // 25 Hz
inline constexpr std::uint32_t kBlockMs = 120;
inline constexpr std::size_t kLinguisticPerBlock = 2;
inline constexpr std::size_t kSemanticPerBlock = 3;
inline constexpr std::size_t kTokensPerBlock = kLinguisticPerBlock + kSemanticPerBlock;
inline constexpr FrameCode kSilenceCode = 0;

// Paired frame streams of one utterance. Every 120 ms block holds exactly two
// linguistic and three semantic frames.
struct SyntheticUtterance {
  std::vector<FrameCode> linguistic;
  std::vector<FrameCode> semantic;

  std::size_t blocks() const noexcept { return linguistic.size() / kLinguisticPerBlock; }
  std::uint64_t duration_ms() const noexcept { return kLinguisticFrameMs * linguistic.size(); }
  bool empty() const noexcept { return linguistic.empty() && semantic.empty(); }

  friend bool operator==(const SyntheticUtterance&, const SyntheticUtterance&) = default;
};

// Throws kMisalignedStream when the 2:3 block structure is violated and
// kInvalidFrame when a code lies outside its codebook.
void validate_utterance(const SyntheticUtterance& u);

// Pads the shorter stream tail with silence so both streams cover the same
// whole number of blocks.
SyntheticUtterance pad_to_blocks(std::vector<FrameCode> linguistic, std::vector<FrameCode> semantic);

// Concatenates utterances block-wise.
SyntheticUtterance concat(const std::vector<SyntheticUtterance>& parts);

struct DualTokens {
  TokenSeq linguistic;
  TokenSeq semantic;

  friend bool operator==(const DualTokens&, const DualTokens&) = default;
};

// Frame code c becomes offset_of_class + c.
DualTokens tokenize(const SyntheticUtterance& u, const TokenSpace& space);

// Exact inverse of tokenize. Throws kMisalignedStream when 2|sem| != 3|ling|
// and kClassMismatch when an id is outside its declared codebook range.
SyntheticUtterance vocode(std::span<const TokenId> linguistic, std::span<const TokenId> semantic,
                          const TokenSpace& space);

// Deterministic stand-in for a TTS front end: every text token expands into
// blocks_per_text_token blocks whose codes depend only on (text id, frame
// index within that token's expansion, seed). Throws kClassMismatch on a
// non-text id.
SyntheticUtterance pseudo_tts(std::span<const TokenId> text, std::size_t blocks_per_text_token,
                              std::uint64_t seed, const TokenSpace& space);

// JSONL record {"ling":[...],"sem":[...]}.
std::string utterance_to_json(const SyntheticUtterance& u);
SyntheticUtterance utterance_from_json(std::string_view line);

}  // namespace aqaa
