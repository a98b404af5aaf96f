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

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aqaa/codec_sim.hpp"
#include "aqaa/token_space.hpp"

namespace aqaa {

// Text/audio layouts of a response. The three ratio modes alternate fixed
// size chunks; text_cot emits all text before any audio; audio_only drops
// the text channel entirely.
enum class RatioMode { kRatio10_15, kRatio6_50, kRatio3_5, kTextCot, kAudioOnly };

inline constexpr std::array<RatioMode, 5> kAllRatioModes = {
    RatioMode::kRatio10_15, RatioMode::kRatio6_50, RatioMode::kRatio3_5, RatioMode::kTextCot,
    RatioMode::kAudioOnly};

// How single-label audio segments are spliced into one multi-label response.
enum class ConcatMethod { kMarkerRemoval, kPreInterleaved, kMarkerPreserving };

inline constexpr std::array<ConcatMethod, 3> kAllConcatMethods = {
    ConcatMethod::kMarkerRemoval, ConcatMethod::kPreInterleaved, ConcatMethod::kMarkerPreserving};

std::string_view to_string(RatioMode mode);
std::string_view to_string(ConcatMethod method);
// Both throw kInvalidConfiguration on an unknown name.
RatioMode parse_ratio_mode(std::string_view name);
ConcatMethod parse_concat_method(std::string_view name);

struct ChunkSizes {
  std::size_t text;
  std::size_t audio;
};

// Chunk sizes for the three alternating modes; nullopt for text_cot and
// audio_only.
std::optional<ChunkSizes> chunk_sizes(RatioMode mode) noexcept;

struct InterleavedSequence {
  TokenSeq tokens;
  RatioMode mode = RatioMode::kRatio10_15;
  TokenSpace space = TokenSpace::build(1);
  // Offsets at which independently interleaved pieces begin. Empty for a
  // sequence produced by a single interleave pass; filled by pre-interleaved
  // concatenation so the chunk law can be checked per piece.
  std::vector<std::size_t> piece_starts;

  friend bool operator==(const InterleavedSequence&, const InterleavedSequence&) = default;
};

// Dual-codebook merge: per 120 ms block emits [l, l, s, s, s]. Throws
// kMisalignedStream when 2|sem| != 3|ling|.
TokenSeq merge_dual(std::span<const TokenId> linguistic, std::span<const TokenId> semantic);

// Inverse of merge_dual. Throws FormatError carrying the first index that
// breaks the [l, l, s, s, s] block pattern.
DualTokens split_dual(std::span<const TokenId> merged, const TokenSpace& space);

// <audio_start> payload <audio_end>.
TokenSeq wrap_audio(std::span<const TokenId> payload, const TokenSpace& space);

// Greedy chunked interleave. Each round takes up to n_text text tokens then up
// to n_audio audio tokens; once text runs out the remaining audio is appended
// and once audio runs out the remaining text is appended. Markers are audio
// tokens and count toward the audio budget. Throws kClassMismatch when a
// channel holds a token of the wrong class.
InterleavedSequence interleave_text_audio(std::span<const TokenId> text, std::span<const TokenId> audio,
                                          RatioMode mode, const TokenSpace& space);

struct Channels {
  TokenSeq text;
  TokenSeq audio;

  friend bool operator==(const Channels&, const Channels&) = default;
};

// Stable partition by token class.
Channels deinterleave(std::span<const TokenId> tokens, const TokenSpace& space);
inline Channels deinterleave(const InterleavedSequence& seq) { return deinterleave(seq.tokens, seq.space); }

// Splices marker-wrapped single-label segments and interleaves them with text.
//   marker_removal:    strip markers, join payloads, wrap once, interleave
//   marker_preserving: join segments intact, interleave
//   pre_interleaved:   interleave each segment with its share of the text,
//                      then join; shares are contiguous, proportional to
//                      segment length, remainder on the last segment
// Throws FormatError when a segment is not wrapped in exactly one marker pair.
InterleavedSequence concat_multilabel(const std::vector<TokenSeq>& segments, ConcatMethod method,
                                      std::span<const TokenId> text, const TokenSpace& space,
                                      RatioMode mode = RatioMode::kRatio10_15);

// Contiguous text shares proportional to the given weights (integer floor,
// remainder to the last share).
std::vector<std::pair<std::size_t, std::size_t>> proportional_split(std::size_t total,
                                                                    std::span<const std::size_t> weights);

}  // namespace aqaa
