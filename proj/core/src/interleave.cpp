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

#include "aqaa/interleave.hpp"

#include <numeric>
#include <string>

#include "aqaa/error.hpp"

namespace aqaa {

std::string_view to_string(RatioMode mode) {
  switch (mode) {
    case RatioMode::kRatio10_15: return "ratio_10_15";
    case RatioMode::kRatio6_50: return "ratio_6_50";
    case RatioMode::kRatio3_5: return "ratio_3_5";
    case RatioMode::kTextCot: return "text_cot";
    case RatioMode::kAudioOnly: return "audio_only";
  }
  return "unknown";
}

std::string_view to_string(ConcatMethod method) {
  switch (method) {
    case ConcatMethod::kMarkerRemoval: return "marker_removal";
    case ConcatMethod::kPreInterleaved: return "pre_interleaved";
    case ConcatMethod::kMarkerPreserving: return "marker_preserving";
  }
  return "unknown";
}

RatioMode parse_ratio_mode(std::string_view name) {
  for (RatioMode m : kAllRatioModes) {
    if (to_string(m) == name) return m;
  }
  fail(ErrorCode::kInvalidConfiguration, "unknown ratio mode '" + std::string(name) + "'");
}

ConcatMethod parse_concat_method(std::string_view name) {
  for (ConcatMethod m : kAllConcatMethods) {
    if (to_string(m) == name) return m;
  }
  fail(ErrorCode::kInvalidConfiguration, "unknown concatenation method '" + std::string(name) + "'");
}

std::optional<ChunkSizes> chunk_sizes(RatioMode mode) noexcept {
  switch (mode) {
    case RatioMode::kRatio10_15: return ChunkSizes{10, 15};
    case RatioMode::kRatio6_50: return ChunkSizes{6, 50};
    case RatioMode::kRatio3_5: return ChunkSizes{3, 5};
    case RatioMode::kTextCot:
    case RatioMode::kAudioOnly: return std::nullopt;
  }
  return std::nullopt;
}

TokenSeq merge_dual(std::span<const TokenId> linguistic, std::span<const TokenId> semantic) {
  if (2 * semantic.size() != 3 * linguistic.size() || linguistic.size() % kLinguisticPerBlock != 0) {
    fail(ErrorCode::kMisalignedStream, "cannot merge |ling|=" + std::to_string(linguistic.size()) +
                                           " with |sem|=" + std::to_string(semantic.size()));
  }
  TokenSeq out;
  out.reserve(linguistic.size() + semantic.size());
  const std::size_t blocks = linguistic.size() / kLinguisticPerBlock;
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t k = 0; k < kLinguisticPerBlock; ++k) out.push_back(linguistic[b * kLinguisticPerBlock + k]);
    for (std::size_t k = 0; k < kSemanticPerBlock; ++k) out.push_back(semantic[b * kSemanticPerBlock + k]);
  }
  return out;
}

DualTokens split_dual(std::span<const TokenId> merged, const TokenSpace& space) {
  DualTokens out;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    const bool want_linguistic = (i % kTokensPerBlock) < kLinguisticPerBlock;
    const TokenId id = merged[i];
    const TokenClass expected = want_linguistic ? TokenClass::kLinguistic : TokenClass::kSemantic;
    if (!space.contains(id) || space.classify(id) != expected) {
      throw FormatError(i, "expected a " + std::string(to_string(expected)) + " token in the [l,l,s,s,s] block");
    }
    (want_linguistic ? out.linguistic : out.semantic).push_back(id);
  }
  if (merged.size() % kTokensPerBlock != 0) {
    throw FormatError(merged.size() - merged.size() % kTokensPerBlock, "incomplete trailing block");
  }
  return out;
}

TokenSeq wrap_audio(std::span<const TokenId> payload, const TokenSpace& space) {
  TokenSeq out;
  out.reserve(payload.size() + 2);
  out.push_back(space.audio_start());
  out.insert(out.end(), payload.begin(), payload.end());
  out.push_back(space.audio_end());
  return out;
}

InterleavedSequence interleave_text_audio(std::span<const TokenId> text, std::span<const TokenId> audio,
                                          RatioMode mode, const TokenSpace& space) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!space.contains(text[i]) || !space.is_text(text[i])) {
      fail(ErrorCode::kClassMismatch, "text channel index " + std::to_string(i) + " holds non-text id " +
                                          std::to_string(text[i]));
    }
  }
  for (std::size_t i = 0; i < audio.size(); ++i) {
    if (!space.contains(audio[i]) || !space.is_audio(audio[i])) {
      fail(ErrorCode::kClassMismatch, "audio channel index " + std::to_string(i) + " holds non-audio id " +
                                          std::to_string(audio[i]));
    }
  }

  InterleavedSequence seq;
  seq.mode = mode;
  seq.space = space;
  auto& out = seq.tokens;
  out.reserve(text.size() + audio.size());

  if (mode == RatioMode::kAudioOnly) {
    out.assign(audio.begin(), audio.end());
    return seq;
  }
  const auto chunks = chunk_sizes(mode);
  if (!chunks) {  // text_cot
    out.assign(text.begin(), text.end());
    out.insert(out.end(), audio.begin(), audio.end());
    return seq;
  }

  std::size_t ti = 0;
  std::size_t ai = 0;
  while (ti < text.size() && ai < audio.size()) {
    const std::size_t nt = std::min(chunks->text, text.size() - ti);
    out.insert(out.end(), text.begin() + ti, text.begin() + ti + nt);
    ti += nt;
    const std::size_t na = std::min(chunks->audio, audio.size() - ai);
    out.insert(out.end(), audio.begin() + ai, audio.begin() + ai + na);
    ai += na;
  }
  out.insert(out.end(), text.begin() + ti, text.end());
  out.insert(out.end(), audio.begin() + ai, audio.end());
  return seq;
}

Channels deinterleave(std::span<const TokenId> tokens, const TokenSpace& space) {
  Channels ch;
  for (TokenId id : tokens) {
    (space.is_text(id) ? ch.text : ch.audio).push_back(id);
  }
  return ch;
}

std::vector<std::pair<std::size_t, std::size_t>> proportional_split(std::size_t total,
                                                                    std::span<const std::size_t> weights) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (weights.empty()) return out;
  const std::size_t weight_sum = std::accumulate(weights.begin(), weights.end(), std::size_t{0});
  std::size_t begin = 0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    const std::size_t share = weight_sum == 0 ? 0 : total * weights[i] / weight_sum;
    out.emplace_back(begin, begin + share);
    begin += share;
  }
  out.emplace_back(begin, total);
  return out;
}

namespace {

void check_segment(const TokenSeq& seg, std::size_t segment_index, std::size_t offset, const TokenSpace& space) {
  const std::string where = "segment " + std::to_string(segment_index);
  if (seg.size() < 2 || seg.front() != space.audio_start()) {
    throw FormatError(offset, where + " does not begin with <audio_start>");
  }
  if (seg.back() != space.audio_end()) {
    throw FormatError(offset + seg.size() - 1, where + " does not end with <audio_end>");
  }
  for (std::size_t i = 1; i + 1 < seg.size(); ++i) {
    if (!space.contains(seg[i]) || !space.is_audio(seg[i]) || space.is_marker(seg[i])) {
      throw FormatError(offset + i, where + " payload must hold codebook tokens only");
    }
  }
}

}  // namespace

InterleavedSequence concat_multilabel(const std::vector<TokenSeq>& segments, ConcatMethod method,
                                      std::span<const TokenId> text, const TokenSpace& space, RatioMode mode) {
  std::size_t offset = 0;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    check_segment(segments[s], s, offset, space);
    offset += segments[s].size();
  }

  switch (method) {
    case ConcatMethod::kMarkerRemoval: {
      TokenSeq payload;
      for (const auto& seg : segments) payload.insert(payload.end(), seg.begin() + 1, seg.end() - 1);
      const TokenSeq audio = segments.empty() ? TokenSeq{} : wrap_audio(payload, space);
      return interleave_text_audio(text, audio, mode, space);
    }
    case ConcatMethod::kMarkerPreserving: {
      TokenSeq audio;
      for (const auto& seg : segments) audio.insert(audio.end(), seg.begin(), seg.end());
      return interleave_text_audio(text, audio, mode, space);
    }
    case ConcatMethod::kPreInterleaved: {
      if (segments.empty()) return interleave_text_audio(text, {}, mode, space);
      std::vector<std::size_t> weights;
      for (const auto& seg : segments) weights.push_back(seg.size());
      const auto shares = proportional_split(text.size(), weights);
      InterleavedSequence out;
      out.mode = mode;
      out.space = space;
      for (std::size_t s = 0; s < segments.size(); ++s) {
        const auto [b, e] = shares[s];
        const auto piece = interleave_text_audio(text.subspan(b, e - b), segments[s], mode, space);
        out.piece_starts.push_back(out.tokens.size());
        out.tokens.insert(out.tokens.end(), piece.tokens.begin(), piece.tokens.end());
      }
      return out;
    }
  }
  fail(ErrorCode::kInvalidConfiguration, "unknown concatenation method");
}

}  // namespace aqaa
