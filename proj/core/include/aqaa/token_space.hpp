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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace aqaa {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;

inline constexpr std::uint32_t kLinguisticCodebook = 1024;
inline constexpr std::uint32_t kSemanticCodebook = 4096;
inline constexpr std::uint32_t kAudioCodebookTotal = kLinguisticCodebook + kSemanticCodebook;
inline constexpr std::uint32_t kMarkerCount = 2;

enum class TokenClass { kText, kLinguistic, kSemantic, kMarker };

std::string_view to_string(TokenClass cls);

// Merged vocabulary layout:
//   [0, text)                      text
//   [text, text+1024)              linguistic codebook
//   [text+1024, text+5120)         semantic codebook
//   text+5120                      <audio_start>
//   text+5121                      <audio_end>
// Immutable once built.
class TokenSpace {
 public:
  // Throws kInvalidConfiguration when text_size == 0.
  static TokenSpace build(std::uint32_t text_size);

  std::uint32_t text_size() const noexcept { return text_size_; }
  std::uint32_t linguistic_size() const noexcept { return kLinguisticCodebook; }
  std::uint32_t semantic_size() const noexcept { return kSemanticCodebook; }
  std::uint32_t total_size() const noexcept { return text_size_ + kAudioCodebookTotal + kMarkerCount; }

  TokenId linguistic_offset() const noexcept { return text_size_; }
  TokenId semantic_offset() const noexcept { return text_size_ + kLinguisticCodebook; }
  TokenId audio_start() const noexcept { return text_size_ + kAudioCodebookTotal; }
  TokenId audio_end() const noexcept { return text_size_ + kAudioCodebookTotal + 1; }

  // Throws kOutOfVocabulary for id >= total_size().
  TokenClass classify(TokenId id) const;

  // Audio-token set membership: linguistic, semantic and both markers.
  bool is_audio(TokenId id) const { return classify(id) != TokenClass::kText; }
  bool is_text(TokenId id) const { return classify(id) == TokenClass::kText; }
  bool is_marker(TokenId id) const noexcept { return id == audio_start() || id == audio_end(); }
  bool contains(TokenId id) const noexcept { return id < total_size(); }

  friend bool operator==(const TokenSpace&, const TokenSpace&) = default;

 private:
  explicit TokenSpace(std::uint32_t text_size) : text_size_(text_size) {}

  std::uint32_t text_size_;
};

inline TokenSpace build_token_space(std::uint32_t text_size) { return TokenSpace::build(text_size); }

// Throws kOutOfVocabulary on the first id outside the space.
void check_in_vocabulary(std::span<const TokenId> tokens, const TokenSpace& space);

}  // namespace aqaa
