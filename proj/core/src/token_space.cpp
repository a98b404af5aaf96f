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

#include "aqaa/token_space.hpp"

#include <string>

#include "aqaa/error.hpp"

namespace aqaa {

std::string_view to_string(TokenClass cls) {
  switch (cls) {
    case TokenClass::kText: return "text";
    case TokenClass::kLinguistic: return "linguistic";
    case TokenClass::kSemantic: return "semantic";
    case TokenClass::kMarker: return "marker";
  }
  return "unknown";
}

TokenSpace TokenSpace::build(std::uint32_t text_size) {
  if (text_size == 0) fail(ErrorCode::kInvalidConfiguration, "text_size must be at least 1");
  return TokenSpace(text_size);
}

TokenClass TokenSpace::classify(TokenId id) const {
  if (id < linguistic_offset()) return TokenClass::kText;
  if (id < semantic_offset()) return TokenClass::kLinguistic;
  if (id < audio_start()) return TokenClass::kSemantic;
  if (id < total_size()) return TokenClass::kMarker;
  fail(ErrorCode::kOutOfVocabulary, "token id " + std::to_string(id) + " >= vocabulary size " +
                                        std::to_string(total_size()));
}

void check_in_vocabulary(std::span<const TokenId> tokens, const TokenSpace& space) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!space.contains(tokens[i])) {
      fail(ErrorCode::kOutOfVocabulary, "token id " + std::to_string(tokens[i]) + " at index " +
                                            std::to_string(i) + " outside vocabulary");
    }
  }
}

}  // namespace aqaa
