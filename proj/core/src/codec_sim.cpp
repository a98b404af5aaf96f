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

#include "aqaa/codec_sim.hpp"

#include <algorithm>
#include <string>

#include "aqaa/error.hpp"
#include "aqaa/rng.hpp"
#include "json.hpp"

namespace aqaa {
namespace {

std::string sizes(std::size_t ling, std::size_t sem) {
  return "|ling|=" + std::to_string(ling) + ", |sem|=" + std::to_string(sem);
}

void check_ratio(std::size_t ling, std::size_t sem) {
  if (2 * sem != 3 * ling || ling % kLinguisticPerBlock != 0) {
    fail(ErrorCode::kMisalignedStream, "streams violate the 2:3 block ratio (" + sizes(ling, sem) + ")");
  }
}

}  // namespace

void validate_utterance(const SyntheticUtterance& u) {
  check_ratio(u.linguistic.size(), u.semantic.size());
  for (std::size_t i = 0; i < u.linguistic.size(); ++i) {
    if (u.linguistic[i] >= kLinguisticCodebook) {
      fail(ErrorCode::kInvalidFrame, "linguistic frame " + std::to_string(i) + " has code " +
                                         std::to_string(u.linguistic[i]));
    }
  }
  for (std::size_t i = 0; i < u.semantic.size(); ++i) {
    if (u.semantic[i] >= kSemanticCodebook) {
      fail(ErrorCode::kInvalidFrame, "semantic frame " + std::to_string(i) + " has code " +
                                         std::to_string(u.semantic[i]));
    }
  }
}

SyntheticUtterance pad_to_blocks(std::vector<FrameCode> linguistic, std::vector<FrameCode> semantic) {
  const std::size_t blocks =
      std::max((linguistic.size() + kLinguisticPerBlock - 1) / kLinguisticPerBlock,
               (semantic.size() + kSemanticPerBlock - 1) / kSemanticPerBlock);
  linguistic.resize(blocks * kLinguisticPerBlock, kSilenceCode);
  semantic.resize(blocks * kSemanticPerBlock, kSilenceCode);
  return SyntheticUtterance{std::move(linguistic), std::move(semantic)};
}

SyntheticUtterance concat(const std::vector<SyntheticUtterance>& parts) {
  SyntheticUtterance out;
  for (const auto& p : parts) {
    out.linguistic.insert(out.linguistic.end(), p.linguistic.begin(), p.linguistic.end());
    out.semantic.insert(out.semantic.end(), p.semantic.begin(), p.semantic.end());
  }
  return out;
}

DualTokens tokenize(const SyntheticUtterance& u, const TokenSpace& space) {
  validate_utterance(u);
  DualTokens out;
  out.linguistic.reserve(u.linguistic.size());
  out.semantic.reserve(u.semantic.size());
  for (FrameCode c : u.linguistic) out.linguistic.push_back(space.linguistic_offset() + c);
  for (FrameCode c : u.semantic) out.semantic.push_back(space.semantic_offset() + c);
  return out;
}

SyntheticUtterance vocode(std::span<const TokenId> linguistic, std::span<const TokenId> semantic,
                          const TokenSpace& space) {
  check_ratio(linguistic.size(), semantic.size());
  SyntheticUtterance u;
  u.linguistic.reserve(linguistic.size());
  u.semantic.reserve(semantic.size());
  for (std::size_t i = 0; i < linguistic.size(); ++i) {
    const TokenId id = linguistic[i];
    if (!space.contains(id) || space.classify(id) != TokenClass::kLinguistic) {
      fail(ErrorCode::kClassMismatch,
           "linguistic stream index " + std::to_string(i) + " holds non-linguistic id " + std::to_string(id));
    }
    u.linguistic.push_back(static_cast<FrameCode>(id - space.linguistic_offset()));
  }
  for (std::size_t i = 0; i < semantic.size(); ++i) {
    const TokenId id = semantic[i];
    if (!space.contains(id) || space.classify(id) != TokenClass::kSemantic) {
      fail(ErrorCode::kClassMismatch,
           "semantic stream index " + std::to_string(i) + " holds non-semantic id " + std::to_string(id));
    }
    u.semantic.push_back(static_cast<FrameCode>(id - space.semantic_offset()));
  }
  return u;
}

SyntheticUtterance pseudo_tts(std::span<const TokenId> text, std::size_t blocks_per_text_token,
                              std::uint64_t seed, const TokenSpace& space) {
  SyntheticUtterance u;
  const std::size_t ling_per_token = blocks_per_text_token * kLinguisticPerBlock;
  const std::size_t sem_per_token = blocks_per_text_token * kSemanticPerBlock;
  u.linguistic.reserve(text.size() * ling_per_token);
  u.semantic.reserve(text.size() * sem_per_token);
  for (std::size_t t = 0; t < text.size(); ++t) {
    const TokenId id = text[t];
    if (!space.contains(id) || space.classify(id) != TokenClass::kText) {
      fail(ErrorCode::kClassMismatch,
           "pseudo_tts input index " + std::to_string(t) + " is not a text token (id " + std::to_string(id) + ")");
    }
    const std::uint64_t token_seed = mix_seed(seed, id);
    for (std::size_t f = 0; f < ling_per_token; ++f) {
      u.linguistic.push_back(static_cast<FrameCode>(mix_seed(token_seed, 2 * f) % kLinguisticCodebook));
    }
    for (std::size_t f = 0; f < sem_per_token; ++f) {
      u.semantic.push_back(static_cast<FrameCode>(mix_seed(token_seed, 2 * f + 1) % kSemanticCodebook));
    }
  }
  return u;
}

std::string utterance_to_json(const SyntheticUtterance& u) {
  nlohmann::json j;
  j["ling"] = u.linguistic;
  j["sem"] = u.semantic;
  return j.dump();
}

SyntheticUtterance utterance_from_json(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
    const auto ling = j.at("ling").get<std::vector<std::uint32_t>>();
    const auto sem = j.at("sem").get<std::vector<std::uint32_t>>();
    SyntheticUtterance u;
    for (std::uint32_t c : ling) {
      if (c >= kLinguisticCodebook) fail(ErrorCode::kInvalidFrame, "linguistic code " + std::to_string(c));
      u.linguistic.push_back(static_cast<FrameCode>(c));
    }
    for (std::uint32_t c : sem) {
      if (c >= kSemanticCodebook) fail(ErrorCode::kInvalidFrame, "semantic code " + std::to_string(c));
      u.semantic.push_back(static_cast<FrameCode>(c));
    }
    validate_utterance(u);
    return u;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kIo, std::string("malformed utterance record: ") + e.what());
  }
}

}  // namespace aqaa
