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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aqaa/codec_sim.hpp"
#include "aqaa/interleave.hpp"
#include "aqaa/token_space.hpp"

namespace aqaa {

enum class Task { kEcho, kArithmetic, kLabelSwitch };

std::string_view to_string(Task task);
Task parse_task(std::string_view name);

// A contiguous run of answer text spoken in one speech state.
struct AnswerSegment {
  std::size_t length = 0;
  std::uint32_t label = 0;

  friend bool operator==(const AnswerSegment&, const AnswerSegment&) = default;
};

// Audio query / text answer. An empty segment list means one segment with
// label 0 covering the whole answer.
struct AqtaPair {
  Task task = Task::kEcho;
  SyntheticUtterance query_audio;
  TokenSeq answer_text;
  std::vector<AnswerSegment> segments;

  friend bool operator==(const AqtaPair&, const AqtaPair&) = default;
};

// Audio query / text answer / audio answer. segment_audio[i] is the speech
// for segments[i]; answer_audio is their concatenation.
struct AqtaaPair {
  AqtaPair base;
  SyntheticUtterance answer_audio;
  std::vector<SyntheticUtterance> segment_audio;

  friend bool operator==(const AqtaaPair&, const AqtaaPair&) = default;
};

enum class ExampleKind { kAqta, kAqtaa };

struct TrainingExample {
  TokenSeq tokens;
  std::vector<std::uint8_t> loss_mask;  // 1 on response positions only
  std::size_t prompt_length = 0;
  ExampleKind kind = ExampleKind::kAqta;

  std::size_t response_length() const noexcept { return tokens.size() - prompt_length; }

  friend bool operator==(const TrainingExample&, const TrainingExample&) = default;
};

struct PreferencePair {
  TokenSeq prompt;
  TokenSeq chosen;
  TokenSeq rejected;

  friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

// Knobs shared by everything that turns pairs into token sequences. The voice
// seeds are constant across corpora so training and held-out data share one
// "speaker" for queries and one for answers.
struct DatasetOptions {
  std::size_t blocks_per_text_token = 1;
  std::uint64_t answer_voice_seed = 0xA5A5'0001ULL;
  RatioMode mode = RatioMode::kRatio10_15;
  ConcatMethod method = ConcatMethod::kMarkerPreserving;
};

// Effective segment list (the implicit single segment when none are stored).
std::vector<AnswerSegment> effective_segments(const AqtaPair& p);

// Voice seed for one speech state; label 0 is the plain voice.
std::uint64_t label_voice_seed(std::uint64_t voice_seed, std::uint32_t label);

// Throws kInvalidConfiguration when the answer is empty, non-text, or the
// segments do not tile it.
void validate_pair(const AqtaPair& p, const TokenSpace& space);

AqtaaPair build_aqtaa(const AqtaPair& p, std::size_t blocks_per_text_token, std::uint64_t seed,
                      const TokenSpace& space);

// <audio_start> merge_dual(tokenize(query)) <audio_end>
TokenSeq make_prompt(const SyntheticUtterance& query, const TokenSpace& space);

// AQTAA response: every segment's speech is merged, marker-wrapped, then
// spliced with the answer text per options.method and options.mode.
InterleavedSequence make_response(const AqtaaPair& p, const TokenSpace& space, RatioMode mode,
                                  ConcatMethod method);

TrainingExample make_training_example(const AqtaPair& p, const TokenSpace& space);
TrainingExample make_training_example(const AqtaaPair& p, const TokenSpace& space, RatioMode mode,
                                      ConcatMethod method);

// Both responses go through the AQTAA response path. The prompt pair's
// segmentation is reused when it tiles an answer, otherwise that answer is
// spoken as one segment. Throws kDegeneratePair when the answers are
// identical.
PreferencePair make_preference_pair(const AqtaPair& prompt, const TokenSeq& good_answer,
                                    const TokenSeq& bad_answer, const TokenSpace& space,
                                    const DatasetOptions& options);

// Synthetic lexicon. Text id 0 is never emitted.
struct Lexicon {
  static constexpr TokenId kSymbolBase = 1;
  static constexpr TokenId kDigitBase = 64;   // digits 0..9
  static constexpr TokenId kPlus = 74;
  static constexpr TokenId kTagBase = 80;     // speech-state tags, label 1..
  static constexpr std::uint32_t kMaxLabels = 8;
  static constexpr std::uint32_t kMinTextSize = kTagBase + kMaxLabels + 1;
};

struct CorpusOptions {
  std::size_t alphabet = 8;  // echo / label_switch symbols
  std::size_t min_symbols = 3;
  std::size_t max_symbols = 3;
  std::uint32_t labels = 3;  // label_switch speech states
  std::uint64_t query_voice_seed = 0x51'0001ULL;
  std::size_t blocks_per_text_token = 1;
  std::size_t label_switch_mix = 0;  // label_switch pairs appended to other tasks; stage-2 pool
};

// Deterministic corpus; example i uses mix_seed(seed, i). Throws
// kInvalidConfiguration when n == 0 or the options are inconsistent.
std::vector<AqtaPair> synth_corpus(std::uint64_t seed, std::size_t n, Task task, const TokenSpace& space,
                                   const CorpusOptions& options = {});

// Recovers the text spoken in an utterance produced by pseudo_tts under the
// given voice, restricted to candidate ids. nullopt when any block matches no
// candidate.
std::optional<TokenSeq> decode_speech(const SyntheticUtterance& u, std::span<const TokenId> candidates,
                                      std::size_t blocks_per_text_token, std::uint64_t voice_seed,
                                      const TokenSpace& space);

// The answer text the task demands for this query, decoded from the query
// audio alone. nullopt when the query cannot be decoded.
std::optional<TokenSeq> expected_answer(const SyntheticUtterance& query, Task task, const TokenSpace& space,
                                        const CorpusOptions& options = {});

// Segment layout the task demands for this query.
std::vector<AnswerSegment> expected_segments(const SyntheticUtterance& query, Task task,
                                             const TokenSpace& space, const CorpusOptions& options = {});

// True when the answer text is what the query asks for.
std::vector<AqtaPair> select_stage2(const std::vector<AqtaPair>& corpus);

bool check_answer(const AqtaPair& p, const TokenSpace& space, const CorpusOptions& options = {});

// A wrong answer of the same length as the right one (one token replaced).
TokenSeq corrupt_answer(const TokenSeq& answer, Task task, std::uint64_t seed, const CorpusOptions& options = {});

// Every pair yields an AQTA example followed by an AQTAA example.
std::vector<TrainingExample> build_sft_examples(const std::vector<AqtaPair>& corpus, const TokenSpace& space,
                                                const DatasetOptions& options, bool include_aqta = true);

// Chosen = the corpus answer, rejected = corrupt_answer of it.
std::vector<PreferencePair> build_preference_pairs(const std::vector<AqtaPair>& corpus, const TokenSpace& space,
                                                   const DatasetOptions& options,
                                                   const CorpusOptions& corpus_options, std::uint64_t seed);

// ---- JSONL persistence ----------------------------------------------------

struct CorpusManifest {
  std::uint64_t seed = 0;
  Task task = Task::kEcho;
  std::size_t count = 0;
  std::uint32_t text_size = 0;
  CorpusOptions options;
};

std::string pair_to_json(const AqtaPair& p);
AqtaPair pair_from_json(std::string_view line);
std::string example_to_json(const TrainingExample& ex);
TrainingExample example_from_json(std::string_view line);
std::string preference_to_json(const PreferencePair& p);
PreferencePair preference_from_json(std::string_view line);

// corpus.jsonl plus manifest.json inside dir.
void write_corpus(const std::filesystem::path& dir, const std::vector<AqtaPair>& pairs,
                  const CorpusManifest& manifest);
std::vector<AqtaPair> read_corpus(const std::filesystem::path& dir, CorpusManifest* manifest = nullptr);

void write_examples(const std::filesystem::path& file, const std::vector<TrainingExample>& examples);
std::vector<TrainingExample> read_examples(const std::filesystem::path& file);
void write_preferences(const std::filesystem::path& file, const std::vector<PreferencePair>& pairs);
std::vector<PreferencePair> read_preferences(const std::filesystem::path& file);

}  // namespace aqaa
