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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aqaa/dataset.hpp"
#include "aqaa/interleave.hpp"
#include "aqaa/tiny_lm.hpp"
#include "aqaa/train.hpp"

namespace aqaa {

// ---- perplexity ---------------------------------------------------------------

struct ClassNll {
  double sum = 0.0;
  std::size_t count = 0;
};

struct CodebookPerplexity {
  std::optional<double> text;
  std::optional<double> linguistic;
  std::optional<double> semantic;
  // Raw accumulators, indexed by TokenClass (markers included).
  std::array<ClassNll, 4> nll{};
};

// ppl_c = exp(mean NLL over counted positions whose target has class c);
// absent when no target of that class is counted. Throws kInvalidConfiguration
// on an empty corpus.
CodebookPerplexity perplexity_per_codebook(const Checkpoint& ckpt, const std::vector<TrainingExample>& corpus,
                                           const TokenSpace& space);

// Mean of the per-example response CE.
double mean_ce(const Checkpoint& ckpt, const std::vector<TrainingExample>& corpus);

// Mean beta * (delta_w - delta_l) of policy against reference.
double mean_preference_margin(const Checkpoint& policy, const Checkpoint& reference,
                              const std::vector<PreferencePair>& pairs, const TokenSpace& space, double beta);

// ---- format validation -------------------------------------------------------

struct ChunkViolation {
  std::size_t index = 0;  // first token of the offending run
  std::string what;
};

struct FormatReport {
  bool well_formed_markers = true;
  std::optional<std::size_t> first_marker_error;
  std::vector<ChunkViolation> chunk_law_violations;
  std::array<std::size_t, 4> class_histogram{};  // indexed by TokenClass
  bool out_of_vocabulary = false;

  bool valid() const noexcept {
    return well_formed_markers && chunk_law_violations.empty() && !out_of_vocabulary;
  }
};

// Checks that <audio_start>/<audio_end> form flat, closed pairs and that the
// text/audio run structure is exactly what the sequence's mode produces:
//   ratio (a, b): text first when both channels are present; every text run
//     but the last has length a and every audio run but the last length b;
//     a final text run that precedes audio has at most a tokens and a final
//     audio run that precedes text at most b tokens.
//   text_cot: at most one text run, before all audio.
//   audio_only: no text.
// Sequences with piece_starts are checked piece by piece.
FormatReport validate_format(const InterleavedSequence& seq);

// Piece boundaries of a pre_interleaved sequence recovered from its channels; empty if the
// audio channel is not a run of marker-wrapped segments.
std::vector<std::size_t> infer_piece_starts(std::span<const TokenId> tokens, const TokenSpace& space,
                                            RatioMode mode);

// validate_format for a bare token stream produced with the given concatenation method.
FormatReport validate_stream(std::span<const TokenId> tokens, const TokenSpace& space, RatioMode mode,
                             ConcatMethod method);

// ---- end-to-end round trip ---------------------------------------------------

struct RoundTripReport {
  TokenSeq prompt;
  TokenSeq generated;
  TokenSeq response_text;
  TokenSeq response_audio;
  std::optional<SyntheticUtterance> response_utterance;
  std::string vocode_error;  // empty when vocoding succeeded
  FormatReport format;
};

struct RoundTripOptions {
  std::size_t max_new = 128;
  RatioMode mode = RatioMode::kRatio10_15;
  std::size_t stop_count = 1;  // audio_end tokens that end the response
};

// tokenize -> merge_dual -> prompt -> greedy generate (stops after
// <audio_end>) -> deinterleave -> split_dual -> vocode. Never throws on a
// malformed generation; every failure lands in the report.
RoundTripReport aqaa_round_trip(const Checkpoint& ckpt, const SyntheticUtterance& query, const TokenSpace& space,
                                const RoundTripOptions& options = {});

// True when the response text is the task's answer for the query and the
// response speech is exactly that answer spoken by the answer voice.
bool round_trip_correct(const RoundTripReport& report, const SyntheticUtterance& query, Task task,
                        const TokenSpace& space, const CorpusOptions& corpus_options,
                        const DatasetOptions& dataset_options);

// ---- ablation harness --------------------------------------------------------

struct AblationOptions {
  std::size_t sft_steps = 10;
  std::size_t batch_size = 4;
  double lr = 3e-4;
  double beta = 0.1;
  std::size_t eval_examples = 16;
  std::size_t generations = 4;
  std::size_t max_new = 96;
  std::uint64_t seed = 0;
  DatasetOptions dataset;
};

struct AblationRow {
  RatioMode mode = RatioMode::kRatio10_15;
  ConcatMethod method = ConcatMethod::kMarkerPreserving;
  double ce = 0.0;
  double margin = 0.0;
  double validity_rate = 0.0;
  CodebookPerplexity ppl;
};

// One row per (mode, method): fine-tune base on AQTAA examples built with
// that configuration, then measure held-out CE, preference margin against
// base, format validity of greedy generations and per-codebook perplexity.
// Every row uses the same seeds. Throws kInvalidConfiguration when a set is
// empty.
std::vector<AblationRow> ablation_run(const Checkpoint& base, const std::vector<RatioMode>& modes,
                                      const std::vector<ConcatMethod>& methods,
                                      const std::vector<AqtaPair>& train_corpus,
                                      const std::vector<AqtaPair>& eval_corpus, const TokenSpace& space,
                                      const CorpusOptions& corpus_options, const AblationOptions& options);

std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace aqaa
