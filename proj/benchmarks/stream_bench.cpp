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

#include <benchmark/benchmark.h>

#include "aqaa/dataset.hpp"
#include "aqaa/evalkit.hpp"
#include "aqaa/interleave.hpp"
#include "aqaa/merge.hpp"
#include "aqaa/rng.hpp"

namespace aqaa {
namespace {

const TokenSpace kSpace = build_token_space(512);

void BM_InterleaveRoundTrip(benchmark::State& state) {
  Rng rng(3);
  TokenSeq text(static_cast<std::size_t>(state.range(0)));
  for (auto& t : text) t = static_cast<TokenId>(rng.below(512));
  TokenSeq audio(text.size() * 3 / 2);
  for (auto& a : audio) a = static_cast<TokenId>(512 + rng.below(5120));
  for (auto _ : state) {
    const auto seq = interleave_text_audio(text, audio, RatioMode::kRatio10_15, kSpace);
    benchmark::DoNotOptimize(deinterleave(seq));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(text.size() + audio.size()));
}
BENCHMARK(BM_InterleaveRoundTrip)->Arg(100)->Arg(10000);

void BM_ValidateStream(benchmark::State& state) {
  const auto corpus = synth_corpus(5, 64, Task::kLabelSwitch, kSpace);
  const auto method = static_cast<ConcatMethod>(state.range(0));
  std::vector<TokenSeq> responses;
  for (const auto& p : corpus) {
    responses.push_back(make_response(build_aqtaa(p, 1, 1, kSpace), kSpace, RatioMode::kRatio10_15, method).tokens);
  }
  for (auto _ : state) {
    for (const auto& r : responses) benchmark::DoNotOptimize(validate_stream(r, kSpace, RatioMode::kRatio10_15, method));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(responses.size()));
}
BENCHMARK(BM_ValidateStream)->DenseRange(0, 2);

void BM_SynthCorpus(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(synth_corpus(1, static_cast<std::size_t>(state.range(0)), Task::kEcho, kSpace));
}
BENCHMARK(BM_SynthCorpus)->Arg(512);

void BM_Merge(benchmark::State& state) {
  const std::vector<Checkpoint> cs = {init_model(default_model_config(kSpace, 1)), init_model(default_model_config(kSpace, 2)),
                                      init_model(default_model_config(kSpace, 3))};
  for (auto _ : state) benchmark::DoNotOptimize(merge_checkpoints(cs, kDefaultMergeWeights));
}
BENCHMARK(BM_Merge)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace aqaa
