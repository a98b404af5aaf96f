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

#include <atomic>
#include <cstdlib>
#include <stdexcept>

#include "aqaa/parallel.hpp"
#include "aqaa/train.hpp"
#include "test_support.hpp"

namespace aqaa {
namespace {

class ThreadsEnv {
 public:
  explicit ThreadsEnv(const char* v) { ::setenv("AQAA_FORGE_THREADS", v, 1); }
  ~ThreadsEnv() { ::unsetenv("AQAA_FORGE_THREADS"); }
};

TEST(Parallel, WorkerCountFromEnvironment) {
  {
    ThreadsEnv env("3");
    EXPECT_EQ(worker_count(), 3u);
  }
  {
    ThreadsEnv env("garbage");
    EXPECT_GE(worker_count(), 1u);
  }
  ThreadsEnv env("0");
  EXPECT_GE(worker_count(), 1u);
}

TEST(Parallel, EveryIndexOnce) {
  ThreadsEnv env("4");
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i].fetch_add(1); });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  parallel_for(0, [](std::size_t) { FAIL(); });
}

TEST(Parallel, PropagatesExceptions) {
  ThreadsEnv env("4");
  EXPECT_THROW(parallel_for(16, [](std::size_t i) {
                 if (i == 9) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

TEST(Parallel, TrainingIndependentOfThreadCount) {
  const TokenSpace space = build_token_space(89);
  const auto corpus = synth_corpus(2, 8, Task::kEcho, space);
  const auto sft = build_sft_examples(corpus, space, DatasetOptions{});
  const auto prefs = build_preference_pairs(corpus, space, DatasetOptions{}, CorpusOptions{}, 3);
  const auto init = init_model(testing::small_config(space.total_size()));
  auto sp = TrainPlan::defaults(Stage::kSft2);
  sp.steps = 3;
  auto dp = TrainPlan::defaults(Stage::kDpo);
  dp.steps = 3;
  auto run = [&] {
    const auto a = run_sft(init, sft, sp);
    return run_dpo(a, prefs, space, dp);
  };
  Checkpoint one, many;
  {
    ThreadsEnv env("1");
    one = run();
  }
  {
    ThreadsEnv env("5");
    many = run();
  }
  EXPECT_EQ(one, many);
}

}  // namespace
}  // namespace aqaa
