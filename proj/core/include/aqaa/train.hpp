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

#include "aqaa/dataset.hpp"
#include "aqaa/tiny_lm.hpp"

namespace aqaa {

enum class Stage { kSft1, kSft2, kDpo };

std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view name);

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Global gradient-norm clip; 0 disables.
  double clip_norm = 1.0;
};

// Adam with bias correction. A zero learning rate leaves weights untouched.
class AdamOptimizer {
 public:
  AdamOptimizer(const ParameterSet& like, AdamConfig config);

  void step(ParameterSet& weights, const Gradients& grads);
  std::size_t steps_taken() const noexcept { return t_; }

 private:
  AdamConfig config_;
  ParameterSet m_;
  ParameterSet v_;
  std::size_t t_ = 0;
};

// One training stage. sft1 makes exactly one pass over its data (optionally
// capped by max_steps); sft2 and dpo run `steps` batches, reshuffling at
// every pass over the data.
struct TrainPlan {
  Stage stage = Stage::kSft1;
  std::filesystem::path corpus;      // CLI: corpus dir (sft) or preference JSONL (dpo)
  std::filesystem::path init;        // CLI: checkpoint dir; empty = fresh init (sft1)
  std::filesystem::path output;      // CLI: output dir
  std::optional<std::size_t> max_steps;
  std::size_t steps = 200;
  std::size_t batch_size = 4;
  double lr = 3e-4;
  double beta = 0.1;
  std::uint64_t seed = 0;
  double clip_norm = 1.0;

  // Defaults per stage (lr 3e-4 for SFT, 1e-5 for DPO).
  static TrainPlan defaults(Stage stage);

  // Throws kInvalidConfiguration (e.g. beta <= 0 for dpo, batch_size 0).
  void validate() const;
};

std::string plan_to_json(const TrainPlan& plan);
TrainPlan plan_from_json(std::string_view text);

struct LogRow {
  std::size_t step = 0;
  double loss = 0.0;
  double margin = 0.0;  // DPO only
};

struct TrainLog {
  std::vector<LogRow> rows;
  double initial_batch_loss = 0.0;
  double epoch_mean_loss = 0.0;  // mean over all batches of the (last) pass
  std::uint64_t reference_fingerprint_start = 0;
  std::uint64_t reference_fingerprint_end = 0;
};

void write_log_csv(const std::filesystem::path& file, const TrainLog& log);

// Stage-2 data: the AQTAA examples.
// Full-parameter response-masked CE training. Deterministic given plan.seed.
// Throws DivergenceError on a non-finite batch loss.
Checkpoint run_sft(const Checkpoint& init, const std::vector<TrainingExample>& data, const TrainPlan& plan,
                   TrainLog* log = nullptr);

// Masked DPO against a frozen copy of init as the reference policy.
Checkpoint run_dpo(const Checkpoint& init, const std::vector<PreferencePair>& pairs, const TokenSpace& space,
                   const TrainPlan& plan, TrainLog* log = nullptr);

// Batch-averaged gradient over examples[indices] (fixed reduction order).
double batch_ce_gradient(const Checkpoint& ckpt, const std::vector<TrainingExample>& examples,
                         std::span<const std::size_t> indices, Gradients& grads);

}  // namespace aqaa
