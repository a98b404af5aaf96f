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

#include <span>
#include <vector>

#include "aqaa/tiny_lm.hpp"

namespace aqaa {

// Default weights for (SFT stage 1, SFT stage 2, DPO).
inline constexpr double kDefaultMergeWeights[] = {5.0, 5.0, 1.0};

// Elementwise weighted average W = sum_i w_i W_i / sum_i w_i over every
// tensor, norm gains and embeddings included. The result takes the shared
// config of the inputs.
//
// Throws kInvalidConfiguration for fewer than two checkpoints, a weight count
// mismatch, non-finite weights or a non-positive weight sum, and
// IncompatibleCheckpointError naming the first tensor whose name or shape
// differs.
Checkpoint merge_checkpoints(std::span<const Checkpoint> ckpts, std::span<const double> weights);

}  // namespace aqaa
