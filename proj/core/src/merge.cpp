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

#include "aqaa/merge.hpp"

#include <cmath>
#include <string>

#include "aqaa/error.hpp"

namespace aqaa {
namespace {

// Double-double accumulator: hi + lo carries the running sum without intermediate rounding.
struct Dd {
  double hi = 0.0;
  double lo = 0.0;

  void add(double x) {
    const double s = hi + x;
    const double bb = s - hi;
    const double err = (hi - (s - bb)) + (x - bb);
    hi = s;
    lo += err;
  }
  void add_product(double a, double b) {
    const double p = a * b;
    add(p);
    lo += std::fma(a, b, -p);
  }
};

// (n.hi + n.lo) / (d.hi + d.lo), rounded once.
double dd_divide(const Dd& n, const Dd& d) {
  const double q = n.hi / d.hi;
  const double r = std::fma(-q, d.hi, n.hi) + n.lo - q * d.lo;
  return q + r / d.hi;
}

bool same_architecture(const ModelConfig& a, const ModelConfig& b) {
  ModelConfig x = a;
  x.seed = b.seed;
  return x == b;
}

}  // namespace

Checkpoint merge_checkpoints(std::span<const Checkpoint> ckpts, std::span<const double> weights) {
  if (ckpts.size() < 2) fail(ErrorCode::kInvalidConfiguration, "merging needs at least two checkpoints");
  if (weights.size() != ckpts.size()) {
    fail(ErrorCode::kInvalidConfiguration, std::to_string(weights.size()) + " weights for " +
                                               std::to_string(ckpts.size()) + " checkpoints");
  }
  Dd total;
  for (double w : weights) {
    if (!std::isfinite(w)) fail(ErrorCode::kInvalidConfiguration, "merge weights must be finite");
    total.add(w);
  }
  if (!(total.hi + total.lo > 0.0)) fail(ErrorCode::kInvalidConfiguration, "merge weights must have a positive sum");

  const Checkpoint& first = ckpts[0];
  for (std::size_t c = 1; c < ckpts.size(); ++c) {
    const auto& params = ckpts[c].weights.params;
    const std::size_t n = std::max(params.size(), first.weights.params.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (i >= params.size() || i >= first.weights.params.size()) {
        const std::string name = i < params.size() ? params[i].name : first.weights.params[i].name;
        throw IncompatibleCheckpointError(name, "checkpoint " + std::to_string(c) + " has a different tensor count");
      }
      const auto& a = first.weights.params[i];
      const auto& b = params[i];
      if (a.name != b.name || a.shape != b.shape) {
        throw IncompatibleCheckpointError(a.name, "checkpoint " + std::to_string(c) + " differs in name or shape");
      }
    }
    if (!same_architecture(first.config, ckpts[c].config)) {
      throw IncompatibleCheckpointError("config", "checkpoint " + std::to_string(c) + " has a different model config");
    }
  }

  Checkpoint out = first;
  for (std::size_t i = 0; i < out.weights.params.size(); ++i) {
    auto& dst = out.weights.params[i].values;
    for (std::size_t j = 0; j < dst.size(); ++j) {
      Dd acc;
      for (std::size_t c = 0; c < ckpts.size(); ++c) acc.add_product(weights[c], ckpts[c].weights.params[i].values[j]);
      dst[j] = dd_divide(acc, total);
    }
  }
  return out;
}

}  // namespace aqaa
