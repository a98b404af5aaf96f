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

#include <algorithm>
#include <cmath>

#include "aqaa/error.hpp"
#include "aqaa/merge.hpp"
#include "test_support.hpp"

namespace aqaa {
namespace {

Checkpoint filled(std::uint64_t seed) { return init_model(testing::small_config(600, seed)); }

Checkpoint constant(double v) {
  auto c = filled(1);
  for (auto& p : c.weights.params) std::fill(p.values.begin(), p.values.end(), v);
  return c;
}

std::int64_t max_ulps(const Checkpoint& a, const Checkpoint& b) {
  std::int64_t m = 0;
  for (std::size_t i = 0; i < a.weights.params.size(); ++i) {
    const auto& x = a.weights.params[i].values;
    const auto& y = b.weights.params[i].values;
    for (std::size_t j = 0; j < x.size(); ++j) m = std::max<std::int64_t>(m, testing::ulp_distance(x[j], y[j]));
  }
  return m;
}

TEST(Merge, EighteenElevenths) {
  const std::vector<Checkpoint> cs = {constant(1.0), constant(2.0), constant(3.0)};
  const auto m = merge_checkpoints(cs, kDefaultMergeWeights);
  for (const auto& p : m.weights.params) {
    for (double v : p.values) EXPECT_EQ(v, 18.0 / 11.0);
  }
}

TEST(Merge, Identities) {
  const auto a = filled(2), b = filled(3), c = filled(4);
  const std::vector<Checkpoint> same = {a, a, a};
  EXPECT_LE(max_ulps(merge_checkpoints(same, kDefaultMergeWeights), a), 2);
  const std::vector<Checkpoint> abc = {a, b, c};
  const double w100[] = {1.0, 0.0, 0.0};
  EXPECT_EQ(max_ulps(merge_checkpoints(abc, w100), a), 0);
  const double w010[] = {0.0, 3.5, 0.0};
  EXPECT_EQ(max_ulps(merge_checkpoints(abc, w010), b), 0);
}

TEST(Merge, HomogeneityAndPermutation) {
  const std::vector<Checkpoint> abc = {filled(2), filled(3), filled(4)};
  const auto base = merge_checkpoints(abc, kDefaultMergeWeights);
  // k chosen so 5k is exact; a rounded 5k would be a different weight vector.
  for (double k : {0.001953125, 0.75, 3.0, 7.0, 1e6}) {
    const double w[] = {5 * k, 5 * k, 1 * k};
    EXPECT_LE(max_ulps(merge_checkpoints(abc, w), base), 2) << k;
  }
  const std::vector<Checkpoint> cab = {abc[2], abc[0], abc[1]};
  const double w[] = {1.0, 5.0, 5.0};
  EXPECT_LE(max_ulps(merge_checkpoints(cab, w), base), 2);
}

TEST(Merge, ElementwiseOracle) {
  const std::vector<Checkpoint> ab = {filled(5), filled(6)};
  const double w[] = {0.25, 0.75};
  const auto m = merge_checkpoints(ab, w);
  EXPECT_EQ(m.config, ab[0].config);
  for (std::size_t i = 0; i < m.weights.params.size(); ++i) {
    const auto& x = ab[0].weights.params[i].values;
    const auto& y = ab[1].weights.params[i].values;
    for (std::size_t j = 0; j < x.size(); j += 7) {
      EXPECT_NEAR(m.weights.params[i].values[j], 0.25 * x[j] + 0.75 * y[j], 1e-15);
    }
  }
}

TEST(Merge, Linearity) {
  const auto a = filled(7), b = filled(8);
  const double lam = 0.3;
  auto pre = a;
  for (std::size_t i = 0; i < pre.weights.params.size(); ++i) {
    auto& v = pre.weights.params[i].values;
    const auto& y = b.weights.params[i].values;
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = lam * v[j] + (1 - lam) * y[j];
  }
  const std::vector<Checkpoint> ab = {a, b};
  const double w[] = {lam, 1 - lam};
  const auto m = merge_checkpoints(ab, w);
  for (std::size_t i = 0; i < m.weights.params.size(); ++i) {
    const auto& x = m.weights.params[i].values;
    const auto& y = pre.weights.params[i].values;
    for (std::size_t j = 0; j < x.size(); ++j) ASSERT_NEAR(x[j], y[j], 1e-15);
  }
}

TEST(Merge, Errors) {
  const auto a = filled(2);
  auto b = filled(3);
  auto& wk = b.weights.at("layers.1.attn.wk");
  wk.shape = {wk.shape[1], wk.shape[0]};
  const std::vector<Checkpoint> ab = {a, b};
  const double w[] = {1.0, 1.0};
  try {
    (void)merge_checkpoints(ab, w);
    FAIL();
  } catch (const IncompatibleCheckpointError& e) {
    EXPECT_EQ(e.tensor(), "layers.1.attn.wk");
    EXPECT_NE(std::string(e.what()).find("layers.1.attn.wk"), std::string::npos);
  }
  const std::vector<Checkpoint> aa = {a, a};
  const double neg[] = {1.0, -1.0};
  const double zero[] = {0.0, 0.0};
  const double one[] = {1.0};
  for (auto ws : {std::span<const double>(neg), std::span<const double>(zero), std::span<const double>(one)}) {
    try {
      (void)merge_checkpoints(aa, ws);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidConfiguration);
    }
  }
  const std::vector<Checkpoint> none;
  EXPECT_THROW((void)merge_checkpoints(none, std::span<const double>{}), Error);
}

}  // namespace
}  // namespace aqaa
