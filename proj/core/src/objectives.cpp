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

#include "aqaa/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aqaa/error.hpp"

namespace aqaa {
namespace {

// log-sum-exp of one logits row.
double log_partition(std::span<const double> row) {
  const double mx = *std::max_element(row.begin(), row.end());
  double sum = 0.0;
  for (double v : row) sum += std::exp(v - mx);
  return mx + std::log(sum);
}

}  // namespace

CeResult ce_loss(const Logits& logits, std::span<const TokenId> targets, std::span<const std::uint8_t> mask) {
  if (targets.size() != logits.rows || mask.size() != logits.rows) {
    fail(ErrorCode::kAlignment, "ce_loss needs one target and one mask entry per logits row");
  }
  CeResult r;
  r.counted = static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }));
  if (r.counted == 0) fail(ErrorCode::kEmptyResponse, "loss mask selects no positions");
  r.grad.rows = logits.rows;
  r.grad.cols = logits.cols;
  r.grad.values.assign(logits.values.size(), 0.0);
  const double inv_t = 1.0 / static_cast<double>(r.counted);
  double total = 0.0;
  for (std::size_t t = 0; t < logits.rows; ++t) {
    if (mask[t] == 0) continue;
    if (targets[t] >= logits.cols) fail(ErrorCode::kOutOfVocabulary, "target id " + std::to_string(targets[t]));
    const auto row = logits.row(t);
    const double lz = log_partition(row);
    total += lz - row[targets[t]];
    auto g = r.grad.row(t);
    for (std::size_t v = 0; v < logits.cols; ++v) g[v] = std::exp(row[v] - lz) * inv_t;
    g[targets[t]] -= inv_t;
  }
  r.loss = total * inv_t;
  return r;
}

ShiftedTargets next_token_targets(const TrainingExample& ex) {
  ShiftedTargets s;
  const std::size_t n = ex.tokens.size();
  s.targets.assign(n, 0);
  s.mask.assign(n, 0);
  for (std::size_t t = 0; t + 1 < n; ++t) {
    s.targets[t] = ex.tokens[t + 1];
    s.mask[t] = ex.loss_mask[t + 1];
  }
  return s;
}

AudioMask audio_mask(std::span<const TokenId> response, const TokenSpace& space) {
  AudioMask m(response.size());
  for (std::size_t i = 0; i < response.size(); ++i) m[i] = space.is_text(response[i]) ? 1 : 0;
  return m;
}

double neg_log_sigmoid(double z) {
  return z >= 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

DpoResult masked_dpo_loss(std::span<const double> chosen_policy, std::span<const double> chosen_reference,
                          std::span<const double> rejected_policy, std::span<const double> rejected_reference,
                          std::span<const std::uint8_t> chosen_mask, std::span<const std::uint8_t> rejected_mask,
                          double beta) {
  if (!(beta > 0.0)) fail(ErrorCode::kInvalidConfiguration, "DPO beta must be positive");
  if (chosen_policy.size() != chosen_reference.size() || chosen_policy.size() != chosen_mask.size()) {
    fail(ErrorCode::kAlignment, "chosen trajectory log-probs and mask differ in length");
  }
  if (rejected_policy.size() != rejected_reference.size() || rejected_policy.size() != rejected_mask.size()) {
    fail(ErrorCode::kAlignment, "rejected trajectory log-probs and mask differ in length");
  }
  double delta_w = 0.0;
  for (std::size_t t = 0; t < chosen_policy.size(); ++t) {
    if (chosen_mask[t] != 0) delta_w += chosen_policy[t] - chosen_reference[t];
  }
  double delta_l = 0.0;
  for (std::size_t t = 0; t < rejected_policy.size(); ++t) {
    if (rejected_mask[t] != 0) delta_l += rejected_policy[t] - rejected_reference[t];
  }
  DpoResult r;
  r.margin = beta * (delta_w - delta_l);
  r.loss = neg_log_sigmoid(r.margin);
  // dL/dmargin = -sigmoid(-margin)
  const double dmargin = -1.0 / (1.0 + std::exp(r.margin));
  r.grad_chosen.assign(chosen_policy.size(), 0.0);
  r.grad_rejected.assign(rejected_policy.size(), 0.0);
  for (std::size_t t = 0; t < chosen_policy.size(); ++t) {
    if (chosen_mask[t] != 0) r.grad_chosen[t] = dmargin * beta;
  }
  for (std::size_t t = 0; t < rejected_policy.size(); ++t) {
    if (rejected_mask[t] != 0) r.grad_rejected[t] = -dmargin * beta;
  }
  return r;
}

TokenLogProbs token_log_probs(const Logits& logits, std::span<const TokenId> tokens, std::size_t first) {
  if (first == 0 || tokens.size() != logits.rows || first > tokens.size()) {
    fail(ErrorCode::kAlignment, "token_log_probs needs 1 <= first <= |tokens| == logits rows");
  }
  TokenLogProbs out;
  out.reserve(tokens.size() - first);
  for (std::size_t i = first; i < tokens.size(); ++i) {
    const auto row = logits.row(i - 1);
    out.push_back(row[tokens[i]] - log_partition(row));
  }
  return out;
}

void add_log_prob_adjoint(const Logits& logits, std::span<const TokenId> tokens, std::size_t first,
                          std::span<const double> upstream, Logits& adjoint) {
  if (upstream.size() + first != tokens.size()) fail(ErrorCode::kAlignment, "upstream gradient length mismatch");
  for (std::size_t k = 0; k < upstream.size(); ++k) {
    if (upstream[k] == 0.0) continue;
    const std::size_t row_index = first + k - 1;
    const auto row = logits.row(row_index);
    const double lz = log_partition(row);
    auto a = adjoint.row(row_index);
    for (std::size_t v = 0; v < logits.cols; ++v) a[v] -= upstream[k] * std::exp(row[v] - lz);
    a[tokens[first + k]] += upstream[k];
  }
}

namespace {

TokenSeq joined(std::span<const TokenId> prompt, std::span<const TokenId> response) {
  TokenSeq seq(prompt.begin(), prompt.end());
  seq.insert(seq.end(), response.begin(), response.end());
  return seq;
}

}  // namespace

TokenLogProbs response_log_probs(const Checkpoint& ckpt, std::span<const TokenId> prompt,
                                 std::span<const TokenId> response) {
  const TokenSeq seq = joined(prompt, response);
  return token_log_probs(forward(ckpt, seq), seq, prompt.size());
}

double example_ce(const Checkpoint& ckpt, const TrainingExample& ex) {
  const ShiftedTargets st = next_token_targets(ex);
  return ce_loss(forward(ckpt, ex.tokens), st.targets, st.mask).loss;
}

double example_ce_backward(const Checkpoint& ckpt, const TrainingExample& ex, Gradients& grads) {
  const ShiftedTargets st = next_token_targets(ex);
  return forward_backward(
      ckpt, ex.tokens,
      [&](const Logits& logits, Logits& adjoint) {
        CeResult r = ce_loss(logits, st.targets, st.mask);
        adjoint = std::move(r.grad);
        return r.loss;
      },
      &grads);
}

DpoExampleResult dpo_backward(const Checkpoint& policy, const PreferencePair& pair,
                              std::span<const double> reference_chosen, std::span<const double> reference_rejected,
                              const TokenSpace& space, double beta, Gradients* grads) {
  const TokenSeq chosen = joined(pair.prompt, pair.chosen);
  const TokenSeq rejected = joined(pair.prompt, pair.rejected);
  const std::size_t first = pair.prompt.size();
  const AudioMask mask_w = audio_mask(pair.chosen, space);
  const AudioMask mask_l = audio_mask(pair.rejected, space);

  // Policy log-probs need the forward pass of both sequences before the loss
  // (and thus the upstream gradient) is known; run each forward once to get
  // log-probs, then a forward/backward with the resulting upstream.
  const TokenLogProbs lp_w = token_log_probs(forward(policy, chosen), chosen, first);
  const TokenLogProbs lp_l = token_log_probs(forward(policy, rejected), rejected, first);
  const DpoResult r = masked_dpo_loss(lp_w, reference_chosen, lp_l, reference_rejected, mask_w, mask_l, beta);

  if (grads != nullptr) {
    auto accumulate = [&](const TokenSeq& seq, const std::vector<double>& upstream) {
      if (std::all_of(upstream.begin(), upstream.end(), [](double g) { return g == 0.0; })) return;
      forward_backward(
          policy, seq,
          [&](const Logits& logits, Logits& adjoint) {
            add_log_prob_adjoint(logits, seq, first, upstream, adjoint);
            return 0.0;
          },
          grads);
    };
    accumulate(chosen, r.grad_chosen);
    accumulate(rejected, r.grad_rejected);
  }
  return DpoExampleResult{r.loss, r.margin};
}

}  // namespace aqaa
