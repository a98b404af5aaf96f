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
#include <span>
#include <vector>

#include "aqaa/dataset.hpp"
#include "aqaa/tiny_lm.hpp"
#include "aqaa/token_space.hpp"

namespace aqaa {

// Log-probability of each realized response token under one model.
using TokenLogProbs = std::vector<double>;
// 1 where the response token is kept in the preference sum (text tokens),
// 0 where it belongs to the audio-token set (codebooks and markers).
using AudioMask = std::vector<std::uint8_t>;

struct CeResult {
  double loss = 0.0;
  std::size_t counted = 0;  // number of masked-in positions
  Logits grad;              // d loss / d logits
};

// Mean negative log-likelihood over positions with mask == 1:
//   L = -(1/T) sum_t log softmax(logits_t)[targets_t]
// Gradient rows are (softmax - onehot)/T on counted positions, 0 elsewhere.
// Throws kAlignment on length mismatch, kEmptyResponse when no position is
// counted, kOutOfVocabulary for a target outside the logits width.
CeResult ce_loss(const Logits& logits, std::span<const TokenId> targets, std::span<const std::uint8_t> mask);

// Next-token alignment of a training example: row t of the logits predicts
// tokens[t + 1]; the last row has no target and is never counted.
struct ShiftedTargets {
  TokenSeq targets;
  std::vector<std::uint8_t> mask;
};
ShiftedTargets next_token_targets(const TrainingExample& ex);

AudioMask audio_mask(std::span<const TokenId> response, const TokenSpace& space);

struct DpoResult {
  double loss = 0.0;
  double margin = 0.0;  // beta * (delta_w - delta_l)
  std::vector<double> grad_chosen;    // d loss / d policy log-prob, chosen
  std::vector<double> grad_rejected;  // d loss / d policy log-prob, rejected
};

// -log sigmoid(beta * (delta_w - delta_l)), delta = sum over kept positions of
// (policy - reference) log-probs. Positions with mask 0 never enter the sums,
// so their values cannot affect the loss or any gradient. Throws
// kInvalidConfiguration when beta <= 0 and kAlignment on length mismatch.
DpoResult masked_dpo_loss(std::span<const double> chosen_policy, std::span<const double> chosen_reference,
                          std::span<const double> rejected_policy, std::span<const double> rejected_reference,
                          std::span<const std::uint8_t> chosen_mask, std::span<const std::uint8_t> rejected_mask,
                          double beta);

// Numerically stable -log sigmoid(z).
double neg_log_sigmoid(double z);

// log p(tokens[t]) for t in [first, |tokens|) from next-token logits.
TokenLogProbs token_log_probs(const Logits& logits, std::span<const TokenId> tokens, std::size_t first);

// Adds sum_t upstream[t] * d log p(tokens[first + t]) / d logits into adjoint.
void add_log_prob_adjoint(const Logits& logits, std::span<const TokenId> tokens, std::size_t first,
                          std::span<const double> upstream, Logits& adjoint);

// Response log-probs of prompt ++ response under ckpt.
TokenLogProbs response_log_probs(const Checkpoint& ckpt, std::span<const TokenId> prompt,
                                 std::span<const TokenId> response);

// Response-masked CE of one example under ckpt (no gradient).
double example_ce(const Checkpoint& ckpt, const TrainingExample& ex);

// CE plus accumulated parameter gradients (grads may be empty on entry).
double example_ce_backward(const Checkpoint& ckpt, const TrainingExample& ex, Gradients& grads);

struct DpoExampleResult {
  double loss = 0.0;
  double margin = 0.0;
};

// Masked DPO for one preference pair. reference_* are the frozen reference
// log-probs of the two responses. Accumulates policy parameter gradients.
DpoExampleResult dpo_backward(const Checkpoint& policy, const PreferencePair& pair,
                              std::span<const double> reference_chosen, std::span<const double> reference_rejected,
                              const TokenSpace& space, double beta, Gradients* grads);

}  // namespace aqaa
