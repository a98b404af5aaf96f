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

#include "aqaa/train.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "aqaa/error.hpp"
#include "aqaa/objectives.hpp"
#include "aqaa/parallel.hpp"
#include "aqaa/rng.hpp"
#include "json.hpp"

namespace aqaa {

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kSft1: return "sft1";
    case Stage::kSft2: return "sft2";
    case Stage::kDpo: return "dpo";
  }
  return "unknown";
}

Stage parse_stage(std::string_view name) {
  for (Stage s : {Stage::kSft1, Stage::kSft2, Stage::kDpo}) {
    if (to_string(s) == name) return s;
  }
  fail(ErrorCode::kInvalidConfiguration, "unknown stage '" + std::string(name) + "'");
}

// ---- Adam -------------------------------------------------------------------

AdamOptimizer::AdamOptimizer(const ParameterSet& like, AdamConfig config)
    : config_(config), m_(like.zeros_like()), v_(like.zeros_like()) {}

void AdamOptimizer::step(ParameterSet& weights, const Gradients& grads) {
  ++t_;
  if (config_.lr == 0.0) return;
  double scale = 1.0;
  if (config_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const auto& g : grads.params) {
      for (double v : g.values) sq += v * v;
    }
    const double norm = std::sqrt(sq);
    if (norm > config_.clip_norm) scale = config_.clip_norm / norm;
  }
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < weights.params.size(); ++i) {
    auto& w = weights.params[i].values;
    const auto& g = grads.params[i].values;
    auto& m = m_.params[i].values;
    auto& v = v_.params[i].values;
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = g[j] * scale;
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * gj;
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * gj * gj;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

// ---- plans ------------------------------------------------------------------

TrainPlan TrainPlan::defaults(Stage stage) {
  TrainPlan p;
  p.stage = stage;
  p.lr = stage == Stage::kDpo ? 1e-5 : 3e-4;
  p.steps = stage == Stage::kDpo ? 100 : 200;
  p.batch_size = 4;
  return p;
}

void TrainPlan::validate() const {
  if (batch_size == 0) fail(ErrorCode::kInvalidConfiguration, "batch_size must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) fail(ErrorCode::kInvalidConfiguration, "learning rate must be finite and >= 0");
  if (stage == Stage::kDpo && !(beta > 0.0)) fail(ErrorCode::kInvalidConfiguration, "DPO beta must be positive");
  if (!(clip_norm >= 0.0)) fail(ErrorCode::kInvalidConfiguration, "clip_norm must be >= 0");
}

std::string plan_to_json(const TrainPlan& p) {
  nlohmann::json j;
  j["stage"] = std::string(to_string(p.stage));
  j["corpus"] = p.corpus.string();
  j["init"] = p.init.string();
  j["output"] = p.output.string();
  j["max_steps"] = p.max_steps ? nlohmann::json(*p.max_steps) : nlohmann::json(nullptr);
  j["steps"] = p.steps;
  j["batch_size"] = p.batch_size;
  j["lr"] = p.lr;
  j["beta"] = p.beta;
  j["seed"] = p.seed;
  j["clip_norm"] = p.clip_norm;
  return j.dump(2);
}

TrainPlan plan_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    TrainPlan p = TrainPlan::defaults(parse_stage(j.at("stage").get<std::string>()));
    if (j.contains("corpus")) p.corpus = j["corpus"].get<std::string>();
    if (j.contains("init")) p.init = j["init"].get<std::string>();
    if (j.contains("output")) p.output = j["output"].get<std::string>();
    if (j.contains("max_steps") && !j["max_steps"].is_null()) p.max_steps = j["max_steps"].get<std::size_t>();
    if (j.contains("steps")) p.steps = j["steps"].get<std::size_t>();
    if (j.contains("batch_size")) p.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("lr")) p.lr = j["lr"].get<double>();
    if (j.contains("beta")) p.beta = j["beta"].get<double>();
    if (j.contains("seed")) p.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("clip_norm")) p.clip_norm = j["clip_norm"].get<double>();
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidConfiguration, std::string("malformed train plan: ") + e.what());
  }
}

void write_log_csv(const std::filesystem::path& file, const TrainLog& log) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + file.string());
  out.precision(17);
  out << "step,loss,margin\n";
  for (const auto& r : log.rows) out << r.step << ',' << r.loss << ',' << r.margin << '\n';
}

// ---- batching ---------------------------------------------------------------

namespace {

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

// Produces the index batches of a run: passes over a freshly shuffled order
// until `total_batches` are emitted.
class BatchSchedule {
 public:
  BatchSchedule(std::size_t n, std::size_t batch, std::uint64_t seed) : n_(n), batch_(batch), seed_(seed) {}

  std::size_t batches_per_pass() const noexcept { return (n_ + batch_ - 1) / batch_; }

  // Batch number b (0-based) and the pass it belongs to.
  std::vector<std::size_t> batch(std::size_t b) {
    const std::size_t pass = b / batches_per_pass();
    if (pass != pass_ || order_.empty()) {
      order_ = shuffled(n_, mix_seed(seed_, pass));
      pass_ = pass;
    }
    const std::size_t begin = (b % batches_per_pass()) * batch_;
    const std::size_t end = std::min(n_, begin + batch_);
    return {order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(end)};
  }

 private:
  std::size_t n_;
  std::size_t batch_;
  std::uint64_t seed_;
  std::size_t pass_ = 0;
  std::vector<std::size_t> order_;
};

void scale(Gradients& g, double s) {
  for (auto& p : g.params) {
    for (auto& v : p.values) v *= s;
  }
}

}  // namespace

double batch_ce_gradient(const Checkpoint& ckpt, const std::vector<TrainingExample>& examples,
                         std::span<const std::size_t> indices, Gradients& grads) {
  std::vector<Gradients> per(indices.size());
  std::vector<double> losses(indices.size(), 0.0);
  parallel_for(indices.size(), [&](std::size_t i) {
    losses[i] = example_ce_backward(ckpt, examples[indices[i]], per[i]);
  });
  grads = ckpt.weights.zeros_like();
  double loss = 0.0;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    grads.add_scaled(per[i], 1.0);
    loss += losses[i];
  }
  const double inv = 1.0 / static_cast<double>(indices.size());
  scale(grads, inv);
  return loss * inv;
}

Checkpoint run_sft(const Checkpoint& init, const std::vector<TrainingExample>& data, const TrainPlan& plan,
                   TrainLog* log) {
  plan.validate();
  if (plan.stage == Stage::kDpo) fail(ErrorCode::kInvalidConfiguration, "run_sft needs an sft1 or sft2 plan");
  if (data.empty()) fail(ErrorCode::kIo, "empty SFT corpus");

  Checkpoint ckpt = init;
  BatchSchedule schedule(data.size(), plan.batch_size, plan.seed);
  std::size_t total = plan.stage == Stage::kSft1 ? schedule.batches_per_pass() : plan.steps;
  if (plan.max_steps) total = std::min(total, *plan.max_steps);

  AdamOptimizer adam(ckpt.weights, AdamConfig{plan.lr, 0.9, 0.999, 1e-8, plan.clip_norm});
  TrainLog local;
  TrainLog& out = log ? *log : local;
  out = TrainLog{};
  double pass_sum = 0.0;
  std::size_t pass_count = 0;
  Gradients grads;
  for (std::size_t b = 0; b < total; ++b) {
    if (b % schedule.batches_per_pass() == 0) {
      pass_sum = 0.0;
      pass_count = 0;
    }
    const auto idx = schedule.batch(b);
    const double loss = batch_ce_gradient(ckpt, data, idx, grads);
    if (!std::isfinite(loss)) throw DivergenceError(static_cast<long>(b), "non-finite SFT loss");
    if (b == 0) out.initial_batch_loss = loss;
    out.rows.push_back(LogRow{b, loss, 0.0});
    pass_sum += loss;
    ++pass_count;
    adam.step(ckpt.weights, grads);
  }
  out.epoch_mean_loss = pass_count > 0 ? pass_sum / static_cast<double>(pass_count) : 0.0;
  return ckpt;
}

Checkpoint run_dpo(const Checkpoint& init, const std::vector<PreferencePair>& pairs, const TokenSpace& space,
                   const TrainPlan& plan, TrainLog* log) {
  plan.validate();
  if (plan.stage != Stage::kDpo) fail(ErrorCode::kInvalidConfiguration, "run_dpo needs a dpo plan");
  if (pairs.empty()) fail(ErrorCode::kIo, "empty preference corpus");

  const Checkpoint reference = init;
  TrainLog local;
  TrainLog& out = log ? *log : local;
  out = TrainLog{};
  out.reference_fingerprint_start = fingerprint(reference);

  // The reference never changes, so its log-probs are computed once.
  std::vector<TokenLogProbs> ref_w(pairs.size());
  std::vector<TokenLogProbs> ref_l(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    ref_w[i] = response_log_probs(reference, pairs[i].prompt, pairs[i].chosen);
    ref_l[i] = response_log_probs(reference, pairs[i].prompt, pairs[i].rejected);
  });

  Checkpoint policy = init;
  BatchSchedule schedule(pairs.size(), plan.batch_size, plan.seed);
  std::size_t total = plan.steps;
  if (plan.max_steps) total = std::min(total, *plan.max_steps);
  AdamOptimizer adam(policy.weights, AdamConfig{plan.lr, 0.9, 0.999, 1e-8, plan.clip_norm});

  double pass_sum = 0.0;
  std::size_t pass_count = 0;
  for (std::size_t b = 0; b < total; ++b) {
    if (b % schedule.batches_per_pass() == 0) {
      pass_sum = 0.0;
      pass_count = 0;
    }
    const auto idx = schedule.batch(b);
    std::vector<Gradients> per(idx.size());
    std::vector<DpoExampleResult> res(idx.size());
    parallel_for(idx.size(), [&](std::size_t i) {
      const std::size_t k = idx[i];
      res[i] = dpo_backward(policy, pairs[k], ref_w[k], ref_l[k], space, plan.beta, &per[i]);
    });
    Gradients grads = policy.weights.zeros_like();
    double loss = 0.0;
    double margin = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (!per[i].params.empty()) grads.add_scaled(per[i], 1.0);
      loss += res[i].loss;
      margin += res[i].margin;
    }
    const double inv = 1.0 / static_cast<double>(idx.size());
    scale(grads, inv);
    loss *= inv;
    margin *= inv;
    if (!std::isfinite(loss)) throw DivergenceError(static_cast<long>(b), "non-finite DPO loss");
    if (b == 0) out.initial_batch_loss = loss;
    out.rows.push_back(LogRow{b, loss, margin});
    pass_sum += loss;
    ++pass_count;
    adam.step(policy.weights, grads);
  }
  out.epoch_mean_loss = pass_count > 0 ? pass_sum / static_cast<double>(pass_count) : 0.0;
  out.reference_fingerprint_end = fingerprint(reference);
  return policy;
}

}  // namespace aqaa
