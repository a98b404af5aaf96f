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

#include "aqaa/tiny_lm.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "aqaa/error.hpp"
#include "aqaa/rng.hpp"

namespace aqaa {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;
using ConstVecMap = Eigen::Map<const Vec>;
using MutVecMap = Eigen::Map<Vec>;

constexpr std::size_t kTensorsPerLayer = 9;
enum LayerSlot : std::size_t {
  kAttnNorm = 0,
  kWq,
  kWk,
  kWv,
  kWo,
  kFfnNorm,
  kWGate,
  kWUp,
  kWDown,
};

std::size_t layer_index(std::size_t layer, LayerSlot slot) { return 1 + layer * kTensorsPerLayer + slot; }
std::size_t final_norm_index(const ModelConfig& c) { return 1 + c.n_layers * kTensorsPerLayer; }
std::size_t head_index(const ModelConfig& c) { return 2 + c.n_layers * kTensorsPerLayer; }

ConstMap mat(const Parameter& p) {
  return ConstMap(p.values.data(), static_cast<Eigen::Index>(p.shape[0]), static_cast<Eigen::Index>(p.shape[1]));
}
MutMap mat(Parameter& p) {
  return MutMap(p.values.data(), static_cast<Eigen::Index>(p.shape[0]), static_cast<Eigen::Index>(p.shape[1]));
}
ConstVecMap vec(const Parameter& p) { return ConstVecMap(p.values.data(), static_cast<Eigen::Index>(p.size())); }
MutVecMap vec(Parameter& p) { return MutVecMap(p.values.data(), static_cast<Eigen::Index>(p.size())); }

void check_schema(const Checkpoint& ckpt) {
  const auto schema = parameter_schema(ckpt.config);
  if (schema.size() != ckpt.weights.params.size()) {
    fail(ErrorCode::kIncompatibleCheckpoint, "checkpoint has " + std::to_string(ckpt.weights.params.size()) +
                                                 " tensors, config expects " + std::to_string(schema.size()));
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& p = ckpt.weights.params[i];
    if (p.name != schema[i].first || p.shape != schema[i].second) {
      throw IncompatibleCheckpointError(schema[i].first, "tensor does not match the config schema");
    }
  }
}

void check_tokens(const ModelConfig& cfg, std::span<const TokenId> tokens) {
  if (tokens.empty()) fail(ErrorCode::kSequenceLength, "empty input sequence");
  if (tokens.size() > cfg.max_seq) {
    fail(ErrorCode::kSequenceLength, "input length " + std::to_string(tokens.size()) + " exceeds max_seq " +
                                         std::to_string(cfg.max_seq));
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] >= cfg.vocab) {
      fail(ErrorCode::kOutOfVocabulary, "token " + std::to_string(tokens[i]) + " at index " + std::to_string(i));
    }
  }
}

// ---- RMSNorm ----------------------------------------------------------------

// y = gain .* x / sqrt(mean(x^2) + eps); inv_rms holds the per-row scale.
void rmsnorm_forward(const RowMat& x, const ConstVecMap& gain, double eps, RowMat& y, Vec& inv_rms) {
  const auto d = static_cast<double>(x.cols());
  inv_rms.resize(x.rows());
  y.resize(x.rows(), x.cols());
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    inv_rms[t] = 1.0 / std::sqrt(x.row(t).squaredNorm() / d + eps);
    y.row(t) = (x.row(t).array() * inv_rms[t]) * gain.transpose().array();
  }
}

// Accumulates dx and dgain.
void rmsnorm_backward(const RowMat& x, const Vec& inv_rms, const ConstVecMap& gain, const RowMat& dy, RowMat& dx,
                      MutVecMap dgain) {
  const auto d = static_cast<double>(x.cols());
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const double r = inv_rms[t];
    dgain += (dy.row(t).array() * x.row(t).array() * r).matrix().transpose();
    const Eigen::RowVectorXd gdy = dy.row(t).array() * gain.transpose().array();
    const double dot = gdy.dot(x.row(t));
    dx.row(t) += r * gdy - (r * r * r / d) * dot * x.row(t);
  }
}

// ---- rotary position embedding -------------------------------------------

struct RopeTable {
  RowMat cos;  // T x head_dim/2
  RowMat sin;
};

RopeTable make_rope(std::size_t seq, std::size_t head_dim, double base) {
  const std::size_t half = head_dim / 2;
  RopeTable r{RowMat(seq, half), RowMat(seq, half)};
  for (std::size_t t = 0; t < seq; ++t) {
    for (std::size_t i = 0; i < half; ++i) {
      const double freq = std::pow(base, -2.0 * static_cast<double>(i) / static_cast<double>(head_dim));
      const double angle = static_cast<double>(t) * freq;
      r.cos(t, i) = std::cos(angle);
      r.sin(t, i) = std::sin(angle);
    }
  }
  return r;
}

// Rotates every head slice of m in place; inverse applies the transpose.
void apply_rope(RowMat& m, std::size_t head_dim, const RopeTable& rope, bool inverse) {
  const std::size_t heads = static_cast<std::size_t>(m.cols()) / head_dim;
  const std::size_t half = head_dim / 2;
  for (Eigen::Index t = 0; t < m.rows(); ++t) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < half; ++i) {
        const auto a_idx = static_cast<Eigen::Index>(h * head_dim + 2 * i);
        const double c = rope.cos(t, i);
        const double s = inverse ? -rope.sin(t, i) : rope.sin(t, i);
        const double a = m(t, a_idx);
        const double b = m(t, a_idx + 1);
        m(t, a_idx) = a * c - b * s;
        m(t, a_idx + 1) = a * s + b * c;
      }
    }
  }
}

double silu(double z) { return z / (1.0 + std::exp(-z)); }
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// ---- forward with activation cache ---------------------------------------

struct LayerCache {
  RowMat x_in;
  Vec inv_rms1;
  RowMat h1;
  RowMat q;  // post-rotary
  RowMat k;  // post-rotary
  RowMat v;
  std::vector<RowMat> probs;  // per query head, T x T (lower triangular)
  RowMat att;
  RowMat x_mid;
  Vec inv_rms2;
  RowMat h2;
  RowMat gate;
  RowMat up;
  RowMat act;
};

struct ForwardCache {
  std::vector<LayerCache> layers;
  RowMat x_final;
  Vec inv_rms_final;
  RowMat h_final;
  RopeTable rope;
};

void attention_forward(const ModelConfig& cfg, LayerCache& lc) {
  const auto T = lc.q.rows();
  const std::size_t hd = cfg.head_dim();
  const std::size_t heads_per_group = cfg.n_heads / cfg.n_kv_groups;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  lc.att.setZero(T, static_cast<Eigen::Index>(cfg.d_model));
  lc.probs.assign(cfg.n_heads, RowMat());
  for (std::size_t h = 0; h < cfg.n_heads; ++h) {
    const std::size_t g = h / heads_per_group;
    const auto qh = lc.q.middleCols(static_cast<Eigen::Index>(h * hd), static_cast<Eigen::Index>(hd));
    const auto kg = lc.k.middleCols(static_cast<Eigen::Index>(g * hd), static_cast<Eigen::Index>(hd));
    const auto vg = lc.v.middleCols(static_cast<Eigen::Index>(g * hd), static_cast<Eigen::Index>(hd));
    RowMat p = (qh * kg.transpose()) * scale;
    for (Eigen::Index t = 0; t < T; ++t) {
      const double mx = p.row(t).head(t + 1).maxCoeff();
      double sum = 0.0;
      for (Eigen::Index s = 0; s <= t; ++s) {
        p(t, s) = std::exp(p(t, s) - mx);
        sum += p(t, s);
      }
      for (Eigen::Index s = 0; s <= t; ++s) p(t, s) /= sum;
      for (Eigen::Index s = t + 1; s < T; ++s) p(t, s) = 0.0;
    }
    lc.att.middleCols(static_cast<Eigen::Index>(h * hd), static_cast<Eigen::Index>(hd)).noalias() = p * vg;
    lc.probs[h] = std::move(p);
  }
}

// Runs the transformer trunk and the final norm; fills cache.h_final.
void trunk_forward(const Checkpoint& ckpt, std::span<const TokenId> tokens, ForwardCache& cache) {
  const ModelConfig& cfg = ckpt.config;
  const auto& w = ckpt.weights.params;
  const auto T = static_cast<Eigen::Index>(tokens.size());
  const auto d = static_cast<Eigen::Index>(cfg.d_model);

  cache.rope = make_rope(tokens.size(), cfg.head_dim(), cfg.rope_base);
  RowMat x(T, d);
  const ConstMap emb = mat(w[0]);
  for (Eigen::Index t = 0; t < T; ++t) x.row(t) = emb.row(static_cast<Eigen::Index>(tokens[static_cast<std::size_t>(t)]));

  cache.layers.resize(cfg.n_layers);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    LayerCache& lc = cache.layers[l];
    lc.x_in = x;
    rmsnorm_forward(lc.x_in, vec(w[layer_index(l, kAttnNorm)]), cfg.norm_eps, lc.h1, lc.inv_rms1);
    lc.q.noalias() = lc.h1 * mat(w[layer_index(l, kWq)]);
    lc.k.noalias() = lc.h1 * mat(w[layer_index(l, kWk)]);
    lc.v.noalias() = lc.h1 * mat(w[layer_index(l, kWv)]);
    apply_rope(lc.q, cfg.head_dim(), cache.rope, false);
    apply_rope(lc.k, cfg.head_dim(), cache.rope, false);
    attention_forward(cfg, lc);
    lc.x_mid = lc.x_in;
    lc.x_mid.noalias() += lc.att * mat(w[layer_index(l, kWo)]);

    rmsnorm_forward(lc.x_mid, vec(w[layer_index(l, kFfnNorm)]), cfg.norm_eps, lc.h2, lc.inv_rms2);
    lc.gate.noalias() = lc.h2 * mat(w[layer_index(l, kWGate)]);
    lc.up.noalias() = lc.h2 * mat(w[layer_index(l, kWUp)]);
    lc.act = lc.gate.unaryExpr([](double z) { return silu(z); }).cwiseProduct(lc.up);
    x = lc.x_mid;
    x.noalias() += lc.act * mat(w[layer_index(l, kWDown)]);
  }
  cache.x_final = std::move(x);
  rmsnorm_forward(cache.x_final, vec(w[final_norm_index(cfg)]), cfg.norm_eps, cache.h_final, cache.inv_rms_final);
}

Gradients backward_from_cache(const Checkpoint& ckpt, std::span<const TokenId> tokens, const ForwardCache& cache,
                              const RowMat& dlogits) {
  const ModelConfig& cfg = ckpt.config;
  const auto& w = ckpt.weights.params;
  Gradients grads = ckpt.weights.zeros_like();
  auto& g = grads.params;
  const std::size_t hd = cfg.head_dim();
  const std::size_t heads_per_group = cfg.n_heads / cfg.n_kv_groups;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  // LM head and final norm.
  mat(g[head_index(cfg)]).noalias() += cache.h_final.transpose() * dlogits;
  const RowMat dh_final = dlogits * mat(w[head_index(cfg)]).transpose();
  RowMat dx = RowMat::Zero(cache.x_final.rows(), cache.x_final.cols());
  rmsnorm_backward(cache.x_final, cache.inv_rms_final, vec(w[final_norm_index(cfg)]), dh_final, dx,
                   vec(g[final_norm_index(cfg)]));

  for (std::size_t li = cfg.n_layers; li-- > 0;) {
    const LayerCache& lc = cache.layers[li];

    // Feed-forward: x_out = x_mid + (silu(gate) .* up) W_down.
    mat(g[layer_index(li, kWDown)]).noalias() += lc.act.transpose() * dx;
    const RowMat dact = dx * mat(w[layer_index(li, kWDown)]).transpose();
    RowMat dgate(lc.gate.rows(), lc.gate.cols());
    RowMat dup(lc.up.rows(), lc.up.cols());
    for (Eigen::Index i = 0; i < lc.gate.size(); ++i) {
      const double z = lc.gate.data()[i];
      const double sg = sigmoid(z);
      dup.data()[i] = dact.data()[i] * z * sg;
      dgate.data()[i] = dact.data()[i] * lc.up.data()[i] * sg * (1.0 + z * (1.0 - sg));
    }
    mat(g[layer_index(li, kWGate)]).noalias() += lc.h2.transpose() * dgate;
    mat(g[layer_index(li, kWUp)]).noalias() += lc.h2.transpose() * dup;
    RowMat dh2 = dgate * mat(w[layer_index(li, kWGate)]).transpose();
    dh2.noalias() += dup * mat(w[layer_index(li, kWUp)]).transpose();
    RowMat dx_mid = dx;
    rmsnorm_backward(lc.x_mid, lc.inv_rms2, vec(w[layer_index(li, kFfnNorm)]), dh2, dx_mid,
                     vec(g[layer_index(li, kFfnNorm)]));

    // Attention: x_mid = x_in + att W_o.
    mat(g[layer_index(li, kWo)]).noalias() += lc.att.transpose() * dx_mid;
    const RowMat datt = dx_mid * mat(w[layer_index(li, kWo)]).transpose();
    RowMat dq = RowMat::Zero(lc.q.rows(), lc.q.cols());
    RowMat dk = RowMat::Zero(lc.k.rows(), lc.k.cols());
    RowMat dv = RowMat::Zero(lc.v.rows(), lc.v.cols());
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
      const std::size_t grp = h / heads_per_group;
      const auto hcols = static_cast<Eigen::Index>(h * hd);
      const auto gcols = static_cast<Eigen::Index>(grp * hd);
      const auto w_hd = static_cast<Eigen::Index>(hd);
      const RowMat& p = lc.probs[h];
      const auto doh = datt.middleCols(hcols, w_hd);
      dv.middleCols(gcols, w_hd).noalias() += p.transpose() * doh;
      RowMat dp = doh * lc.v.middleCols(gcols, w_hd).transpose();
      // Softmax backward row by row; masked entries have p == 0.
      for (Eigen::Index t = 0; t < dp.rows(); ++t) {
        const double inner = p.row(t).dot(dp.row(t));
        dp.row(t) = p.row(t).array() * (dp.row(t).array() - inner);
      }
      dq.middleCols(hcols, w_hd).noalias() += (dp * lc.k.middleCols(gcols, w_hd)) * scale;
      dk.middleCols(gcols, w_hd).noalias() += (dp.transpose() * lc.q.middleCols(hcols, w_hd)) * scale;
    }
    apply_rope(dq, hd, cache.rope, true);
    apply_rope(dk, hd, cache.rope, true);
    mat(g[layer_index(li, kWq)]).noalias() += lc.h1.transpose() * dq;
    mat(g[layer_index(li, kWk)]).noalias() += lc.h1.transpose() * dk;
    mat(g[layer_index(li, kWv)]).noalias() += lc.h1.transpose() * dv;
    RowMat dh1 = dq * mat(w[layer_index(li, kWq)]).transpose();
    dh1.noalias() += dk * mat(w[layer_index(li, kWk)]).transpose();
    dh1.noalias() += dv * mat(w[layer_index(li, kWv)]).transpose();
    dx = dx_mid;
    rmsnorm_backward(lc.x_in, lc.inv_rms1, vec(w[layer_index(li, kAttnNorm)]), dh1, dx,
                     vec(g[layer_index(li, kAttnNorm)]));
  }

  MutMap demb = mat(g[0]);
  for (std::size_t t = 0; t < tokens.size(); ++t) demb.row(static_cast<Eigen::Index>(tokens[t])) += dx.row(static_cast<Eigen::Index>(t));
  return grads;
}

Logits logits_from_cache(const Checkpoint& ckpt, const ForwardCache& cache) {
  Logits out;
  out.rows = static_cast<std::size_t>(cache.h_final.rows());
  out.cols = ckpt.config.vocab;
  out.values.resize(out.rows * out.cols);
  MutMap(out.values.data(), static_cast<Eigen::Index>(out.rows), static_cast<Eigen::Index>(out.cols)).noalias() =
      cache.h_final * mat(ckpt.weights.params[head_index(ckpt.config)]);
  return out;
}

}  // namespace

// ---- config & parameters ----------------------------------------------------

void ModelConfig::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorCode::kInvalidConfiguration, m); };
  if (vocab == 0) bad("vocab must be positive");
  if (d_model == 0 || n_layers == 0 || n_heads == 0 || n_kv_groups == 0 || d_ff == 0 || max_seq == 0) {
    bad("model dimensions must be positive");
  }
  if (n_heads % n_kv_groups != 0) bad("n_heads must be divisible by n_kv_groups");
  if (d_model % n_heads != 0) bad("d_model must be divisible by n_heads");
  if (head_dim() % 2 != 0) bad("head dimension must be even for rotary embeddings");
  if (!(init_std > 0.0) || !(rope_base > 1.0) || !(norm_eps > 0.0)) bad("init_std, rope_base, norm_eps out of range");
}

ModelConfig default_model_config(const TokenSpace& space, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.vocab = space.total_size();
  cfg.seed = seed;
  return cfg;
}

std::size_t parameter_count(const ModelConfig& c) {
  const std::size_t per_layer = c.d_model                       // attention norm
                                + c.d_model * c.d_model         // W_q
                                + 2 * c.d_model * c.kv_dim()    // W_k, W_v
                                + c.d_model * c.d_model         // W_o
                                + c.d_model                     // ffn norm
                                + 3 * c.d_model * c.d_ff;       // gate, up, down
  return 2 * static_cast<std::size_t>(c.vocab) * c.d_model + c.n_layers * per_layer + c.d_model;
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> parameter_schema(const ModelConfig& c) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> s;
  s.push_back({"tok_embedding", {c.vocab, c.d_model}});
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    s.push_back({p + "attn_norm", {c.d_model}});
    s.push_back({p + "attn.wq", {c.d_model, c.d_model}});
    s.push_back({p + "attn.wk", {c.d_model, c.kv_dim()}});
    s.push_back({p + "attn.wv", {c.d_model, c.kv_dim()}});
    s.push_back({p + "attn.wo", {c.d_model, c.d_model}});
    s.push_back({p + "ffn_norm", {c.d_model}});
    s.push_back({p + "ffn.w_gate", {c.d_model, c.d_ff}});
    s.push_back({p + "ffn.w_up", {c.d_model, c.d_ff}});
    s.push_back({p + "ffn.w_down", {c.d_ff, c.d_model}});
  }
  s.push_back({"final_norm", {c.d_model}});
  s.push_back({"lm_head", {c.d_model, c.vocab}});
  return s;
}

Parameter& ParameterSet::at(std::string_view name) {
  for (auto& p : params) {
    if (p.name == name) return p;
  }
  fail(ErrorCode::kIncompatibleCheckpoint, "no tensor named '" + std::string(name) + "'");
}

const Parameter& ParameterSet::at(std::string_view name) const {
  return const_cast<ParameterSet*>(this)->at(name);
}

std::size_t ParameterSet::total_size() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params) n += p.size();
  return n;
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  out.params.reserve(params.size());
  for (const auto& p : params) out.params.push_back(Parameter{p.name, p.shape, std::vector<double>(p.size(), 0.0)});
  return out;
}

void ParameterSet::set_zero() {
  for (auto& p : params) std::fill(p.values.begin(), p.values.end(), 0.0);
}

void ParameterSet::add_scaled(const ParameterSet& other, double scale) {
  if (other.params.size() != params.size()) fail(ErrorCode::kIncompatibleCheckpoint, "parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& a = params[i];
    const auto& b = other.params[i];
    if (a.name != b.name || a.shape != b.shape) throw IncompatibleCheckpointError(a.name, "schema mismatch");
    for (std::size_t j = 0; j < a.size(); ++j) a.values[j] += scale * b.values[j];
  }
}

Checkpoint init_model(const ModelConfig& cfg) {
  cfg.validate();
  Checkpoint ckpt;
  ckpt.config = cfg;
  Rng rng(mix_seed(cfg.seed, 0x1417));
  for (auto& [name, shape] : parameter_schema(cfg)) {
    Parameter p{name, shape, {}};
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    p.values.resize(n);
    if (shape.size() == 1) {
      std::fill(p.values.begin(), p.values.end(), 1.0);
    } else {
      for (auto& v : p.values) v = cfg.init_std * rng.normal();
    }
    ckpt.weights.params.push_back(std::move(p));
  }
  return ckpt;
}

// ---- forward / backward -----------------------------------------------------

std::vector<double> rmsnorm(std::span<const double> x, std::span<const double> gain, double eps) {
  if (x.size() != gain.size() || x.empty()) fail(ErrorCode::kAlignment, "rmsnorm: gain and input sizes differ");
  RowMat in(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) in(0, static_cast<Eigen::Index>(i)) = x[i];
  const ConstVecMap g(gain.data(), static_cast<Eigen::Index>(gain.size()));
  RowMat out;
  Vec inv;
  rmsnorm_forward(in, g, eps, out, inv);
  return std::vector<double>(out.data(), out.data() + out.size());
}

Logits forward(const Checkpoint& ckpt, std::span<const TokenId> tokens) {
  check_schema(ckpt);
  check_tokens(ckpt.config, tokens);
  ForwardCache cache;
  trunk_forward(ckpt, tokens, cache);
  return logits_from_cache(ckpt, cache);
}

std::vector<double> forward_last(const Checkpoint& ckpt, std::span<const TokenId> tokens) {
  check_schema(ckpt);
  check_tokens(ckpt.config, tokens);
  ForwardCache cache;
  trunk_forward(ckpt, tokens, cache);
  std::vector<double> out(ckpt.config.vocab);
  Eigen::Map<Eigen::RowVectorXd>(out.data(), static_cast<Eigen::Index>(out.size())).noalias() =
      cache.h_final.row(cache.h_final.rows() - 1) * mat(ckpt.weights.params[head_index(ckpt.config)]);
  return out;
}

Gradients backward(const Checkpoint& ckpt, std::span<const TokenId> tokens, const Logits& adjoint) {
  check_schema(ckpt);
  check_tokens(ckpt.config, tokens);
  if (adjoint.rows != tokens.size() || adjoint.cols != ckpt.config.vocab) {
    fail(ErrorCode::kAlignment, "adjoint shape does not match (|tokens|, vocab)");
  }
  for (double v : adjoint.values) {
    if (!std::isfinite(v)) fail(ErrorCode::kNumeric, "non-finite loss adjoint");
  }
  ForwardCache cache;
  trunk_forward(ckpt, tokens, cache);
  const ConstMap dl(adjoint.values.data(), static_cast<Eigen::Index>(adjoint.rows),
                    static_cast<Eigen::Index>(adjoint.cols));
  return backward_from_cache(ckpt, tokens, cache, dl);
}

double forward_backward(const Checkpoint& ckpt, std::span<const TokenId> tokens,
                        const std::function<double(const Logits&, Logits&)>& loss_fn, Gradients* grads) {
  check_schema(ckpt);
  check_tokens(ckpt.config, tokens);
  ForwardCache cache;
  trunk_forward(ckpt, tokens, cache);
  const Logits logits = logits_from_cache(ckpt, cache);
  Logits adjoint;
  adjoint.rows = logits.rows;
  adjoint.cols = logits.cols;
  adjoint.values.assign(logits.values.size(), 0.0);
  const double loss = loss_fn(logits, adjoint);
  if (grads != nullptr) {
    for (double v : adjoint.values) {
      if (!std::isfinite(v)) fail(ErrorCode::kNumeric, "non-finite loss adjoint");
    }
    const ConstMap dl(adjoint.values.data(), static_cast<Eigen::Index>(adjoint.rows),
                      static_cast<Eigen::Index>(adjoint.cols));
    const Gradients g = backward_from_cache(ckpt, tokens, cache, dl);
    if (grads->params.empty()) {
      *grads = g;
    } else {
      grads->add_scaled(g, 1.0);
    }
  }
  return loss;
}

// ---- generation -------------------------------------------------------------

TokenSeq generate(const Checkpoint& ckpt, std::span<const TokenId> prompt, const GenerationPolicy& policy,
                  std::size_t max_new) {
  if (prompt.empty()) fail(ErrorCode::kInvalidConfiguration, "generation needs a non-empty prompt");
  if (policy.mode == DecodeMode::kTemperature && !(policy.temperature > 0.0)) {
    fail(ErrorCode::kInvalidConfiguration, "temperature must be positive");
  }
  TokenSeq context(prompt.begin(), prompt.end());
  TokenSeq out;
  Rng rng(policy.seed);
  std::size_t stops_seen = 0;
  while (out.size() < max_new && context.size() < ckpt.config.max_seq) {
    const std::vector<double> logits = forward_last(ckpt, context);
    TokenId next = 0;
    if (policy.mode == DecodeMode::kGreedy) {
      next = static_cast<TokenId>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    } else {
      const double mx = *std::max_element(logits.begin(), logits.end());
      std::vector<double> cdf(logits.size());
      double acc = 0.0;
      for (std::size_t i = 0; i < logits.size(); ++i) {
        acc += std::exp((logits[i] - mx) / policy.temperature);
        cdf[i] = acc;
      }
      const double u = rng.uniform() * acc;
      next = static_cast<TokenId>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      next = std::min<TokenId>(next, static_cast<TokenId>(logits.size() - 1));
    }
    out.push_back(next);
    context.push_back(next);
    if (policy.stop_token && next == *policy.stop_token && ++stops_seen >= policy.stop_count) break;
  }
  return out;
}

}  // namespace aqaa
