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

#include "aqaa/evalkit.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "aqaa/error.hpp"
#include "aqaa/objectives.hpp"
#include "aqaa/parallel.hpp"

namespace aqaa {

// ---- perplexity ---------------------------------------------------------------

CodebookPerplexity perplexity_per_codebook(const Checkpoint& ckpt, const std::vector<TrainingExample>& corpus,
                                           const TokenSpace& space) {
  if (corpus.empty()) fail(ErrorCode::kInvalidConfiguration, "perplexity needs a non-empty corpus");
  std::vector<std::array<ClassNll, 4>> per(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) {
    const TrainingExample& ex = corpus[i];
    const TokenLogProbs lp = token_log_probs(forward(ckpt, ex.tokens), ex.tokens, 1);
    for (std::size_t pos = 1; pos < ex.tokens.size(); ++pos) {
      if (ex.loss_mask[pos] == 0) continue;
      auto& slot = per[i][static_cast<std::size_t>(space.classify(ex.tokens[pos]))];
      slot.sum -= lp[pos - 1];
      ++slot.count;
    }
  });
  CodebookPerplexity out;
  for (const auto& p : per) {
    for (std::size_t c = 0; c < 4; ++c) {
      out.nll[c].sum += p[c].sum;
      out.nll[c].count += p[c].count;
    }
  }
  auto ppl = [&](TokenClass c) -> std::optional<double> {
    const auto& n = out.nll[static_cast<std::size_t>(c)];
    if (n.count == 0) return std::nullopt;
    return std::exp(n.sum / static_cast<double>(n.count));
  };
  out.text = ppl(TokenClass::kText);
  out.linguistic = ppl(TokenClass::kLinguistic);
  out.semantic = ppl(TokenClass::kSemantic);
  return out;
}

double mean_ce(const Checkpoint& ckpt, const std::vector<TrainingExample>& corpus) {
  if (corpus.empty()) fail(ErrorCode::kInvalidConfiguration, "mean_ce needs a non-empty corpus");
  std::vector<double> ce(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) { ce[i] = example_ce(ckpt, corpus[i]); });
  double sum = 0.0;
  for (double v : ce) sum += v;
  return sum / static_cast<double>(corpus.size());
}

double mean_preference_margin(const Checkpoint& policy, const Checkpoint& reference,
                              const std::vector<PreferencePair>& pairs, const TokenSpace& space, double beta) {
  if (pairs.empty()) fail(ErrorCode::kInvalidConfiguration, "margin needs at least one preference pair");
  std::vector<double> margins(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    const auto& p = pairs[i];
    const auto ref_w = response_log_probs(reference, p.prompt, p.chosen);
    const auto ref_l = response_log_probs(reference, p.prompt, p.rejected);
    const auto pol_w = response_log_probs(policy, p.prompt, p.chosen);
    const auto pol_l = response_log_probs(policy, p.prompt, p.rejected);
    margins[i] = masked_dpo_loss(pol_w, ref_w, pol_l, ref_l, audio_mask(p.chosen, space),
                                 audio_mask(p.rejected, space), beta)
                     .margin;
  });
  double sum = 0.0;
  for (double m : margins) sum += m;
  return sum / static_cast<double>(pairs.size());
}

// ---- format validation -------------------------------------------------------

namespace {

struct Run {
  bool text;
  std::size_t begin;
  std::size_t length;
};

std::vector<Run> runs_of(std::span<const TokenId> tokens, std::size_t offset, const TokenSpace& space) {
  std::vector<Run> runs;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const bool text = space.is_text(tokens[i]);
    if (runs.empty() || runs.back().text != text) {
      runs.push_back(Run{text, offset + i, 1});
    } else {
      ++runs.back().length;
    }
  }
  return runs;
}

void check_piece(std::span<const TokenId> tokens, std::size_t offset, RatioMode mode, const TokenSpace& space,
                 std::vector<ChunkViolation>& out) {
  const std::vector<Run> runs = runs_of(tokens, offset, space);
  if (runs.empty()) return;
  std::vector<std::size_t> text_runs;
  std::vector<std::size_t> audio_runs;
  for (std::size_t r = 0; r < runs.size(); ++r) (runs[r].text ? text_runs : audio_runs).push_back(r);

  if (mode == RatioMode::kAudioOnly) {
    for (std::size_t r : text_runs) out.push_back({runs[r].begin, "text token in an audio_only sequence"});
    return;
  }
  if (mode == RatioMode::kTextCot) {
    if (!text_runs.empty() && text_runs.front() != 0) {
      out.push_back({runs[text_runs.front()].begin, "text_cot text does not precede all audio"});
    }
    for (std::size_t k = 1; k < text_runs.size(); ++k) {
      out.push_back({runs[text_runs[k]].begin, "text_cot sequence has more than one text run"});
    }
    return;
  }

  const ChunkSizes chunk = *chunk_sizes(mode);
  if (!text_runs.empty() && !audio_runs.empty() && !runs.front().text) {
    out.push_back({runs.front().begin, "sequence opens with audio while text remains"});
  }
  for (std::size_t k = 0; k + 1 < text_runs.size(); ++k) {
    const Run& r = runs[text_runs[k]];
    if (r.length != chunk.text) {
      out.push_back({r.begin, "text run of " + std::to_string(r.length) + " tokens, expected " +
                                  std::to_string(chunk.text)});
    }
  }
  for (std::size_t k = 0; k + 1 < audio_runs.size(); ++k) {
    const Run& r = runs[audio_runs[k]];
    if (r.length != chunk.audio) {
      out.push_back({r.begin, "audio run of " + std::to_string(r.length) + " tokens, expected " +
                                  std::to_string(chunk.audio)});
    }
  }
  if (!text_runs.empty() && text_runs.back() + 1 < runs.size() && runs[text_runs.back()].length > chunk.text) {
    out.push_back({runs[text_runs.back()].begin, "final text chunk before audio exceeds " +
                                                     std::to_string(chunk.text) + " tokens"});
  }
  if (!audio_runs.empty() && audio_runs.back() + 1 < runs.size() && runs[audio_runs.back()].length > chunk.audio) {
    out.push_back({runs[audio_runs.back()].begin, "final audio chunk before text exceeds " +
                                                      std::to_string(chunk.audio) + " tokens"});
  }
}

}  // namespace

FormatReport validate_format(const InterleavedSequence& seq) {
  FormatReport report;
  const TokenSpace& space = seq.space;
  for (TokenId id : seq.tokens) {
    if (!space.contains(id)) {
      report.out_of_vocabulary = true;
      report.well_formed_markers = false;
      return report;
    }
    ++report.class_histogram[static_cast<std::size_t>(space.classify(id))];
  }

  bool open = false;
  for (std::size_t i = 0; i < seq.tokens.size() && report.well_formed_markers; ++i) {
    const TokenId id = seq.tokens[i];
    if (id == space.audio_start()) {
      if (open) {
        report.well_formed_markers = false;
        report.first_marker_error = i;
      }
      open = true;
    } else if (id == space.audio_end()) {
      if (!open) {
        report.well_formed_markers = false;
        report.first_marker_error = i;
      }
      open = false;
    }
  }
  if (report.well_formed_markers && open) {
    report.well_formed_markers = false;
    report.first_marker_error = seq.tokens.size();
  }

  std::vector<std::size_t> starts = seq.piece_starts;
  if (starts.empty() || starts.front() != 0) starts.insert(starts.begin(), 0);
  for (std::size_t p = 0; p < starts.size(); ++p) {
    const std::size_t b = std::min(starts[p], seq.tokens.size());
    const std::size_t e = p + 1 < starts.size() ? std::min(starts[p + 1], seq.tokens.size()) : seq.tokens.size();
    if (e < b) {
      report.chunk_law_violations.push_back({b, "piece boundaries out of order"});
      continue;
    }
    check_piece(std::span<const TokenId>(seq.tokens).subspan(b, e - b), b, seq.mode, space,
                report.chunk_law_violations);
  }
  return report;
}

std::vector<std::size_t> infer_piece_starts(std::span<const TokenId> tokens, const TokenSpace& space,
                                            RatioMode mode) {
  for (TokenId id : tokens) {
    if (!space.contains(id)) return {};
  }
  const Channels ch = deinterleave(tokens, space);
  std::vector<TokenSeq> segments;
  bool open = false;
  for (TokenId id : ch.audio) {
    if (id == space.audio_start()) {
      if (open) return {};
      segments.emplace_back();
      open = true;
    } else if (!open) {
      return {};
    }
    segments.back().push_back(id);
    if (id == space.audio_end()) open = false;
  }
  if (open) return {};
  try {
    return concat_multilabel(segments, ConcatMethod::kPreInterleaved, ch.text, space, mode).piece_starts;
  } catch (const Error&) {
    return {};
  }
}

FormatReport validate_stream(std::span<const TokenId> tokens, const TokenSpace& space, RatioMode mode,
                             ConcatMethod method) {
  InterleavedSequence seq;
  seq.tokens.assign(tokens.begin(), tokens.end());
  seq.mode = mode;
  seq.space = space;
  if (method == ConcatMethod::kPreInterleaved) seq.piece_starts = infer_piece_starts(tokens, space, mode);
  return validate_format(seq);
}

// ---- round trip ----------------------------------------------------------------

RoundTripReport aqaa_round_trip(const Checkpoint& ckpt, const SyntheticUtterance& query, const TokenSpace& space,
                                const RoundTripOptions& options) {
  RoundTripReport r;
  try {
    r.prompt = make_prompt(query, space);
  } catch (const Error& e) {
    r.vocode_error = std::string("query could not be tokenized: ") + e.what();
    r.format.well_formed_markers = false;
    return r;
  }
  GenerationPolicy policy;
  policy.stop_token = space.audio_end();
  policy.stop_count = options.stop_count;
  const std::size_t room = ckpt.config.max_seq > r.prompt.size() ? ckpt.config.max_seq - r.prompt.size() : 0;
  if (room > 0) r.generated = generate(ckpt, r.prompt, policy, std::min(options.max_new, room));

  InterleavedSequence seq;
  seq.tokens = r.generated;
  seq.mode = options.mode;
  seq.space = space;
  r.format = validate_format(seq);
  if (r.format.out_of_vocabulary) {
    r.vocode_error = "generation contains out-of-vocabulary ids";
    return r;
  }

  const Channels ch = deinterleave(r.generated, space);
  r.response_text = ch.text;
  r.response_audio = ch.audio;
  TokenSeq payload;
  for (TokenId id : ch.audio) {
    if (!space.is_marker(id)) payload.push_back(id);
  }
  try {
    const DualTokens dual = split_dual(payload, space);
    r.response_utterance = vocode(dual.linguistic, dual.semantic, space);
  } catch (const Error& e) {
    r.vocode_error = e.what();
  }
  return r;
}

bool round_trip_correct(const RoundTripReport& report, const SyntheticUtterance& query, Task task,
                        const TokenSpace& space, const CorpusOptions& corpus_options,
                        const DatasetOptions& dataset_options) {
  if (!report.format.valid() || !report.response_utterance) return false;
  const auto want = expected_answer(query, task, space, corpus_options);
  if (!want || *want != report.response_text) return false;
  AqtaPair p;
  p.task = task;
  p.query_audio = query;
  p.answer_text = *want;
  if (task == Task::kLabelSwitch) p.segments = expected_segments(query, task, space, corpus_options);
  const AqtaaPair full = build_aqtaa(p, dataset_options.blocks_per_text_token, dataset_options.answer_voice_seed, space);
  return full.answer_audio == *report.response_utterance;
}

// ---- ablation ------------------------------------------------------------------

std::vector<AblationRow> ablation_run(const Checkpoint& base, const std::vector<RatioMode>& modes,
                                      const std::vector<ConcatMethod>& methods,
                                      const std::vector<AqtaPair>& train_corpus,
                                      const std::vector<AqtaPair>& eval_corpus, const TokenSpace& space,
                                      const CorpusOptions& corpus_options, const AblationOptions& options) {
  if (modes.empty() || methods.empty()) fail(ErrorCode::kInvalidConfiguration, "ablation needs modes and methods");
  if (train_corpus.empty() || eval_corpus.empty()) fail(ErrorCode::kInvalidConfiguration, "ablation needs corpora");
  const std::size_t n_eval = std::min(options.eval_examples, eval_corpus.size());
  const std::vector<AqtaPair> eval_pairs(eval_corpus.begin(), eval_corpus.begin() + static_cast<std::ptrdiff_t>(n_eval));

  std::vector<AblationRow> rows;
  for (RatioMode mode : modes) {
    for (ConcatMethod method : methods) {
      DatasetOptions dopts = options.dataset;
      dopts.mode = mode;
      dopts.method = method;
      const auto train = build_sft_examples(train_corpus, space, dopts, false);
      const auto eval = build_sft_examples(eval_pairs, space, dopts, false);

      TrainPlan plan = TrainPlan::defaults(Stage::kSft2);
      plan.steps = options.sft_steps;
      plan.batch_size = options.batch_size;
      plan.lr = options.lr;
      plan.seed = options.seed;
      const Checkpoint tuned = run_sft(base, train, plan);

      AblationRow row;
      row.mode = mode;
      row.method = method;
      row.ce = mean_ce(tuned, eval);
      const auto pairs = build_preference_pairs(eval_pairs, space, dopts, corpus_options, options.seed);
      row.margin = mean_preference_margin(tuned, base, pairs, space, options.beta);

      const std::size_t n_gen = std::min(options.generations, eval_pairs.size());
      std::vector<std::uint8_t> ok(n_gen, 0);
      parallel_for(n_gen, [&](std::size_t i) {
        const auto& p = eval_pairs[i];
        GenerationPolicy policy;
        policy.stop_token = space.audio_end();
        policy.stop_count = method == ConcatMethod::kMarkerRemoval ? 1 : effective_segments(p).size();
        const TokenSeq out = generate(tuned, make_prompt(p.query_audio, space), policy, options.max_new);
        ok[i] = validate_stream(out, space, mode, method).valid() ? 1 : 0;
      });
      std::size_t passed = 0;
      for (auto v : ok) passed += v;
      row.validity_rate = n_gen == 0 ? 0.0 : static_cast<double>(passed) / static_cast<double>(n_gen);
      row.ppl = perplexity_per_codebook(tuned, eval, space);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out.precision(17);
  auto opt = [&](const std::optional<double>& v) {
    if (v) {
      out << *v;
    } else {
      out << "NA";
    }
  };
  out << "mode,method,ce,margin,validity_rate,text_ppl,linguistic_ppl,semantic_ppl\n";
  for (const auto& r : rows) {
    out << to_string(r.mode) << ',' << to_string(r.method) << ',' << r.ce << ',' << r.margin << ','
        << r.validity_rate << ',';
    opt(r.ppl.text);
    out << ',';
    opt(r.ppl.linguistic);
    out << ',';
    opt(r.ppl.semantic);
    out << '\n';
  }
  return out.str();
}

}  // namespace aqaa
