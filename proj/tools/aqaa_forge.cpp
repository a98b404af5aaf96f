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

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "aqaa/dataset.hpp"
#include "aqaa/error.hpp"
#include "aqaa/evalkit.hpp"
#include "aqaa/manifest.hpp"
#include "aqaa/merge.hpp"
#include "aqaa/objectives.hpp"
#include "aqaa/parallel.hpp"
#include "aqaa/train.hpp"

namespace fs = std::filesystem;
using namespace aqaa;

namespace {

constexpr int kOk = 0;
constexpr int kValidationFailure = 1;
constexpr int kUsage = 2;

// Raised by subcommands when --strict validation fails after outputs were written.
struct ValidationFailure {
  std::string message;
};

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

void write_text(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + file.string());
  out << text;
}

struct Common {
  std::uint64_t seed = 0;
  fs::path out;
  bool strict = false;
};

void add_common(CLI::App* sub, Common& c, bool strict_flag) {
  sub->add_option("--seed", c.seed, "Seed for every random choice")->required();
  sub->add_option("--out", c.out, "Output directory")->required();
  if (strict_flag) sub->add_flag("--strict", c.strict, "Exit 1 when any validity check fails");
}

void finish(const Common& c, const std::string& command, std::map<std::string, std::string> params,
            std::vector<fs::path> outputs) {
  RunManifest m;
  m.command = command;
  m.seed = c.seed;
  m.parameters = std::move(params);
  m.outputs = std::move(outputs);
  write_run_manifest(c.out / "run_manifest.json", m);
}

// ---- gen-corpus ---------------------------------------------------------------

struct GenCorpusArgs {
  Common c;
  std::string task = "echo";
  std::size_t n = 512;
  std::uint32_t text_size = 512;
  CorpusOptions options;
  std::optional<std::size_t> mix;
};

int run_gen_corpus(const GenCorpusArgs& a) {
  const TokenSpace space = TokenSpace::build(a.text_size);
  const Task task = parse_task(a.task);
  CorpusOptions o = a.options;
  o.label_switch_mix = task == Task::kLabelSwitch ? 0 : a.mix.value_or(a.n / 4);
  const auto pairs = synth_corpus(a.c.seed, a.n, task, space, o);
  CorpusManifest m{a.c.seed, task, pairs.size(), a.text_size, o};
  write_corpus(a.c.out, pairs, m);
  finish(a.c, "gen-corpus",
         {{"task", a.task},
          {"n", std::to_string(a.n)},
          {"text_size", std::to_string(a.text_size)},
          {"alphabet", std::to_string(o.alphabet)},
          {"min_symbols", std::to_string(o.min_symbols)},
          {"max_symbols", std::to_string(o.max_symbols)},
          {"labels", std::to_string(o.labels)},
          {"label_switch_mix", std::to_string(o.label_switch_mix)}},
         {a.c.out / "corpus.jsonl", a.c.out / "manifest.json"});
  std::cout << "wrote " << pairs.size() << " pairs to " << a.c.out.string() << '\n';
  return kOk;
}

// ---- build-dataset ------------------------------------------------------------

struct DatasetArgs {
  Common c;
  fs::path corpus;
  std::string mode = "ratio_10_15";
  std::string method = "marker_preserving";
  bool no_aqta = false;
};

DatasetOptions dataset_options(const std::string& mode, const std::string& method) {
  DatasetOptions d;
  d.mode = parse_ratio_mode(mode);
  d.method = parse_concat_method(method);
  return d;
}

int run_build_dataset(const DatasetArgs& a) {
  CorpusManifest cm;
  const auto pairs = read_corpus(a.corpus, &cm);
  const TokenSpace space = TokenSpace::build(cm.text_size);
  const DatasetOptions d = dataset_options(a.mode, a.method);
  const auto sft = build_sft_examples(pairs, space, d, !a.no_aqta);
  const auto stage2 = build_sft_examples(select_stage2(pairs), space, d, false);
  const auto prefs = build_preference_pairs(pairs, space, d, cm.options, a.c.seed);

  std::size_t invalid = 0;
  std::size_t checked = 0;
  for (const auto& ex : sft) {
    if (ex.kind != ExampleKind::kAqtaa) continue;
    ++checked;
    const std::span<const TokenId> resp(ex.tokens.data() + ex.prompt_length, ex.response_length());
    if (!validate_stream(resp, space, d.mode, d.method).valid()) ++invalid;
  }
  write_examples(a.c.out / "sft.jsonl", sft);
  write_examples(a.c.out / "stage2.jsonl", stage2);
  write_preferences(a.c.out / "preferences.jsonl", prefs);
  finish(a.c, "build-dataset",
         {{"corpus", a.corpus.string()}, {"mode", a.mode}, {"method", a.method},
          {"include_aqta", a.no_aqta ? "false" : "true"}},
         {a.c.out / "sft.jsonl", a.c.out / "stage2.jsonl", a.c.out / "preferences.jsonl"});
  std::cout << "sft " << sft.size() << " stage2 " << stage2.size() << " preferences " << prefs.size()
            << " invalid_responses " << invalid << '/' << checked << '\n';
  if (a.c.strict && invalid > 0) throw ValidationFailure{std::to_string(invalid) + " responses fail validate_format"};
  return kOk;
}

// ---- train-sft / train-dpo ---------------------------------------------------

struct TrainArgs {
  Common c;
  fs::path corpus;
  fs::path pairs;
  fs::path init;
  std::string stage = "sft1";
  std::optional<std::size_t> steps;
  std::optional<std::size_t> batch;
  std::optional<double> lr;
  std::optional<double> beta;
  std::optional<double> clip;
  std::string mode = "ratio_10_15";
  std::string method = "marker_preserving";
};

std::map<std::string, std::string> plan_params(const TrainPlan& p, const TrainArgs& a) {
  return {{"stage", std::string(to_string(p.stage))},
          {"corpus", (a.corpus.empty() ? a.pairs : a.corpus).string()},
          {"init", a.init.string()},
          {"steps", p.max_steps ? std::to_string(*p.max_steps) : std::to_string(p.steps)},
          {"batch_size", std::to_string(p.batch_size)},
          {"lr", fmt(p.lr)},
          {"beta", fmt(p.beta)},
          {"clip_norm", fmt(p.clip_norm)},
          {"mode", a.mode},
          {"method", a.method}};
}

TrainPlan make_plan(Stage stage, const TrainArgs& a) {
  TrainPlan p = TrainPlan::defaults(stage);
  p.seed = a.c.seed;
  p.corpus = a.corpus.empty() ? a.pairs : a.corpus;
  p.init = a.init;
  p.output = a.c.out;
  if (a.steps) {
    p.max_steps = *a.steps;
    if (stage != Stage::kSft1) p.steps = *a.steps;
  }
  if (a.batch) p.batch_size = *a.batch;
  if (a.lr) p.lr = *a.lr;
  if (a.beta) p.beta = *a.beta;
  if (a.clip) p.clip_norm = *a.clip;
  p.validate();
  return p;
}

void save_run(const Common& c, const Checkpoint& ckpt, const TrainLog& log, const TrainPlan& plan,
              const std::string& command, std::map<std::string, std::string> params) {
  save_checkpoint(ckpt, c.out);
  write_log_csv(c.out / "train_log.csv", log);
  write_text(c.out / "plan.json", plan_to_json(plan));
  finish(c, command, std::move(params), {c.out, c.out / "train_log.csv", c.out / "plan.json"});
}

int run_train_sft(const TrainArgs& a) {
  const Stage stage = parse_stage(a.stage);
  if (stage == Stage::kDpo) fail(ErrorCode::kInvalidConfiguration, "train-sft takes --stage sft1 or sft2");
  const TrainPlan plan = make_plan(stage, a);
  CorpusManifest cm;
  const auto pairs = read_corpus(a.corpus, &cm);
  const TokenSpace space = TokenSpace::build(cm.text_size);
  const DatasetOptions d = dataset_options(a.mode, a.method);
  std::vector<TrainingExample> data;
  if (stage == Stage::kSft1) {
    data = build_sft_examples(pairs, space, d, true);
  } else {
    data = build_sft_examples(select_stage2(pairs), space, d, false);
    if (data.empty()) fail(ErrorCode::kInvalidConfiguration, "corpus has no label_switch pairs for stage 2");
  }
  Checkpoint init;
  if (a.init.empty()) {
    if (stage != Stage::kSft1) fail(ErrorCode::kInvalidConfiguration, "stage sft2 needs --init");
    init = init_model(default_model_config(space, a.c.seed));
  } else {
    init = load_checkpoint(a.init);
    if (init.config.vocab != space.total_size()) {
      fail(ErrorCode::kInvalidConfiguration, "checkpoint vocabulary does not match the corpus token space");
    }
  }
  TrainLog log;
  const Checkpoint out = run_sft(init, data, plan, &log);
  save_run(a.c, out, log, plan, "train-sft", plan_params(plan, a));
  std::cout << "initial_batch_ce " << fmt(log.initial_batch_loss) << " epoch_mean_ce " << fmt(log.epoch_mean_loss)
            << " steps " << log.rows.size() << '\n';
  return kOk;
}

int run_train_dpo(const TrainArgs& a) {
  const TrainPlan plan = make_plan(Stage::kDpo, a);
  const Checkpoint init = load_checkpoint(a.init);
  std::vector<PreferencePair> prefs;
  std::uint32_t text_size = 0;
  if (!a.pairs.empty()) {
    prefs = read_preferences(a.pairs);
    text_size = static_cast<std::uint32_t>(init.config.vocab - kAudioCodebookTotal - kMarkerCount);
  } else {
    CorpusManifest cm;
    const auto pairs = read_corpus(a.corpus, &cm);
    text_size = cm.text_size;
    prefs = build_preference_pairs(pairs, TokenSpace::build(text_size), dataset_options(a.mode, a.method), cm.options,
                                   a.c.seed);
  }
  const TokenSpace space = TokenSpace::build(text_size);
  if (init.config.vocab != space.total_size()) {
    fail(ErrorCode::kInvalidConfiguration, "checkpoint vocabulary does not match the corpus token space");
  }
  TrainLog log;
  const Checkpoint out = run_dpo(init, prefs, space, plan, &log);
  save_run(a.c, out, log, plan, "train-dpo", plan_params(plan, a));
  std::cout << "steps " << log.rows.size() << " final_loss "
            << (log.rows.empty() ? std::string("NA") : fmt(log.rows.back().loss)) << '\n';
  return kOk;
}

// ---- merge --------------------------------------------------------------------

struct MergeArgs {
  Common c;
  std::vector<fs::path> in;
  std::vector<double> weights;
};

int run_merge(const MergeArgs& a) {
  std::vector<Checkpoint> ckpts;
  for (const auto& p : a.in) ckpts.push_back(load_checkpoint(p));
  std::vector<double> w = a.weights;
  if (w.empty() && ckpts.size() == std::size(kDefaultMergeWeights)) w.assign(std::begin(kDefaultMergeWeights), std::end(kDefaultMergeWeights));
  const Checkpoint merged = merge_checkpoints(ckpts, w);
  save_checkpoint(merged, a.c.out);
  std::map<std::string, std::string> params;
  for (std::size_t i = 0; i < a.in.size(); ++i) {
    params["in." + std::to_string(i)] = a.in[i].string();
    if (i < w.size()) params["weight." + std::to_string(i)] = fmt(w[i]);
  }
  finish(a.c, "merge", params, {a.c.out});
  std::cout << "merged " << ckpts.size() << " checkpoints fingerprint " << hex64(fingerprint(merged)) << '\n';
  return kOk;
}

// ---- eval ---------------------------------------------------------------------

struct EvalArgs {
  Common c;
  fs::path ckpt;
  fs::path corpus;
  fs::path reference;
  std::string mode = "ratio_10_15";
  std::string method = "marker_preserving";
  double beta = 0.1;
  std::size_t generations = 0;
  std::size_t max_new = 128;
};

nlohmann::json ppl_json(const CodebookPerplexity& p) {
  auto v = [](const std::optional<double>& x) { return x ? nlohmann::json(*x) : nlohmann::json(nullptr); };
  return {{"text", v(p.text)}, {"linguistic", v(p.linguistic)}, {"semantic", v(p.semantic)}};
}

int run_eval(const EvalArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  CorpusManifest cm;
  const auto pairs = read_corpus(a.corpus, &cm);
  const TokenSpace space = TokenSpace::build(cm.text_size);
  const DatasetOptions d = dataset_options(a.mode, a.method);
  const auto examples = build_sft_examples(pairs, space, d, true);
  nlohmann::json j;
  j["ce"] = mean_ce(ckpt, examples);
  j["perplexity"] = ppl_json(perplexity_per_codebook(ckpt, examples, space));
  if (!a.reference.empty()) {
    const Checkpoint ref = load_checkpoint(a.reference);
    const auto prefs = build_preference_pairs(pairs, space, d, cm.options, a.c.seed);
    j["preference_margin"] = mean_preference_margin(ckpt, ref, prefs, space, a.beta);
  }
  std::size_t valid = 0;
  const std::size_t n_gen = std::min(a.generations, pairs.size());
  if (n_gen > 0) {
    std::vector<std::uint8_t> ok(n_gen, 0);
    parallel_for(n_gen, [&](std::size_t i) {
      GenerationPolicy policy;
      policy.stop_token = space.audio_end();
      policy.stop_count = d.method == ConcatMethod::kMarkerRemoval ? 1 : effective_segments(pairs[i]).size();
      const TokenSeq out = generate(ckpt, make_prompt(pairs[i].query_audio, space), policy, a.max_new);
      ok[i] = validate_stream(out, space, d.mode, d.method).valid() ? 1 : 0;
    });
    for (auto v : ok) valid += v;
    j["generations"] = n_gen;
    j["validity_rate"] = static_cast<double>(valid) / static_cast<double>(n_gen);
  }
  write_text(a.c.out / "metrics.json", j.dump(2) + "\n");
  finish(a.c, "eval",
         {{"ckpt", a.ckpt.string()}, {"corpus", a.corpus.string()}, {"reference", a.reference.string()},
          {"mode", a.mode}, {"method", a.method}, {"beta", fmt(a.beta)},
          {"generations", std::to_string(a.generations)}},
         {a.c.out / "metrics.json"});
  std::cout << j.dump() << '\n';
  if (a.c.strict && n_gen > 0 && valid < n_gen) {
    throw ValidationFailure{std::to_string(n_gen - valid) + " generations fail validate_format"};
  }
  return kOk;
}

// ---- round-trip ---------------------------------------------------------------

struct RoundTripArgs {
  Common c;
  fs::path ckpt;
  fs::path corpus;
  std::size_t n = 50;
  std::size_t max_new = 128;
  std::string mode = "ratio_10_15";
};

int run_round_trip(const RoundTripArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  CorpusManifest cm;
  const auto pairs = read_corpus(a.corpus, &cm);
  const TokenSpace space = TokenSpace::build(cm.text_size);
  const std::size_t n = std::min(a.n, pairs.size());
  DatasetOptions d;
  d.mode = parse_ratio_mode(a.mode);
  std::vector<RoundTripReport> reports(n);
  std::vector<std::uint8_t> correct(n, 0);
  parallel_for(n, [&](std::size_t i) {
    RoundTripOptions o;
    o.max_new = a.max_new;
    o.mode = d.mode;
    o.stop_count = effective_segments(pairs[i]).size();
    reports[i] = aqaa_round_trip(ckpt, pairs[i].query_audio, space, o);
    correct[i] = round_trip_correct(reports[i], pairs[i].query_audio, pairs[i].task, space, cm.options, d) ? 1 : 0;
  });
  std::ostringstream csv;
  csv << "index,correct,format_valid,generated_tokens,vocode_error\n";
  std::size_t n_correct = 0;
  std::size_t n_valid = 0;
  for (std::size_t i = 0; i < n; ++i) {
    n_correct += correct[i];
    n_valid += reports[i].format.valid() ? 1 : 0;
    std::string err = reports[i].vocode_error;
    for (char& ch : err) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    csv << i << ',' << int(correct[i]) << ',' << (reports[i].format.valid() ? 1 : 0) << ','
        << reports[i].generated.size() << ',' << err << '\n';
  }
  write_text(a.c.out / "round_trip.csv", csv.str());
  finish(a.c, "round-trip",
         {{"ckpt", a.ckpt.string()}, {"corpus", a.corpus.string()}, {"n", std::to_string(n)},
          {"max_new", std::to_string(a.max_new)}, {"mode", a.mode}},
         {a.c.out / "round_trip.csv"});
  const double acc = n == 0 ? 0.0 : static_cast<double>(n_correct) / static_cast<double>(n);
  std::cout << "accuracy " << fmt(acc) << " (" << n_correct << '/' << n << ") format_valid " << n_valid << '/' << n
            << '\n';
  if (a.c.strict && n_valid < n) throw ValidationFailure{std::to_string(n - n_valid) + " responses fail validate_format"};
  return kOk;
}

// ---- ablate -------------------------------------------------------------------

struct AblateArgs {
  Common c;
  fs::path init;
  fs::path corpus;
  fs::path eval_corpus;
  std::vector<std::string> modes;
  std::vector<std::string> methods;
  AblationOptions options;
};

int run_ablate(const AblateArgs& a) {
  CorpusManifest cm;
  const auto train = read_corpus(a.corpus, &cm);
  const TokenSpace space = TokenSpace::build(cm.text_size);
  const auto eval = a.eval_corpus.empty() ? train : read_corpus(a.eval_corpus);
  std::vector<RatioMode> modes;
  std::vector<ConcatMethod> methods;
  if (a.modes.empty()) modes.assign(kAllRatioModes.begin(), kAllRatioModes.end());
  for (const auto& m : a.modes) modes.push_back(parse_ratio_mode(m));
  if (a.methods.empty()) methods.assign(kAllConcatMethods.begin(), kAllConcatMethods.end());
  for (const auto& m : a.methods) methods.push_back(parse_concat_method(m));
  const Checkpoint base =
      a.init.empty() ? init_model(default_model_config(space, a.c.seed)) : load_checkpoint(a.init);
  AblationOptions o = a.options;
  o.seed = a.c.seed;
  const auto rows = ablation_run(base, modes, methods, train, eval, space, cm.options, o);
  write_text(a.c.out / "ablation.csv", ablation_csv(rows));
  std::string mode_list;
  for (auto m : modes) mode_list += std::string(mode_list.empty() ? "" : " ") + std::string(to_string(m));
  std::string method_list;
  for (auto m : methods) method_list += std::string(method_list.empty() ? "" : " ") + std::string(to_string(m));
  finish(a.c, "ablate",
         {{"init", a.init.string()}, {"corpus", a.corpus.string()}, {"eval_corpus", a.eval_corpus.string()},
          {"modes", mode_list}, {"methods", method_list}, {"sft_steps", std::to_string(o.sft_steps)},
          {"batch_size", std::to_string(o.batch_size)}, {"lr", fmt(o.lr)}, {"beta", fmt(o.beta)},
          {"eval_examples", std::to_string(o.eval_examples)}, {"generations", std::to_string(o.generations)},
          {"max_new", std::to_string(o.max_new)}},
         {a.c.out / "ablation.csv"});
  std::cout << rows.size() << " ablation rows written\n";
  if (a.c.strict) {
    for (const auto& r : rows) {
      if (r.validity_rate < 1.0) throw ValidationFailure{"some ablation generations fail validate_format"};
    }
  }
  return kOk;
}

// ---- validate -----------------------------------------------------------------

struct ValidateArgs {
  Common c;
  fs::path examples;
  std::string tokens;
  std::uint32_t text_size = 512;
  std::string mode = "ratio_10_15";
  std::string method = "marker_preserving";
};

int run_validate(const ValidateArgs& a) {
  const TokenSpace space = TokenSpace::build(a.text_size);
  const RatioMode mode = parse_ratio_mode(a.mode);
  const ConcatMethod method = parse_concat_method(a.method);
  std::vector<TokenSeq> streams;
  if (!a.examples.empty()) {
    for (const auto& ex : read_examples(a.examples)) {
      if (ex.kind != ExampleKind::kAqtaa) continue;
      streams.emplace_back(ex.tokens.begin() + static_cast<std::ptrdiff_t>(ex.prompt_length), ex.tokens.end());
    }
  } else {
    std::istringstream in(a.tokens);
    TokenSeq seq;
    long long v = 0;
    while (in >> v) {
      if (v < 0 || v > 0xFFFFFFFFLL) fail(ErrorCode::kInvalidConfiguration, "token ids must be non-negative 32-bit");
      seq.push_back(static_cast<TokenId>(v));
    }
    if (!in.eof()) fail(ErrorCode::kInvalidConfiguration, "--tokens must be whitespace separated integers");
    streams.push_back(std::move(seq));
  }
  std::ostringstream report;
  report << "index,valid,well_formed_markers,first_marker_error,chunk_law_violations,out_of_vocabulary,first_violation\n";
  std::size_t bad = 0;
  for (std::size_t i = 0; i < streams.size(); ++i) {
    const FormatReport r = validate_stream(streams[i], space, mode, method);
    if (!r.valid()) ++bad;
    report << i << ',' << r.valid() << ',' << r.well_formed_markers << ','
           << (r.first_marker_error ? std::to_string(*r.first_marker_error) : "NA") << ','
           << r.chunk_law_violations.size() << ',' << r.out_of_vocabulary << ','
           << (r.chunk_law_violations.empty() ? std::string("NA")
                                              : std::to_string(r.chunk_law_violations.front().index) + ": " +
                                                    r.chunk_law_violations.front().what)
           << '\n';
  }
  write_text(a.c.out / "validate.csv", report.str());
  finish(a.c, "validate",
         {{"examples", a.examples.string()}, {"text_size", std::to_string(a.text_size)}, {"mode", a.mode},
          {"method", a.method}},
         {a.c.out / "validate.csv"});
  std::cout << "valid " << (streams.size() - bad) << '/' << streams.size() << '\n';
  if (bad > 0) throw ValidationFailure{std::to_string(bad) + " sequences fail validate_format"};
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aqaa-forge: interleaved text/audio token machinery and post-training recipe"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  GenCorpusArgs gen;
  auto* s_gen = app.add_subcommand("gen-corpus", "Synthesize a seeded AQTA task corpus");
  add_common(s_gen, gen.c, false);
  s_gen->add_option("--task", gen.task, "echo | arithmetic | label_switch")->capture_default_str();
  s_gen->add_option("--n", gen.n, "Number of task pairs")->capture_default_str()->check(CLI::PositiveNumber);
  s_gen->add_option("--text-size", gen.text_size, "Text vocabulary size")->capture_default_str();
  s_gen->add_option("--alphabet", gen.options.alphabet, "Echo/label_switch symbol count")->capture_default_str();
  s_gen->add_option("--min-symbols", gen.options.min_symbols)->capture_default_str();
  s_gen->add_option("--max-symbols", gen.options.max_symbols)->capture_default_str();
  s_gen->add_option("--labels", gen.options.labels, "label_switch speech states")->capture_default_str();
  s_gen->add_option("--blocks-per-token", gen.options.blocks_per_text_token)->capture_default_str();
  s_gen->add_option("--label-switch-mix", gen.mix, "label_switch pairs appended for stage 2 (default n/4)");

  DatasetArgs ds;
  auto* s_ds = app.add_subcommand("build-dataset", "Build SFT examples and preference pairs from a corpus");
  add_common(s_ds, ds.c, true);
  s_ds->add_option("--corpus", ds.corpus, "Corpus directory")->required();
  s_ds->add_option("--mode", ds.mode)->capture_default_str();
  s_ds->add_option("--method", ds.method)->capture_default_str();
  s_ds->add_flag("--no-aqta", ds.no_aqta, "Emit only AQTAA examples");

  TrainArgs sft;
  auto* s_sft = app.add_subcommand("train-sft", "Supervised fine-tuning, stage sft1 or sft2");
  add_common(s_sft, sft.c, false);
  s_sft->add_option("--corpus", sft.corpus, "Corpus directory")->required();
  s_sft->add_option("--init", sft.init, "Initial checkpoint (sft1 default: fresh init)");
  s_sft->add_option("--stage", sft.stage)->capture_default_str();
  s_sft->add_option("--steps", sft.steps, "Step cap (sft2: step count)");
  s_sft->add_option("--batch", sft.batch);
  s_sft->add_option("--lr", sft.lr);
  s_sft->add_option("--clip", sft.clip);
  s_sft->add_option("--mode", sft.mode)->capture_default_str();
  s_sft->add_option("--method", sft.method)->capture_default_str();

  TrainArgs dpo;
  auto* s_dpo = app.add_subcommand("train-dpo", "Audio-masked DPO from an SFT checkpoint");
  add_common(s_dpo, dpo.c, false);
  auto* dpo_corpus = s_dpo->add_option("--corpus", dpo.corpus, "Corpus directory");
  auto* dpo_pairs = s_dpo->add_option("--pairs", dpo.pairs, "preferences.jsonl from build-dataset");
  dpo_corpus->excludes(dpo_pairs);
  s_dpo->add_option("--init", dpo.init, "Reference / starting checkpoint")->required();
  s_dpo->add_option("--steps", dpo.steps);
  s_dpo->add_option("--batch", dpo.batch);
  s_dpo->add_option("--lr", dpo.lr);
  s_dpo->add_option("--beta", dpo.beta);
  s_dpo->add_option("--clip", dpo.clip);
  s_dpo->add_option("--mode", dpo.mode)->capture_default_str();
  s_dpo->add_option("--method", dpo.method)->capture_default_str();

  MergeArgs mg;
  auto* s_mg = app.add_subcommand("merge", "Weighted parameter averaging of checkpoints");
  add_common(s_mg, mg.c, false);
  s_mg->add_option("--in", mg.in, "Checkpoint directories")->required()->expected(2, -1);
  s_mg->add_option("--weights", mg.weights, "One weight per checkpoint (default 5 5 1)")->expected(1, -1);

  EvalArgs ev;
  auto* s_ev = app.add_subcommand("eval", "Cross-entropy, per-codebook perplexity, margin and validity");
  add_common(s_ev, ev.c, true);
  s_ev->add_option("--ckpt", ev.ckpt)->required();
  s_ev->add_option("--corpus", ev.corpus)->required();
  s_ev->add_option("--reference", ev.reference, "Reference checkpoint for the preference margin");
  s_ev->add_option("--mode", ev.mode)->capture_default_str();
  s_ev->add_option("--method", ev.method)->capture_default_str();
  s_ev->add_option("--beta", ev.beta)->capture_default_str();
  s_ev->add_option("--generations", ev.generations, "Greedy generations to validate")->capture_default_str();
  s_ev->add_option("--max-new", ev.max_new)->capture_default_str();

  RoundTripArgs rt;
  auto* s_rt = app.add_subcommand("round-trip", "Audio query -> generated interleaved response -> vocoded audio");
  add_common(s_rt, rt.c, true);
  s_rt->add_option("--ckpt", rt.ckpt)->required();
  s_rt->add_option("--corpus", rt.corpus, "Held-out corpus")->required();
  s_rt->add_option("--n", rt.n)->capture_default_str();
  s_rt->add_option("--max-new", rt.max_new)->capture_default_str();
  s_rt->add_option("--mode", rt.mode)->capture_default_str();

  AblateArgs ab;
  auto* s_ab = app.add_subcommand("ablate", "Sweep ratio modes and concatenation methods");
  add_common(s_ab, ab.c, true);
  s_ab->add_option("--corpus", ab.corpus, "Training corpus")->required();
  s_ab->add_option("--eval-corpus", ab.eval_corpus, "Evaluation corpus (default: training corpus)");
  s_ab->add_option("--init", ab.init, "Base checkpoint (default: fresh init)");
  s_ab->add_option("--modes", ab.modes, "Ratio modes (default: all)");
  s_ab->add_option("--methods", ab.methods, "Concatenation methods (default: all)");
  s_ab->add_option("--steps", ab.options.sft_steps)->capture_default_str();
  s_ab->add_option("--batch", ab.options.batch_size)->capture_default_str();
  s_ab->add_option("--lr", ab.options.lr)->capture_default_str();
  s_ab->add_option("--beta", ab.options.beta)->capture_default_str();
  s_ab->add_option("--eval-examples", ab.options.eval_examples)->capture_default_str();
  s_ab->add_option("--generations", ab.options.generations)->capture_default_str();
  s_ab->add_option("--max-new", ab.options.max_new)->capture_default_str();

  ValidateArgs va;
  auto* s_va = app.add_subcommand("validate", "Check interleave format of token streams");
  add_common(s_va, va.c, true);
  auto* va_ex = s_va->add_option("--examples", va.examples, "Examples JSONL (AQTAA responses are checked)");
  auto* va_tok = s_va->add_option("--tokens", va.tokens, "Whitespace separated token ids");
  va_ex->excludes(va_tok);
  s_va->add_option("--text-size", va.text_size)->capture_default_str();
  s_va->add_option("--mode", va.mode)->capture_default_str();
  s_va->add_option("--method", va.method)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (s_gen->parsed()) return run_gen_corpus(gen);
    if (s_ds->parsed()) return run_build_dataset(ds);
    if (s_sft->parsed()) return run_train_sft(sft);
    if (s_dpo->parsed()) {
      if (dpo.corpus.empty() && dpo.pairs.empty()) {
        std::cerr << "train-dpo: one of --corpus or --pairs is required\n";
        return kUsage;
      }
      return run_train_dpo(dpo);
    }
    if (s_mg->parsed()) return run_merge(mg);
    if (s_ev->parsed()) return run_eval(ev);
    if (s_rt->parsed()) return run_round_trip(rt);
    if (s_ab->parsed()) return run_ablate(ab);
    if (s_va->parsed()) {
      if (va.examples.empty() && va.tokens.empty()) {
        std::cerr << "validate: one of --examples or --tokens is required\n";
        return kUsage;
      }
      return run_validate(va);
    }
  } catch (const ValidationFailure& v) {
    std::cerr << "validation failed: " << v.message << '\n';
    return kValidationFailure;
  } catch (const IncompatibleCheckpointError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::kInvalidConfiguration ? kUsage : kValidationFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidationFailure;
  }
  return kUsage;
}
