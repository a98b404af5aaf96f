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

#include "aqaa/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <string>

#include "aqaa/error.hpp"
#include "aqaa/rng.hpp"
#include "json.hpp"

namespace aqaa {

using nlohmann::json;

std::string_view to_string(Task task) {
  switch (task) {
    case Task::kEcho: return "echo";
    case Task::kArithmetic: return "arithmetic";
    case Task::kLabelSwitch: return "label_switch";
  }
  return "unknown";
}

Task parse_task(std::string_view name) {
  for (Task t : {Task::kEcho, Task::kArithmetic, Task::kLabelSwitch}) {
    if (to_string(t) == name) return t;
  }
  fail(ErrorCode::kInvalidConfiguration, "unknown task '" + std::string(name) + "'");
}

std::vector<AnswerSegment> effective_segments(const AqtaPair& p) {
  if (!p.segments.empty()) return p.segments;
  return {AnswerSegment{p.answer_text.size(), 0}};
}

std::uint64_t label_voice_seed(std::uint64_t voice_seed, std::uint32_t label) {
  return label == 0 ? voice_seed : mix_seed(voice_seed, 0x1000 + label);
}

void validate_pair(const AqtaPair& p, const TokenSpace& space) {
  if (p.answer_text.empty()) fail(ErrorCode::kInvalidConfiguration, "answer text must be non-empty");
  for (std::size_t i = 0; i < p.answer_text.size(); ++i) {
    if (!space.contains(p.answer_text[i]) || !space.is_text(p.answer_text[i])) {
      fail(ErrorCode::kInvalidConfiguration, "answer index " + std::to_string(i) + " is not a text token");
    }
  }
  std::size_t covered = 0;
  for (const auto& s : effective_segments(p)) {
    if (s.length == 0) fail(ErrorCode::kInvalidConfiguration, "empty answer segment");
    covered += s.length;
  }
  if (covered != p.answer_text.size()) {
    fail(ErrorCode::kInvalidConfiguration, "answer segments cover " + std::to_string(covered) + " of " +
                                               std::to_string(p.answer_text.size()) + " tokens");
  }
  validate_utterance(p.query_audio);
}

namespace {

std::vector<SyntheticUtterance> speak_segments(const TokenSeq& text, const std::vector<AnswerSegment>& segments,
                                               std::size_t blocks_per_text_token, std::uint64_t seed,
                                               const TokenSpace& space) {
  std::vector<SyntheticUtterance> out;
  std::size_t begin = 0;
  for (const auto& s : segments) {
    const std::span<const TokenId> slice(text.data() + begin, s.length);
    out.push_back(pseudo_tts(slice, blocks_per_text_token, label_voice_seed(seed, s.label), space));
    begin += s.length;
  }
  return out;
}

std::vector<TokenSeq> wrapped_segments(const std::vector<SyntheticUtterance>& speech, const TokenSpace& space) {
  std::vector<TokenSeq> out;
  out.reserve(speech.size());
  for (const auto& u : speech) {
    const DualTokens dual = tokenize(u, space);
    out.push_back(wrap_audio(merge_dual(dual.linguistic, dual.semantic), space));
  }
  return out;
}

TrainingExample assemble(TokenSeq prompt, const TokenSeq& response, ExampleKind kind) {
  if (response.empty()) fail(ErrorCode::kEmptyResponse, "training example has an empty response");
  TrainingExample ex;
  ex.prompt_length = prompt.size();
  ex.tokens = std::move(prompt);
  ex.tokens.insert(ex.tokens.end(), response.begin(), response.end());
  ex.loss_mask.assign(ex.tokens.size(), 0);
  std::fill(ex.loss_mask.begin() + static_cast<std::ptrdiff_t>(ex.prompt_length), ex.loss_mask.end(), 1);
  ex.kind = kind;
  return ex;
}

}  // namespace

AqtaaPair build_aqtaa(const AqtaPair& p, std::size_t blocks_per_text_token, std::uint64_t seed,
                      const TokenSpace& space) {
  validate_pair(p, space);
  AqtaaPair out;
  out.base = p;
  out.segment_audio = speak_segments(p.answer_text, effective_segments(p), blocks_per_text_token, seed, space);
  out.answer_audio = concat(out.segment_audio);
  return out;
}

TokenSeq make_prompt(const SyntheticUtterance& query, const TokenSpace& space) {
  const DualTokens dual = tokenize(query, space);
  return wrap_audio(merge_dual(dual.linguistic, dual.semantic), space);
}

InterleavedSequence make_response(const AqtaaPair& p, const TokenSpace& space, RatioMode mode,
                                  ConcatMethod method) {
  return concat_multilabel(wrapped_segments(p.segment_audio, space), method, p.base.answer_text, space, mode);
}

TrainingExample make_training_example(const AqtaPair& p, const TokenSpace& space) {
  validate_pair(p, space);
  return assemble(make_prompt(p.query_audio, space), p.answer_text, ExampleKind::kAqta);
}

TrainingExample make_training_example(const AqtaaPair& p, const TokenSpace& space, RatioMode mode,
                                      ConcatMethod method) {
  validate_pair(p.base, space);
  return assemble(make_prompt(p.base.query_audio, space), make_response(p, space, mode, method).tokens,
                  ExampleKind::kAqtaa);
}

PreferencePair make_preference_pair(const AqtaPair& prompt, const TokenSeq& good_answer,
                                    const TokenSeq& bad_answer, const TokenSpace& space,
                                    const DatasetOptions& options) {
  if (good_answer == bad_answer) fail(ErrorCode::kDegeneratePair, "chosen and rejected answers are identical");
  auto response_for = [&](const TokenSeq& answer) {
    AqtaPair p = prompt;
    p.answer_text = answer;
    std::size_t covered = 0;
    for (const auto& s : prompt.segments) covered += s.length;
    if (covered != answer.size()) p.segments.clear();
    const AqtaaPair full = build_aqtaa(p, options.blocks_per_text_token, options.answer_voice_seed, space);
    return make_response(full, space, options.mode, options.method).tokens;
  };
  PreferencePair out;
  out.prompt = make_prompt(prompt.query_audio, space);
  out.chosen = response_for(good_answer);
  out.rejected = response_for(bad_answer);
  return out;
}

// ---- synthetic tasks -------------------------------------------------------

namespace {

void check_options(const TokenSpace& space, const CorpusOptions& o) {
  if (space.text_size() < Lexicon::kMinTextSize) {
    fail(ErrorCode::kInvalidConfiguration,
         "synthetic corpora need text_size >= " + std::to_string(Lexicon::kMinTextSize));
  }
  if (o.alphabet == 0 || Lexicon::kSymbolBase + o.alphabet > Lexicon::kDigitBase) {
    fail(ErrorCode::kInvalidConfiguration, "alphabet must be in [1, 63]");
  }
  if (o.min_symbols == 0 || o.min_symbols > o.max_symbols) {
    fail(ErrorCode::kInvalidConfiguration, "need 1 <= min_symbols <= max_symbols");
  }
  if (o.labels == 0 || o.labels > Lexicon::kMaxLabels) {
    fail(ErrorCode::kInvalidConfiguration, "labels must be in [1, 8]");
  }
  if (o.blocks_per_text_token == 0) fail(ErrorCode::kInvalidConfiguration, "blocks_per_text_token must be >= 1");
}

TokenSeq symbol_ids(const CorpusOptions& o) {
  TokenSeq ids(o.alphabet);
  std::iota(ids.begin(), ids.end(), Lexicon::kSymbolBase);
  return ids;
}

TokenSeq digits_to_text(unsigned value) {
  const std::string s = std::to_string(value);
  TokenSeq out;
  for (char c : s) out.push_back(Lexicon::kDigitBase + static_cast<TokenId>(c - '0'));
  return out;
}

TokenSeq query_candidates(Task task, const CorpusOptions& o) {
  TokenSeq c;
  switch (task) {
    case Task::kEcho: return symbol_ids(o);
    case Task::kArithmetic:
      for (TokenId d = 0; d < 10; ++d) c.push_back(Lexicon::kDigitBase + d);
      c.push_back(Lexicon::kPlus);
      return c;
    case Task::kLabelSwitch:
      c = symbol_ids(o);
      for (std::uint32_t l = 1; l <= o.labels; ++l) c.push_back(Lexicon::kTagBase + l);
      return c;
  }
  return c;
}

struct Spoken {
  TokenSeq query_text;
  TokenSeq answer;
  std::vector<AnswerSegment> segments;
};

Spoken make_task_instance(Task task, Rng& rng, const CorpusOptions& o) {
  Spoken s;
  switch (task) {
    case Task::kEcho: {
      const auto k = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(o.min_symbols),
                                                          static_cast<std::int64_t>(o.max_symbols)));
      for (std::size_t i = 0; i < k; ++i) s.query_text.push_back(Lexicon::kSymbolBase + static_cast<TokenId>(rng.below(o.alphabet)));
      s.answer = s.query_text;
      break;
    }
    case Task::kArithmetic: {
      const auto a = static_cast<unsigned>(rng.below(10));
      const auto b = static_cast<unsigned>(rng.below(10));
      s.query_text = {Lexicon::kDigitBase + a, Lexicon::kPlus, Lexicon::kDigitBase + b};
      s.answer = digits_to_text(a + b);
      break;
    }
    case Task::kLabelSwitch: {
      const std::size_t min_k = std::max<std::size_t>(2, o.min_symbols);
      const std::size_t max_k = std::max(min_k, o.max_symbols);
      const auto k = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(min_k),
                                                          static_cast<std::int64_t>(max_k)));
      // Split point leaves at least one symbol on each side.
      const std::size_t first = 1 + static_cast<std::size_t>(rng.below(k - 1));
      const std::uint32_t l1 = 1 + static_cast<std::uint32_t>(rng.below(o.labels));
      std::uint32_t l2 = 1 + static_cast<std::uint32_t>(rng.below(o.labels));
      if (o.labels > 1) {
        while (l2 == l1) l2 = 1 + static_cast<std::uint32_t>(rng.below(o.labels));
      }
      s.query_text.push_back(Lexicon::kTagBase + l1);
      for (std::size_t i = 0; i < k; ++i) {
        if (i == first) s.query_text.push_back(Lexicon::kTagBase + l2);
        const TokenId sym = Lexicon::kSymbolBase + static_cast<TokenId>(rng.below(o.alphabet));
        s.query_text.push_back(sym);
        s.answer.push_back(sym);
      }
      s.segments = {AnswerSegment{first, l1}, AnswerSegment{k - first, l2}};
      break;
    }
  }
  return s;
}

// Parses a decoded label_switch query: tag sym+ (tag sym+)*.
bool parse_labelled(const TokenSeq& q, TokenSeq& answer, std::vector<AnswerSegment>& segments,
                    const CorpusOptions& o) {
  answer.clear();
  segments.clear();
  for (TokenId id : q) {
    if (id > Lexicon::kTagBase && id <= Lexicon::kTagBase + o.labels) {
      segments.push_back(AnswerSegment{0, id - Lexicon::kTagBase});
    } else {
      if (segments.empty()) return false;
      answer.push_back(id);
      ++segments.back().length;
    }
  }
  return !segments.empty() &&
         std::all_of(segments.begin(), segments.end(), [](const AnswerSegment& s) { return s.length > 0; });
}

}  // namespace

std::vector<AqtaPair> synth_corpus(std::uint64_t seed, std::size_t n, Task task, const TokenSpace& space,
                                   const CorpusOptions& options) {
  if (n == 0) fail(ErrorCode::kInvalidConfiguration, "corpus size must be >= 1");
  check_options(space, options);
  const std::size_t mix = task == Task::kLabelSwitch ? 0 : options.label_switch_mix;
  std::vector<AqtaPair> out;
  out.reserve(n + mix);
  auto emit = [&](Task t, std::uint64_t s_seed) {
    Rng rng(s_seed);
    Spoken s = make_task_instance(t, rng, options);
    AqtaPair p;
    p.task = t;
    p.query_audio = pseudo_tts(s.query_text, options.blocks_per_text_token, options.query_voice_seed, space);
    p.answer_text = std::move(s.answer);
    p.segments = std::move(s.segments);
    out.push_back(std::move(p));
  };
  for (std::size_t i = 0; i < n; ++i) emit(task, mix_seed(seed, i));
  const std::uint64_t mix_base = mix_seed(seed, 0x5A17'C400ULL);
  for (std::size_t i = 0; i < mix; ++i) emit(Task::kLabelSwitch, mix_seed(mix_base, i));
  return out;
}

std::vector<AqtaPair> select_stage2(const std::vector<AqtaPair>& corpus) {
  std::vector<AqtaPair> out;
  for (const auto& p : corpus) {
    if (p.task == Task::kLabelSwitch) out.push_back(p);
  }
  return out;
}

std::optional<TokenSeq> decode_speech(const SyntheticUtterance& u, std::span<const TokenId> candidates,
                                      std::size_t blocks_per_text_token, std::uint64_t voice_seed,
                                      const TokenSpace& space) {
  if (blocks_per_text_token == 0) return std::nullopt;
  const std::size_t ling_per = blocks_per_text_token * kLinguisticPerBlock;
  const std::size_t sem_per = blocks_per_text_token * kSemanticPerBlock;
  if (u.linguistic.size() % ling_per != 0 || u.semantic.size() % sem_per != 0 ||
      u.linguistic.size() / ling_per != u.semantic.size() / sem_per) {
    return std::nullopt;
  }
  std::map<std::vector<FrameCode>, TokenId> table;
  for (TokenId id : candidates) {
    const TokenId one[] = {id};
    const SyntheticUtterance spoken = pseudo_tts(one, blocks_per_text_token, voice_seed, space);
    std::vector<FrameCode> key = spoken.linguistic;
    key.insert(key.end(), spoken.semantic.begin(), spoken.semantic.end());
    table.emplace(std::move(key), id);
  }
  TokenSeq out;
  const std::size_t tokens = u.linguistic.size() / ling_per;
  for (std::size_t t = 0; t < tokens; ++t) {
    std::vector<FrameCode> key(u.linguistic.begin() + static_cast<std::ptrdiff_t>(t * ling_per),
                               u.linguistic.begin() + static_cast<std::ptrdiff_t>((t + 1) * ling_per));
    key.insert(key.end(), u.semantic.begin() + static_cast<std::ptrdiff_t>(t * sem_per),
               u.semantic.begin() + static_cast<std::ptrdiff_t>((t + 1) * sem_per));
    const auto it = table.find(key);
    if (it == table.end()) return std::nullopt;
    out.push_back(it->second);
  }
  return out;
}

std::optional<TokenSeq> expected_answer(const SyntheticUtterance& query, Task task, const TokenSpace& space,
                                        const CorpusOptions& options) {
  const TokenSeq candidates = query_candidates(task, options);
  const auto q = decode_speech(query, candidates, options.blocks_per_text_token, options.query_voice_seed, space);
  if (!q) return std::nullopt;
  switch (task) {
    case Task::kEcho:
      if (q->empty()) return std::nullopt;
      return *q;
    case Task::kArithmetic: {
      if (q->size() != 3 || (*q)[1] != Lexicon::kPlus || (*q)[0] == Lexicon::kPlus || (*q)[2] == Lexicon::kPlus) {
        return std::nullopt;
      }
      return digits_to_text(((*q)[0] - Lexicon::kDigitBase) + ((*q)[2] - Lexicon::kDigitBase));
    }
    case Task::kLabelSwitch: {
      TokenSeq answer;
      std::vector<AnswerSegment> segments;
      if (!parse_labelled(*q, answer, segments, options)) return std::nullopt;
      return answer;
    }
  }
  return std::nullopt;
}

std::vector<AnswerSegment> expected_segments(const SyntheticUtterance& query, Task task, const TokenSpace& space,
                                             const CorpusOptions& options) {
  if (task != Task::kLabelSwitch) {
    const auto a = expected_answer(query, task, space, options);
    return a ? std::vector<AnswerSegment>{AnswerSegment{a->size(), 0}} : std::vector<AnswerSegment>{};
  }
  const TokenSeq candidates = query_candidates(task, options);
  const auto q = decode_speech(query, candidates, options.blocks_per_text_token, options.query_voice_seed, space);
  TokenSeq answer;
  std::vector<AnswerSegment> segments;
  if (!q || !parse_labelled(*q, answer, segments, options)) return {};
  return segments;
}

bool check_answer(const AqtaPair& p, const TokenSpace& space, const CorpusOptions& options) {
  const auto want = expected_answer(p.query_audio, p.task, space, options);
  if (!want || *want != p.answer_text) return false;
  if (p.task == Task::kLabelSwitch) return expected_segments(p.query_audio, p.task, space, options) == p.segments;
  return true;
}

TokenSeq corrupt_answer(const TokenSeq& answer, Task task, std::uint64_t seed, const CorpusOptions& options) {
  TokenSeq out = answer;
  if (out.empty()) return out;
  Rng rng(seed);
  const std::size_t pos = static_cast<std::size_t>(rng.below(out.size()));
  if (task == Task::kArithmetic) {
    const TokenId digit = out[pos] - Lexicon::kDigitBase;
    out[pos] = Lexicon::kDigitBase + static_cast<TokenId>((digit + 1 + rng.below(9)) % 10);
  } else {
    if (options.alphabet < 2) fail(ErrorCode::kInvalidConfiguration, "cannot corrupt a one-symbol alphabet");
    const TokenId sym = out[pos] - Lexicon::kSymbolBase;
    out[pos] = Lexicon::kSymbolBase +
               static_cast<TokenId>((sym + 1 + rng.below(options.alphabet - 1)) % options.alphabet);
  }
  return out;
}

std::vector<TrainingExample> build_sft_examples(const std::vector<AqtaPair>& corpus, const TokenSpace& space,
                                                const DatasetOptions& options, bool include_aqta) {
  std::vector<TrainingExample> out;
  out.reserve(corpus.size() * 2);
  for (const auto& p : corpus) {
    if (include_aqta) out.push_back(make_training_example(p, space));
    const AqtaaPair full = build_aqtaa(p, options.blocks_per_text_token, options.answer_voice_seed, space);
    out.push_back(make_training_example(full, space, options.mode, options.method));
  }
  return out;
}

std::vector<PreferencePair> build_preference_pairs(const std::vector<AqtaPair>& corpus, const TokenSpace& space,
                                                   const DatasetOptions& options,
                                                   const CorpusOptions& copts, std::uint64_t seed) {
  std::vector<PreferencePair> out;
  out.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& p = corpus[i];
    const TokenSeq bad = corrupt_answer(p.answer_text, p.task, mix_seed(seed, i), copts);
    out.push_back(make_preference_pair(p, p.answer_text, bad, space, options));
  }
  return out;
}

// ---- JSONL -----------------------------------------------------------------

namespace {

json segments_json(const std::vector<AnswerSegment>& segs) {
  json a = json::array();
  for (const auto& s : segs) a.push_back({s.length, s.label});
  return a;
}

template <typename F>
auto parse_record(std::string_view line, const char* what, F&& f) {
  try {
    return f(json::parse(line));
  } catch (const json::exception& e) {
    fail(ErrorCode::kIo, std::string("malformed ") + what + " record: " + e.what());
  }
}

std::vector<std::string> read_lines(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorCode::kIo, "cannot open " + file.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

std::ofstream open_out(const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + file.string());
  return out;
}

json options_json(const CorpusOptions& o) {
  return {{"alphabet", o.alphabet},         {"min_symbols", o.min_symbols},
          {"max_symbols", o.max_symbols},   {"labels", o.labels},
          {"query_voice_seed", o.query_voice_seed}, {"blocks_per_text_token", o.blocks_per_text_token},
          {"label_switch_mix", o.label_switch_mix}};
}

CorpusOptions options_from_json(const json& j) {
  CorpusOptions o;
  o.alphabet = j.at("alphabet").get<std::size_t>();
  o.min_symbols = j.at("min_symbols").get<std::size_t>();
  o.max_symbols = j.at("max_symbols").get<std::size_t>();
  o.labels = j.at("labels").get<std::uint32_t>();
  o.query_voice_seed = j.at("query_voice_seed").get<std::uint64_t>();
  o.blocks_per_text_token = j.at("blocks_per_text_token").get<std::size_t>();
  o.label_switch_mix = j.value("label_switch_mix", std::size_t{0});
  return o;
}

}  // namespace

std::string pair_to_json(const AqtaPair& p) {
  json j;
  j["task"] = std::string(to_string(p.task));
  j["query"] = {{"ling", p.query_audio.linguistic}, {"sem", p.query_audio.semantic}};
  j["answer"] = p.answer_text;
  j["segments"] = segments_json(p.segments);
  return j.dump();
}

AqtaPair pair_from_json(std::string_view line) {
  AqtaPair p = parse_record(line, "pair", [](const json& j) {
    AqtaPair p;
    p.task = parse_task(j.at("task").get<std::string>());
    p.query_audio = utterance_from_json(j.at("query").dump());
    p.answer_text = j.at("answer").get<TokenSeq>();
    for (const auto& s : j.at("segments")) {
      p.segments.push_back(AnswerSegment{s.at(0).get<std::size_t>(), s.at(1).get<std::uint32_t>()});
    }
    return p;
  });
  return p;
}

std::string example_to_json(const TrainingExample& ex) {
  json j;
  j["kind"] = ex.kind == ExampleKind::kAqta ? "aqta" : "aqtaa";
  j["prompt_length"] = ex.prompt_length;
  j["tokens"] = ex.tokens;
  j["mask"] = ex.loss_mask;
  return j.dump();
}

TrainingExample example_from_json(std::string_view line) {
  return parse_record(line, "example", [](const json& j) {
    TrainingExample ex;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind != "aqta" && kind != "aqtaa") fail(ErrorCode::kIo, "unknown example kind '" + kind + "'");
    ex.kind = kind == "aqta" ? ExampleKind::kAqta : ExampleKind::kAqtaa;
    ex.prompt_length = j.at("prompt_length").get<std::size_t>();
    ex.tokens = j.at("tokens").get<TokenSeq>();
    ex.loss_mask = j.at("mask").get<std::vector<std::uint8_t>>();
    if (ex.loss_mask.size() != ex.tokens.size() || ex.prompt_length >= ex.tokens.size()) {
      fail(ErrorCode::kIo, "example mask/length mismatch");
    }
    return ex;
  });
}

std::string preference_to_json(const PreferencePair& p) {
  json j;
  j["prompt"] = p.prompt;
  j["chosen"] = p.chosen;
  j["rejected"] = p.rejected;
  return j.dump();
}

PreferencePair preference_from_json(std::string_view line) {
  return parse_record(line, "preference", [](const json& j) {
    PreferencePair p;
    p.prompt = j.at("prompt").get<TokenSeq>();
    p.chosen = j.at("chosen").get<TokenSeq>();
    p.rejected = j.at("rejected").get<TokenSeq>();
    return p;
  });
}

void write_corpus(const std::filesystem::path& dir, const std::vector<AqtaPair>& pairs,
                  const CorpusManifest& manifest) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "corpus.jsonl");
    for (const auto& p : pairs) out << pair_to_json(p) << '\n';
  }
  json m;
  m["seed"] = manifest.seed;
  m["task"] = std::string(to_string(manifest.task));
  m["count"] = manifest.count;
  m["text_size"] = manifest.text_size;
  m["options"] = options_json(manifest.options);
  auto out = open_out(dir / "manifest.json");
  out << m.dump(2) << '\n';
}

std::vector<AqtaPair> read_corpus(const std::filesystem::path& dir, CorpusManifest* manifest) {
  std::vector<AqtaPair> pairs;
  for (const auto& line : read_lines(dir / "corpus.jsonl")) pairs.push_back(pair_from_json(line));
  if (manifest) {
    const auto lines = read_lines(dir / "manifest.json");
    std::string text;
    for (const auto& l : lines) text += l + "\n";
    *manifest = parse_record(text, "manifest", [](const json& m) {
      CorpusManifest cm;
      cm.seed = m.at("seed").get<std::uint64_t>();
      cm.task = parse_task(m.at("task").get<std::string>());
      cm.count = m.at("count").get<std::size_t>();
      cm.text_size = m.at("text_size").get<std::uint32_t>();
      cm.options = options_from_json(m.at("options"));
      return cm;
    });
  }
  return pairs;
}

void write_examples(const std::filesystem::path& file, const std::vector<TrainingExample>& examples) {
  auto out = open_out(file);
  for (const auto& ex : examples) out << example_to_json(ex) << '\n';
}

std::vector<TrainingExample> read_examples(const std::filesystem::path& file) {
  std::vector<TrainingExample> out;
  for (const auto& line : read_lines(file)) out.push_back(example_from_json(line));
  return out;
}

void write_preferences(const std::filesystem::path& file, const std::vector<PreferencePair>& pairs) {
  auto out = open_out(file);
  for (const auto& p : pairs) out << preference_to_json(p) << '\n';
}

std::vector<PreferencePair> read_preferences(const std::filesystem::path& file) {
  std::vector<PreferencePair> out;
  for (const auto& line : read_lines(file)) out.push_back(preference_from_json(line));
  return out;
}

}  // namespace aqaa
