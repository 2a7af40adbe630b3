// Copyright 2026 The bloop Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bloop/app.hpp"

#include <omp.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <tuple>

#include <CLI11.hpp>
#include <json.hpp>

#include "bloop/cache.hpp"
#include "bloop/decode.hpp"
#include "bloop/error.hpp"
#include "bloop/eval.hpp"
#include "bloop/model.hpp"
#include "bloop/numfmt.hpp"
#include "bloop/protocol.hpp"
#include "bloop/stats.hpp"
#include "bloop/tuner.hpp"

namespace bloop::cli {

namespace {

using json = nlohmann::ordered_json;

// ---- io helpers -----------------------------------------------------------

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  out.flush();
  if (!out) throw DataError("cannot write " + path);
}

struct JsonLine {
  std::size_t line = 0;
  json value;
};

std::vector<JsonLine> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::vector<JsonLine> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json value = json::parse(line);
      if (!value.is_object()) throw DataError("expected a JSON object");
      rows.push_back({n, std::move(value)});
    } catch (const std::exception& e) {
      throw DataError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return rows;
}

std::string where(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line);
}

std::string source_text(const json& value, const std::string& at) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_array()) {
    std::string joined;
    for (std::size_t i = 0; i < value.size(); ++i) {
      if (!value[i].is_string()) throw DataError(at + ": source entries must be strings");
      if (i) joined += '\n';
      joined += value[i].get<std::string>();
    }
    return joined;
  }
  throw DataError(at + ": source must be a string or an array of strings");
}

std::string required_string(const json& obj, const char* key, const std::string& at) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw DataError(at + ": missing string field \"" + key + "\"");
  }
  return it->get<std::string>();
}

std::optional<double> optional_number(const json& obj, const char* key,
                                      const std::string& at) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw DataError(at + ": field \"" + key + "\" must be a number");
  return it->get<double>();
}

json optional_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

// ---- datasets -------------------------------------------------------------

struct DatasetRecord {
  std::string id;
  std::string source;
  std::optional<std::string> reference;
};

std::vector<DatasetRecord> read_dataset(const std::string& path) {
  std::vector<DatasetRecord> records;
  for (const auto& row : read_jsonl(path)) {
    const std::string at = where(path, row.line);
    DatasetRecord r;
    r.id = required_string(row.value, "id", at);
    const auto src = row.value.find("source");
    if (src == row.value.end()) throw DataError(at + ": missing field \"source\"");
    r.source = source_text(*src, at);
    const auto ref = row.value.find("reference");
    if (ref != row.value.end() && !ref->is_null()) {
      if (!ref->is_string()) throw DataError(at + ": reference must be a string");
      r.reference = ref->get<std::string>();
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<ExampleRecord> read_predictions(const std::string& path,
                                            std::size_t* skipped) {
  std::vector<ExampleRecord> out;
  for (const auto& row : read_jsonl(path)) {
    const std::string at = where(path, row.line);
    const auto pred = row.value.find("prediction");
    if (pred == row.value.end() || pred->is_null()) {
      if (skipped) ++*skipped;
      continue;
    }
    ExampleRecord ex;
    ex.id = required_string(row.value, "id", at);
    const auto src = row.value.find("source");
    if (src == row.value.end()) throw DataError(at + ": missing field \"source\"");
    ex.source = source_text(*src, at);
    ex.reference = required_string(row.value, "reference", at);
    ex.prediction = required_string(row.value, "prediction", at);
    ex.hit_rate = optional_number(row.value, "hit_rate", at);
    ex.argmax_change_rate = optional_number(row.value, "argmax_change_rate", at);
    out.push_back(std::move(ex));
  }
  return out;
}

// ---- engine ---------------------------------------------------------------

struct DecodeFlags {
  std::string backend = "reference";
  double alpha = 0.0;
  int beam_width = 1;
  std::string variant = "plain";
  std::vector<std::string> stop_strings;
  int max_new_tokens = 64;
  double length_penalty = 0.0;
  bool no_promotion = false;
  bool promote_first_step = false;
  int context_budget = 0;
  std::string template_file;
  int jobs = 0;
  int lm_order = 3;
  double lm_delta = 0.1;
  int context_limit = static_cast<int>(NgramLM::kDefaultContextLimit);
  std::string lm_corpus;
  long long expect_vocab_size = -1;
};

void add_backend_options(CLI::App* sub, DecodeFlags& f) {
  sub->add_option("--backend", f.backend,
                  "reference, or bridge:<exec:cmd | tcp://host:port | host:port>")
      ->envname("BLOOP_BACKEND")
      ->capture_default_str();
  sub->add_option("--expect-vocab-size", f.expect_vocab_size,
                  "Fail unless the backend handshake reports this vocabulary size");
  sub->add_option("--lm-order", f.lm_order, "Reference LM n-gram order")
      ->capture_default_str();
  sub->add_option("--lm-delta", f.lm_delta, "Reference LM additive smoothing")
      ->capture_default_str();
  sub->add_option("--context-limit", f.context_limit, "Reference LM context limit")
      ->capture_default_str();
  sub->add_option("--lm-corpus", f.lm_corpus,
                  "Extra JSONL dataset the reference LM is trained on");
}

void add_decode_options(CLI::App* sub, DecodeFlags& f) {
  add_backend_options(sub, f);
  sub->add_option("--alpha", f.alpha, "Promotion strength")
      ->envname("BLOOP_ALPHA")
      ->capture_default_str();
  sub->add_option("--beam-width", f.beam_width, "Beam width")
      ->envname("BLOOP_BEAM_WIDTH")
      ->capture_default_str();
  sub->add_option("--variant", f.variant, "plain or fw (frequency-weighted)")
      ->check(CLI::IsMember({"plain", "fw"}))
      ->envname("BLOOP_VARIANT")
      ->capture_default_str();
  sub->add_option("--stop-string", f.stop_strings,
                  "Stop string (repeatable; \\n escapes allowed; default \".\\n\")");
  sub->add_option("--max-new-tokens", f.max_new_tokens, "Generation length cap")
      ->envname("BLOOP_MAX_NEW_TOKENS")
      ->capture_default_str();
  sub->add_option("--length-penalty", f.length_penalty,
                  "Final ranking uses score / length^penalty")
      ->capture_default_str();
  sub->add_flag("--no-promotion", f.no_promotion, "Disable the promotion entirely");
  sub->add_flag("--promote-first-step", f.promote_first_step,
                "Allow promotion on the first generated token");
  sub->add_option("--context-budget", f.context_budget,
                  "Maximum prompt length in tokens (default: half the context limit)")
      ->envname("BLOOP_CONTEXT_BUDGET");
  sub->add_option("--template-file", f.template_file,
                  "Prompt template with one {article} placeholder (bridge backends)")
      ->envname("BLOOP_TEMPLATE_FILE");
  sub->add_option("--jobs", f.jobs, "Worker threads (0 = OpenMP default)")
      ->envname("BLOOP_JOBS")
      ->capture_default_str();
}

struct Engine {
  bool bridge = false;
  Vocabulary vocab;
  std::optional<NgramLM> lm;
  std::unique_ptr<VocabularyRenderer> vocab_renderer;
  std::shared_ptr<protocol::BridgeClient> client;
  std::unique_ptr<protocol::BridgeScorer> bridge_scorer;
  std::unique_ptr<protocol::BridgeRenderer> bridge_renderer;
  const TokenScorer* scorer = nullptr;
  const TextRenderer* renderer = nullptr;
  std::vector<TokenId> newline_ids;
  std::string template_text = kDefaultTemplate;
};

std::shared_ptr<protocol::BridgeClient> connect_bridge(const DecodeFlags& f) {
  auto client = std::make_shared<protocol::BridgeClient>(
      protocol::open_transport(f.backend.substr(7)));
  const auto& hello = client->hello();
  if (f.expect_vocab_size >= 0 &&
      hello.vocab_size != static_cast<std::size_t>(f.expect_vocab_size)) {
    throw BackendError("backend handshake reports vocab size " +
                       std::to_string(hello.vocab_size) + ", expected " +
                       std::to_string(f.expect_vocab_size));
  }
  for (TokenId id : hello.newline_token_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= hello.vocab_size) {
      throw BackendError("backend handshake lists newline id " + std::to_string(id) +
                         " outside its vocabulary");
    }
  }
  return client;
}

bool is_bridge(const std::string& backend) {
  if (backend == "reference") return false;
  if (backend.rfind("bridge:", 0) == 0 && backend.size() > 7) return true;
  throw ConfigError("unknown backend '" + backend + "'");
}

std::vector<TokenId> terminated(std::vector<TokenId> ids, TokenId newline) {
  if (ids.empty() || ids.back() != newline) ids.push_back(newline);
  return ids;
}

std::unique_ptr<Engine> make_engine(const DecodeFlags& f,
                                    std::span<const DatasetRecord> data) {
  auto e = std::make_unique<Engine>();
  e->bridge = is_bridge(f.backend);
  if (!f.template_file.empty()) {
    e->template_text = read_file(f.template_file);
  }
  render_template(e->template_text, "");

  if (e->bridge) {
    e->client = connect_bridge(f);
    e->bridge_scorer = std::make_unique<protocol::BridgeScorer>(e->client, "bloop", 0, true);
    e->bridge_renderer = std::make_unique<protocol::BridgeRenderer>(e->client);
    e->scorer = e->bridge_scorer.get();
    e->renderer = e->bridge_renderer.get();
    e->newline_ids = e->client->hello().newline_token_ids;
    return e;
  }

  if (f.lm_order < 1) throw ConfigError("--lm-order must be >= 1");
  if (!(f.lm_delta > 0.0)) throw ConfigError("--lm-delta must be > 0");
  if (f.context_limit < 1) throw ConfigError("--context-limit must be >= 1");

  std::vector<DatasetRecord> extra;
  if (!f.lm_corpus.empty()) extra = read_dataset(f.lm_corpus);
  const TokenId newline = e->vocab.add("\n");
  std::vector<std::vector<TokenId>> corpus;
  for (auto records : {std::span<const DatasetRecord>(extra), data}) {
    for (const auto& r : records) {
      auto stream = terminated(tokenize(r.source, e->vocab).flatten(), newline);
      if (r.reference) {
        const auto summary = terminated(tokenize(*r.reference, e->vocab).flatten(), newline);
        stream.insert(stream.end(), summary.begin(), summary.end());
      }
      corpus.push_back(std::move(stream));
    }
  }
  try {
    e->lm = NgramLM::train_sequences(corpus, e->vocab.size(), f.lm_order, f.lm_delta,
                                     static_cast<std::size_t>(f.context_limit));
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  e->vocab_renderer = std::make_unique<VocabularyRenderer>(e->vocab);
  e->scorer = &*e->lm;
  e->renderer = e->vocab_renderer.get();
  e->newline_ids = e->vocab.newline_ids();
  return e;
}

DecodeConfig make_decode_config(const DecodeFlags& f, const Engine& e) {
  DecodeConfig cfg;
  cfg.beam_width = f.beam_width;
  cfg.max_new_tokens = f.max_new_tokens;
  cfg.length_penalty = f.length_penalty;
  if (!f.stop_strings.empty()) {
    cfg.stop_strings.clear();
    for (const auto& s : f.stop_strings) cfg.stop_strings.push_back(unescape(s));
  }
  cfg.promotion.alpha = f.alpha;
  cfg.promotion.variant = f.variant == "fw" ? PromotionVariant::frequency_weighted
                                            : PromotionVariant::plain;
  cfg.promotion.stop_set = StopSet(e.newline_ids);
  cfg.promotion.first_step_exempt = !f.promote_first_step;
  cfg.promotion.enabled = !f.no_promotion;
  cfg.validate(e.scorer->vocab_size());
  return cfg;
}

std::size_t context_budget(const DecodeFlags& f, const Engine& e) {
  if (f.context_budget < 0) throw ConfigError("--context-budget must be > 0");
  if (f.context_budget > 0) return static_cast<std::size_t>(f.context_budget);
  const std::size_t budget = e.scorer->context_limit() / 2;
  if (budget == 0) throw BackendError("backend context limit is too small");
  return budget;
}

std::string_view article_prefix(std::string_view text,
                                std::span<const SurfaceToken> surface,
                                std::size_t k) {
  if (k == 0) return {};
  const auto& last = surface[k - 1];
  return text.substr(0, last.offset + last.text.size());
}

Document bridge_document(protocol::BridgeClient& client, std::string_view article) {
  Document doc;
  doc.raw = std::string(article);
  for (const auto& sentence : segment_sentences(article)) {
    if (sentence.empty()) continue;
    const std::size_t begin = sentence.front().offset;
    const std::size_t end = sentence.back().offset + sentence.back().text.size();
    auto ids = client.tokenize(article.substr(begin, end - begin), false);
    if (!ids.empty()) doc.sentences.push_back(std::move(ids));
  }
  return doc;
}

/// Prompt and cache for one record, with the article cut back to the longest
/// surface-token prefix whose prompt fits the budget.
DecodeJob prepare_job(const Engine& e, const DatasetRecord& r, std::size_t budget) {
  const auto surface = split_surface(r.source);
  const auto prompt_for = [&](std::size_t k) {
    const auto article = article_prefix(r.source, surface, k);
    if (e.bridge) return e.client->tokenize(render_template(e.template_text, article), true);
    return terminated(tokenize_frozen(article, e.vocab).flatten(), e.newline_ids.front());
  };

  std::size_t keep = surface.size();
  DecodeJob job;
  job.id = r.id;
  job.prompt = prompt_for(keep);
  if (job.prompt.size() > budget) {
    std::size_t lo = 0, hi = keep;  // prompt_for(hi) does not fit
    if (prompt_for(0).size() > budget) {
      throw DataError("prompt exceeds the context budget of " + std::to_string(budget) +
                      " tokens even with an empty article");
    }
    while (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo) / 2;
      (prompt_for(mid).size() <= budget ? lo : hi) = mid;
    }
    keep = lo;
    job.prompt = prompt_for(keep);
  }
  const auto article = article_prefix(r.source, surface, keep);
  job.source = e.bridge ? bridge_document(*e.client, article)
                        : tokenize_frozen(article, e.vocab);
  job.cache = std::make_shared<const BigramCache>(BigramCache::build(job.source, r.id));
  return job;
}

void apply_jobs(int jobs) {
  if (jobs < 0) throw ConfigError("--jobs must be >= 0");
  if (jobs > 0) omp_set_num_threads(jobs);
}

json step_json(const StepRecord& s) {
  json j;
  j["step"] = s.step;
  j["looked_up"] = s.looked_up;
  j["cache_hit"] = s.cache_hit;
  j["promotion_applied"] = s.promotion_applied;
  j["argmax_changed"] = s.argmax_changed;
  j["raw_argmax"] = s.raw_argmax;
  j["final_argmax"] = s.final_argmax;
  return j;
}

const char* reason_name(FinishReason r) {
  switch (r) {
    case FinishReason::stop_string: return "stop_string";
    case FinishReason::max_length: return "max_length";
    case FinishReason::none: break;
  }
  return "none";
}

// ---- commands -------------------------------------------------------------

struct BuildCacheFlags {
  std::string input;
  std::string output;
  std::string format = "json";
  std::string vocab_in;
  std::string vocab_out;
  std::string doc_id;
  std::string unknown_token;
  bool jsonl = false;
  DecodeFlags backend;
};

int cmd_build_cache(const BuildCacheFlags& f, std::ostream& err) {
  const bool jsonl = f.jsonl || f.input.ends_with(".jsonl");
  if (f.format == "binary" && jsonl) {
    throw ConfigError("binary output holds a single cache; use json for JSONL input");
  }
  const bool bridge = is_bridge(f.backend.backend);
  if (bridge && (!f.vocab_in.empty() || !f.vocab_out.empty())) {
    throw ConfigError("--vocab-in/--vocab-out apply to the reference tokenizer only");
  }

  std::shared_ptr<protocol::BridgeClient> client;
  if (bridge) client = connect_bridge(f.backend);
  Vocabulary vocab;
  const bool frozen = !f.vocab_in.empty();
  if (frozen) {
    std::ifstream in(f.vocab_in, std::ios::binary);
    if (!in) throw DataError("cannot open " + f.vocab_in);
    vocab = Vocabulary::load(in);
    if (!f.unknown_token.empty()) vocab.set_unknown(f.unknown_token);
  }
  const auto to_document = [&](const std::string& text, const std::string& at) {
    try {
      if (client) return bridge_document(*client, text);
      return frozen ? tokenize_frozen(text, vocab) : tokenize(text, vocab);
    } catch (const DataError& e) {
      throw DataError(at + ": " + e.what());
    }
  };

  std::size_t count = 0;
  if (jsonl) {
    std::string out;
    for (const auto& r : read_dataset(f.input)) {
      out += BigramCache::build(to_document(r.source, f.input + " (" + r.id + ")"), r.id)
                 .to_json();
      out += '\n';
      ++count;
    }
    write_file(f.output, out);
  } else {
    std::string id = f.doc_id;
    if (id.empty()) {
      const auto slash = f.input.find_last_of('/');
      id = slash == std::string::npos ? f.input : f.input.substr(slash + 1);
    }
    const auto cache = BigramCache::build(to_document(read_file(f.input), f.input), id);
    if (f.format == "binary") {
      std::ostringstream buf;
      cache.write_binary(buf);
      write_file(f.output, buf.str());
    } else {
      write_file(f.output, cache.to_json() + "\n");
    }
    count = 1;
  }
  if (!f.vocab_out.empty()) {
    std::ostringstream buf;
    vocab.save(buf);
    write_file(f.vocab_out, buf.str());
  }
  err << "built " << count << (count == 1 ? " cache" : " caches") << "\n";
  return kExitOk;
}

struct SummarizeFlags {
  std::string dataset;
  std::string output;
  std::string trace;
  DecodeFlags decode;
};

int cmd_summarize(const SummarizeFlags& f, std::ostream& err) {
  apply_jobs(f.decode.jobs);
  const auto data = read_dataset(f.dataset);
  const auto engine = make_engine(f.decode, data);
  if (!engine->bridge && !f.decode.template_file.empty()) {
    err << "note: --template-file is ignored by the reference backend\n";
  }
  const DecodeConfig cfg = make_decode_config(f.decode, *engine);
  const std::size_t budget = context_budget(f.decode, *engine);

  std::vector<std::string> prep_error(data.size());
  std::vector<DecodeJob> jobs;
  std::vector<std::size_t> job_of;
  for (std::size_t i = 0; i < data.size(); ++i) {
    try {
      jobs.push_back(prepare_job(*engine, data[i], budget));
      job_of.push_back(i);
    } catch (const DataError& e) {
      prep_error[i] = e.what();
    }
  }
  const auto items = batch_decode(*engine->scorer, *engine->renderer, jobs, cfg);

  std::vector<const BatchItem*> item_of(data.size(), nullptr);
  for (std::size_t j = 0; j < items.size(); ++j) item_of[job_of[j]] = &items[j];

  std::string preds, traces;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data[i];
    const BatchItem* item = item_of[i];
    const std::string error = item ? item->error : prep_error[i];
    json p;
    p["id"] = r.id;
    p["source"] = r.source;
    if (r.reference) p["reference"] = *r.reference;
    json t;
    t["id"] = r.id;
    if (!error.empty()) {
      ++failed;
      p["prediction"] = nullptr;
      p["error"] = error;
      t["error"] = error;
      t["steps"] = json::array();
    } else {
      const auto& best = item->result->best;
      p["prediction"] = best.text;
      p["hit_rate"] = optional_json(item->stats.hit_rate);
      p["argmax_change_rate"] = optional_json(item->stats.argmax_change_rate);
      p["finish_reason"] = reason_name(best.reason);
      p["incomplete"] = item->result->incomplete;
      t["hit_rate"] = optional_json(item->stats.hit_rate);
      t["argmax_change_rate"] = optional_json(item->stats.argmax_change_rate);
      json steps = json::array();
      for (const auto& s : best.trace) steps.push_back(step_json(s));
      t["steps"] = std::move(steps);
    }
    preds += p.dump() + "\n";
    traces += t.dump() + "\n";
  }
  write_file(f.output, preds);
  write_file(f.trace.empty() ? f.output + ".trace.jsonl" : f.trace, traces);
  err << "summarized " << data.size() - failed << " of " << data.size() << " examples";
  if (failed) err << " (" << failed << " failed)";
  err << "\n";
  return kExitOk;
}

struct EvaluateFlags {
  std::string predictions;
  std::string scores;
  std::string output;
  bool stem = false;
};

int cmd_evaluate(const EvaluateFlags& f, std::ostream& out, std::ostream& err) {
  std::size_t skipped = 0;
  auto examples = read_predictions(f.predictions, &skipped);
  if (examples.empty()) throw DataError(f.predictions + ": no scorable predictions");
  if (!f.scores.empty()) {
    std::map<std::string, double> by_id;
    for (const auto& row : read_jsonl(f.scores)) {
      const std::string at = where(f.scores, row.line);
      const auto score = optional_number(row.value, "bartscore", at);
      if (!score) throw DataError(at + ": missing number field \"bartscore\"");
      by_id[required_string(row.value, "id", at)] = *score;
    }
    for (auto& ex : examples) {
      const auto it = by_id.find(ex.id);
      if (it == by_id.end()) throw DataError(f.scores + ": no score for id '" + ex.id + "'");
      ex.bartscore = it->second;
    }
  }
  const RougeOptions opts{f.stem};
  const auto metrics = score_batch(examples, opts);
  const std::string report = report_to_json(aggregate(examples, metrics)) + "\n";
  if (f.output.empty()) {
    out << report;
  } else {
    write_file(f.output, report);
  }
  if (skipped) err << "skipped " << skipped << " records without a prediction\n";
  return kExitOk;
}

struct TuneFlags {
  std::string dataset;
  std::string alphas;
  std::string beam_widths;
  std::string objective;
  double subset_fraction = 0.10;
  std::uint64_t seed = 0;
  std::string journal;
  std::string csv;
  std::string json_path;
  std::string scores;
  DecodeFlags decode;
};

std::vector<double> parse_grid(const std::string& text, const char* flag) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      const auto colon = item.find(':', 1);
      if (colon != std::string::npos) {
        const long lo = std::stol(item.substr(0, colon));
        const long hi = std::stol(item.substr(colon + 1));
        if (hi < lo) throw ConfigError(std::string(flag) + ": empty range " + item);
        for (long v = lo; v <= hi; ++v) values.push_back(static_cast<double>(v));
      } else {
        values.push_back(parse_double(item));
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError(std::string(flag) + ": cannot parse '" + item + "'");
    }
  }
  if (values.empty()) throw ConfigError(std::string(flag) + " is empty");
  return values;
}

int cmd_tune(const TuneFlags& f, std::ostream& out, std::ostream& err) {
  apply_jobs(f.decode.jobs);
  GridSpec spec = GridSpec::defaults();
  if (!f.alphas.empty()) spec.alphas = parse_grid(f.alphas, "--alphas");
  if (!f.beam_widths.empty()) {
    spec.beam_widths.clear();
    for (double k : parse_grid(f.beam_widths, "--beam-widths")) {
      if (k != static_cast<int>(k)) throw ConfigError("--beam-widths must be integers");
      spec.beam_widths.push_back(static_cast<int>(k));
    }
  }
  spec.objective = !f.objective.empty() ? f.objective
                   : f.scores.empty()   ? "rougeL"
                                        : "bs_prob";
  spec.subset_fraction = f.subset_fraction;
  spec.seed = f.seed;
  spec.validate();

  const auto data = read_dataset(f.dataset);
  if (data.empty()) throw DataError(f.dataset + ": empty dataset");
  const auto engine = make_engine(f.decode, data);
  const DecodeConfig base = make_decode_config(f.decode, *engine);
  const std::size_t budget = context_budget(f.decode, *engine);

  std::vector<TuningExample> examples;
  for (const auto& r : data) {
    if (!r.reference) throw DataError(f.dataset + ": record '" + r.id + "' has no reference");
    examples.push_back({prepare_job(*engine, r, budget), r.source, *r.reference});
  }

  ExternalScorer external;
  std::map<std::tuple<std::string, double, int>, double> cell_scores;
  if (!f.scores.empty()) {
    for (const auto& row : read_jsonl(f.scores)) {
      const std::string at = where(f.scores, row.line);
      const auto alpha = optional_number(row.value, "alpha", at);
      const auto width = optional_number(row.value, "beam_width", at);
      const auto score = optional_number(row.value, "bartscore", at);
      if (!alpha || !width || !score) {
        throw DataError(at + ": cell scores need alpha, beam_width and bartscore");
      }
      cell_scores[{required_string(row.value, "id", at), *alpha,
                   static_cast<int>(*width)}] = *score;
    }
    external = [&cell_scores](const TuningExample& ex, double alpha, int width,
                              const std::string&) {
      const auto it = cell_scores.find({ex.job.id, alpha, width});
      if (it == cell_scores.end()) {
        throw DataError("no external score for '" + ex.job.id + "' at alpha " +
                        format_double(alpha) + ", beam width " + std::to_string(width));
      }
      return it->second;
    };
  }

  const auto evaluate = make_decode_evaluator(*engine->scorer, *engine->renderer, examples,
                                              base, spec.objective, external);
  std::optional<CellJournal> journal;
  if (!f.journal.empty()) journal.emplace(f.journal);
  const GridResult result =
      grid_search(spec, examples.size(), evaluate, engine->scorer->concurrency_safe(),
                  journal ? &*journal : nullptr);

  if (!f.csv.empty()) write_file(f.csv, grid_to_csv(result));
  if (!f.json_path.empty()) write_file(f.json_path, grid_to_json(result) + "\n");
  if (f.csv.empty() && f.json_path.empty()) out << grid_to_csv(result);

  const std::size_t failed = static_cast<std::size_t>(std::count_if(
      result.cells.begin(), result.cells.end(), [](const GridCell& c) { return c.failed(); }));
  if (result.ranking.empty()) {
    err << "every grid cell failed\n";
    return kExitBackend;
  }
  const GridCell& best = result.cells[result.ranking.front()];
  err << "best: alpha " << format_double(best.alpha) << ", beam width " << best.beam_width
      << ", " << spec.objective << " " << format_double(*best.objective);
  if (failed) err << " (" << failed << " failed cells)";
  err << "\n";
  return kExitOk;
}

struct CompareFlags {
  std::string a;
  std::string b;
  std::string output;
  bool stem = false;
};

int cmd_compare(const CompareFlags& f, std::ostream& out) {
  const auto a = read_predictions(f.a, nullptr);
  const auto b = read_predictions(f.b, nullptr);
  std::map<std::string, std::size_t> b_index;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (!b_index.emplace(b[i].id, i).second) {
      throw DataError(f.b + ": duplicate id '" + b[i].id + "'");
    }
  }
  if (a.size() != b.size()) {
    throw DataError("prediction files cover different examples (" +
                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  std::vector<ExampleRecord> b_aligned;
  for (const auto& ex : a) {
    const auto it = b_index.find(ex.id);
    if (it == b_index.end()) throw DataError(f.b + ": missing id '" + ex.id + "'");
    b_aligned.push_back(b[it->second]);
  }
  const RougeOptions opts{f.stem};
  const auto ma = score_batch(a, opts);
  const auto mb = score_batch(b_aligned, opts);

  std::vector<PairedSeries> series;
  const auto add = [&](std::string name, std::string family, auto get) {
    PairedSeries s{std::move(name), std::move(family), {}, {}};
    for (std::size_t i = 0; i < a.size(); ++i) {
      s.a.push_back(get(ma[i]));
      s.b.push_back(get(mb[i]));
    }
    series.push_back(std::move(s));
  };
  add("rouge1", "rouge", [](const ExampleMetrics& m) { return m.rouge1.f1; });
  add("rouge2", "rouge", [](const ExampleMetrics& m) { return m.rouge2.f1; });
  add("rougeL", "rouge", [](const ExampleMetrics& m) { return m.rougeL.f1; });
  for (int n = 1; n <= kMaxNovelN; ++n) {
    add("novel_" + std::to_string(n) + "gram_f1", "novel_ngram",
        [n](const ExampleMetrics& m) { return m.novel[static_cast<std::size_t>(n - 1)].f1; });
  }
  const auto both_have = [&](auto field) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!(a[i].*field) || !(b_aligned[i].*field)) return false;
    }
    return true;
  };
  for (auto [name, field] : {std::pair{"hit_rate", &ExampleRecord::hit_rate},
                             std::pair{"argmax_change_rate", &ExampleRecord::argmax_change_rate}}) {
    if (!both_have(field)) continue;
    PairedSeries s{name, "trace", {}, {}};
    for (std::size_t i = 0; i < a.size(); ++i) {
      s.a.push_back(*(a[i].*field));
      s.b.push_back(*(b_aligned[i].*field));
    }
    series.push_back(std::move(s));
  }

  const std::string report = significance_to_json(paired_significance(series)) + "\n";
  if (f.output.empty()) {
    out << report;
  } else {
    write_file(f.output, report);
  }
  return kExitOk;
}

}  // namespace

std::string render_template(const std::string& tmpl, std::string_view article) {
  static constexpr std::string_view kPlaceholder = "{article}";
  const auto pos = tmpl.find(kPlaceholder);
  if (pos == std::string::npos ||
      tmpl.find(kPlaceholder, pos + kPlaceholder.size()) != std::string::npos) {
    throw ConfigError("prompt template must contain {article} exactly once");
  }
  std::string out = tmpl.substr(0, pos);
  out += article;
  out += tmpl.substr(pos + kPlaceholder.size());
  return out;
}

std::string unescape(std::string_view text) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\' || i + 1 == text.size()) {
      out += text[i];
      continue;
    }
    switch (text[++i]) {
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      case '\\': out += '\\'; break;
      default:
        out += '\\';
        out += text[i];
    }
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Source-bigram promotion decoding for summarization"};
  app.name(args.empty() ? "bloop" : args.front());
  app.set_config("--config", "", "TOML/INI file; options go under a [command] section");
  app.require_subcommand(1);
  app.fallthrough();

  BuildCacheFlags build;
  auto* build_cmd = app.add_subcommand("build-cache", "Serialize the bigram cache of a document");
  build_cmd->add_option("input", build.input, "Text file, or JSONL dataset")->required();
  build_cmd->add_option("-o,--output", build.output, "Cache file")->required();
  build_cmd->add_option("--format", build.format, "json or binary")
      ->check(CLI::IsMember({"json", "binary"}))
      ->capture_default_str();
  build_cmd->add_flag("--jsonl", build.jsonl, "Treat the input as a JSONL dataset");
  build_cmd->add_option("--doc-id", build.doc_id, "Document id (default: file name)");
  build_cmd->add_option("--vocab-in", build.vocab_in, "Frozen vocabulary file");
  build_cmd->add_option("--unknown-token", build.unknown_token,
                        "Map unseen tokens to this entry of the frozen vocabulary");
  build_cmd->add_option("--vocab-out", build.vocab_out, "Write the vocabulary used");
  build_cmd->add_option("--backend", build.backend.backend, "reference or bridge:<address>")
      ->envname("BLOOP_BACKEND")
      ->capture_default_str();
  build_cmd->add_option("--expect-vocab-size", build.backend.expect_vocab_size,
                        "Fail unless the backend handshake reports this vocabulary size");

  SummarizeFlags summarize;
  auto* sum_cmd = app.add_subcommand("summarize", "Decode a summary for every record");
  sum_cmd->add_option("dataset", summarize.dataset, "JSONL with id, source, reference")
      ->required();
  sum_cmd->add_option("-o,--output", summarize.output, "Predictions JSONL")->required();
  sum_cmd->add_option("--trace", summarize.trace,
                      "Trace JSONL (default: <output>.trace.jsonl)");
  add_decode_options(sum_cmd, summarize.decode);

  EvaluateFlags evaluate;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions against references");
  eval_cmd->add_option("predictions", evaluate.predictions, "Predictions JSONL")->required();
  eval_cmd->add_option("--scores", evaluate.scores, "JSONL with id and bartscore");
  eval_cmd->add_option("-o,--output", evaluate.output, "Report path (default: stdout)");
  eval_cmd->add_flag("--stem", evaluate.stem, "Porter-stem ROUGE tokens");

  TuneFlags tune;
  auto* tune_cmd = app.add_subcommand("tune", "Grid search over alpha and beam width");
  tune_cmd->add_option("dataset", tune.dataset, "JSONL with id, source, reference")
      ->required();
  tune_cmd->add_option("--alphas", tune.alphas, "Comma list and/or lo:hi ranges (default -8:2)");
  tune_cmd->add_option("--beam-widths", tune.beam_widths, "Comma list and/or lo:hi (default 1:20)");
  tune_cmd->add_option("--objective", tune.objective,
                       "rouge1, rouge2, rougeL, hit_rate or bs_prob")
      ->check(CLI::IsMember({"rouge1", "rouge2", "rougeL", "hit_rate", "bs_prob"}));
  tune_cmd->add_option("--subset-fraction", tune.subset_fraction, "Share of the dataset tuned on")
      ->capture_default_str();
  tune_cmd->add_option("--seed", tune.seed, "Subset sampling seed")
      ->envname("BLOOP_SEED")
      ->capture_default_str();
  tune_cmd->add_option("--journal", tune.journal, "Resumable cell journal (JSONL)");
  tune_cmd->add_option("--csv", tune.csv, "Grid table as CSV");
  tune_cmd->add_option("--json", tune.json_path, "Grid table as JSON");
  tune_cmd->add_option("--scores", tune.scores,
                       "JSONL with id, alpha, beam_width and bartscore per cell");
  add_decode_options(tune_cmd, tune.decode);

  CompareFlags compare;
  auto* cmp_cmd = app.add_subcommand("compare", "Paired significance tests between two runs");
  cmp_cmd->add_option("a", compare.a, "Baseline predictions JSONL")->required();
  cmp_cmd->add_option("b", compare.b, "Candidate predictions JSONL")->required();
  cmp_cmd->add_option("-o,--output", compare.output, "Report path (default: stdout)");
  cmp_cmd->add_flag("--stem", compare.stem, "Porter-stem ROUGE tokens");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*build_cmd) return cmd_build_cache(build, err);
    if (*sum_cmd) return cmd_summarize(summarize, err);
    if (*eval_cmd) return cmd_evaluate(evaluate, out, err);
    if (*tune_cmd) return cmd_tune(tune, out, err);
    if (*cmp_cmd) return cmd_compare(compare, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace bloop::cli
