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

#include "bloop/decode.hpp"

#include <algorithm>
#include <cmath>

#include "bloop/error.hpp"
#include "bloop/kernels.hpp"

namespace bloop {

namespace {

constexpr std::size_t kStopWindow = 16;

bool ranks_before(const BeamHypothesis& a, const BeamHypothesis& b,
                  double length_penalty) {
  const double sa = a.adjusted_score(length_penalty);
  const double sb = b.adjusted_score(length_penalty);
  if (sa != sb) return sa > sb;
  if (a.ids.size() != b.ids.size()) return a.ids.size() < b.ids.size();
  return a.ids < b.ids;
}

BatchItem run_job(const TokenScorer& backend, const TextRenderer& renderer,
                  const DecodeJob& job, const DecodeConfig& cfg) {
  BatchItem item;
  item.id = job.id;
  try {
    std::shared_ptr<const BigramCache> cache = job.cache;
    if (!cache) {
      cache = std::make_shared<const BigramCache>(BigramCache::build(job.source, job.id));
    }
    const std::vector<TokenId> prompt =
        job.prompt.empty() ? job.source.flatten() : job.prompt;
    item.result = decode(backend, renderer, prompt, *cache, cfg);
    item.stats = trace_stats(item.result->best.trace);
  } catch (const std::exception& e) {
    item.error = e.what();
  }
  return item;
}

}  // namespace

void DecodeConfig::validate(std::size_t vocab_size) const {
  if (beam_width < 1) throw ConfigError("beam width must be >= 1");
  if (max_new_tokens < 1) throw ConfigError("max new tokens must be >= 1");
  if (!std::isfinite(promotion.alpha)) throw ConfigError("alpha must be finite");
  if (!std::isfinite(length_penalty)) throw ConfigError("length penalty must be finite");
  for (TokenId id : promotion.stop_set.ids()) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
      throw ConfigError("stop-set id outside the vocabulary: " + std::to_string(id));
    }
  }
}

double BeamHypothesis::adjusted_score(double length_penalty) const {
  if (length_penalty == 0.0 || ids.empty()) return score;
  return score / std::pow(static_cast<double>(ids.size()), length_penalty);
}

std::optional<std::size_t> find_stop(const TextRenderer& renderer,
                                     std::span<const TokenId> ids,
                                     std::span<const std::string> stop_strings,
                                     std::string* full_text) {
  if (ids.empty() || stop_strings.empty()) return std::nullopt;
  const auto tail = ids.subspan(ids.size() - std::min(ids.size(), kStopWindow));
  const std::string before = renderer.render(tail.first(tail.size() - 1));
  const std::string after = renderer.render(tail);
  const std::size_t fresh = after.starts_with(before) ? before.size() : 0;

  std::optional<std::size_t> hit;
  for (const auto& stop : stop_strings) {
    if (stop.empty()) continue;
    const std::size_t from = fresh >= stop.size() - 1 ? fresh - (stop.size() - 1) : 0;
    const std::size_t pos = after.find(stop, from);
    if (pos != std::string::npos && pos + stop.size() > fresh &&
        (!hit || pos < *hit)) {
      hit = pos;
    }
  }
  if (!hit) return std::nullopt;
  std::string full = tail.size() == ids.size() ? after : renderer.render(ids);
  std::size_t cut = 0;
  if (full.ends_with(after)) {
    cut = full.size() - after.size() + *hit;
  } else {
    // Suffix rendering differed from the full rendering; fall back to the
    // last occurrence of the matched text.
    const auto pos = full.rfind(after.substr(*hit));
    cut = pos == std::string::npos ? full.size() : pos;
  }
  if (full_text) *full_text = std::move(full);
  return cut;
}

DecodeResult decode(const TokenScorer& backend, const TextRenderer& renderer,
                    std::span<const TokenId> prompt, const BigramCache& cache,
                    const DecodeConfig& cfg) {
  const std::size_t vocab = backend.vocab_size();
  cfg.validate(vocab);
  const auto beam = static_cast<std::size_t>(cfg.beam_width);
  const std::size_t fan_out = 2 * beam;

  struct Candidate {
    std::size_t parent;
    TokenId token;
    double score;
  };

  DecodeResult result;
  std::vector<BeamHypothesis> live(1);
  std::vector<TokenId> context;

  for (int step = 1; step <= cfg.max_new_tokens && !live.empty(); ++step) {
    std::vector<Candidate> candidates;
    std::vector<StepRecord> records(live.size());
    for (std::size_t h = 0; h < live.size(); ++h) {
      const BeamHypothesis& hyp = live[h];
      context.assign(prompt.begin(), prompt.end());
      context.insert(context.end(), hyp.ids.begin(), hyp.ids.end());
      std::optional<TokenId> prev;
      if (step > 1) prev = hyp.ids.back();

      std::vector<TokenId> must_score;
      if (prev) {
        for (TokenId v : cache.followers(*prev)) {
          if (v >= 0 && static_cast<std::size_t>(v) < vocab) must_score.push_back(v);
        }
      }

      ScoreResult scored;
      Promotion promoted;
      try {
        check_context_length(backend, context.size());
        scored = backend.score(context, must_score);
        if (scored.logits.size() != vocab) {
          throw BackendError("backend returned " + std::to_string(scored.logits.size()) +
                             " scores for a vocabulary of " + std::to_string(vocab));
        }
        promoted = promote(std::move(scored.logits), prev, cache, cfg.promotion,
                           step, &result.lookups);
      } catch (const BackendError& e) {
        throw BackendError("decode step " + std::to_string(step) + ": " + e.what());
      } catch (const DataError& e) {
        throw BackendError("decode step " + std::to_string(step) + ": " + e.what());
      }

      records[h] = StepRecord{step,
                              promoted.looked_up,
                              promoted.cache_hit,
                              promoted.applied,
                              promoted.argmax_changed,
                              promoted.raw_argmax,
                              promoted.final_argmax};

      std::span<const TokenId> restrict_to;
      if (scored.exact_ids) restrict_to = *scored.exact_ids;
      for (TokenId v : kernels::top_m(promoted.logits, fan_out, restrict_to)) {
        candidates.push_back(
            {h, v, hyp.score + promoted.logits[static_cast<std::size_t>(v)]});
      }
    }

    std::sort(candidates.begin(), candidates.end(),
              [&](const Candidate& a, const Candidate& b) {
                if (a.score != b.score) return a.score > b.score;
                const auto& ia = live[a.parent].ids;
                const auto& ib = live[b.parent].ids;
                if (ia != ib) return ia < ib;
                return a.token < b.token;
              });

    std::vector<BeamHypothesis> next;
    const std::size_t keep = std::min(beam, candidates.size());
    for (std::size_t c = 0; c < keep; ++c) {
      const Candidate& cand = candidates[c];
      BeamHypothesis hyp = live[cand.parent];
      hyp.ids.push_back(cand.token);
      hyp.trace.push_back(records[cand.parent]);
      hyp.score = cand.score;

      std::string full;
      if (auto cut = find_stop(renderer, hyp.ids, cfg.stop_strings, &full)) {
        hyp.finished = true;
        hyp.reason = FinishReason::stop_string;
        hyp.text = full.substr(0, *cut);
        result.finished.push_back(std::move(hyp));
      } else if (step == cfg.max_new_tokens) {
        hyp.finished = true;
        hyp.reason = FinishReason::max_length;
        hyp.text = renderer.render(hyp.ids);
        result.finished.push_back(std::move(hyp));
      } else {
        next.push_back(std::move(hyp));
      }
    }
    live = std::move(next);
  }

  if (result.finished.empty()) {
    throw BackendError("backend produced no candidate tokens");
  }
  std::sort(result.finished.begin(), result.finished.end(),
            [&](const BeamHypothesis& a, const BeamHypothesis& b) {
              return ranks_before(a, b, cfg.length_penalty);
            });
  result.best = result.finished.front();
  result.incomplete = std::none_of(
      result.finished.begin(), result.finished.end(),
      [](const BeamHypothesis& h) { return h.reason == FinishReason::stop_string; });
  return result;
}

std::vector<BatchItem> batch_decode_serial(const TokenScorer& backend,
                                           const TextRenderer& renderer,
                                           std::span<const DecodeJob> jobs,
                                           const DecodeConfig& cfg) {
  std::vector<BatchItem> out;
  out.reserve(jobs.size());
  for (const auto& job : jobs) out.push_back(run_job(backend, renderer, job, cfg));
  return out;
}

std::vector<BatchItem> batch_decode(const TokenScorer& backend,
                                    const TextRenderer& renderer,
                                    std::span<const DecodeJob> jobs,
                                    const DecodeConfig& cfg) {
  if (!backend.concurrency_safe() || jobs.size() < 2) {
    return batch_decode_serial(backend, renderer, jobs, cfg);
  }
  std::vector<BatchItem> out(jobs.size());
  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    out[idx] = run_job(backend, renderer, jobs[idx], cfg);
  }
  return out;
}

}  // namespace bloop
