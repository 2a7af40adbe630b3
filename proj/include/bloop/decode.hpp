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

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bloop/cache.hpp"
#include "bloop/model.hpp"
#include "bloop/trace.hpp"
#include "bloop/transform.hpp"

namespace bloop {

struct DecodeConfig {
  int beam_width = 1;
  PromotionConfig promotion;
  int max_new_tokens = 64;
  std::vector<std::string> stop_strings{".\n"};
  // Finished hypotheses rank by score / length^length_penalty.
  double length_penalty = 0.0;

  /// Throws ConfigError on beam_width < 1, max_new_tokens < 1, a non-finite
  /// alpha, or stop-set ids outside [0, vocab_size).
  void validate(std::size_t vocab_size) const;
};

enum class FinishReason { none, stop_string, max_length };

struct BeamHypothesis {
  std::vector<TokenId> ids;
  // Sum of the promoted scores of the selected tokens.
  double score = 0.0;
  bool finished = false;
  FinishReason reason = FinishReason::none;
  // Rendered output with any stop string (and what follows it) trimmed.
  std::string text;
  std::vector<StepRecord> trace;

  double adjusted_score(double length_penalty) const;
};

struct DecodeResult {
  BeamHypothesis best;
  // Ranked best-first.
  std::vector<BeamHypothesis> finished;
  // True when no hypothesis ended on a stop string.
  bool incomplete = false;
  // Every lookup made during the session, across all hypotheses.
  LookupStats lookups;
};

/// Deterministic beam search over promoted scores.
///
/// Each live hypothesis is scored with its own last token as the promotion
/// context; its top 2 * beam_width tokens (score descending, id ascending)
/// become candidates, and the global top beam_width candidates survive
/// (score descending, then lexicographic ids). Candidates that complete a
/// stop string finish and leave the beam; at max_new_tokens the remainder
/// finish. Backend failures surface as BackendError naming the step.
DecodeResult decode(const TokenScorer& backend, const TextRenderer& renderer,
                    std::span<const TokenId> prompt, const BigramCache& cache,
                    const DecodeConfig& cfg);

/// One batch entry. When `cache` is null it is built from `source`; when
/// `prompt` is empty the flattened source is the prompt.
struct DecodeJob {
  std::string id;
  Document source;
  std::vector<TokenId> prompt;
  std::shared_ptr<const BigramCache> cache;
};

struct BatchItem {
  std::string id;
  std::optional<DecodeResult> result;
  TraceStats stats;
  std::string error;
};

/// Results are in job order; per-job failures land in BatchItem::error. The
/// parallel version fans out over jobs only when the backend declares itself
/// concurrency-safe, and produces output identical to the serial one.
std::vector<BatchItem> batch_decode(const TokenScorer& backend,
                                    const TextRenderer& renderer,
                                    std::span<const DecodeJob> jobs,
                                    const DecodeConfig& cfg);
std::vector<BatchItem> batch_decode_serial(const TokenScorer& backend,
                                           const TextRenderer& renderer,
                                           std::span<const DecodeJob> jobs,
                                           const DecodeConfig& cfg);

/// Position in render(ids) where a stop string completed by the last token
/// begins, if any.
std::optional<std::size_t> find_stop(const TextRenderer& renderer,
                                     std::span<const TokenId> ids,
                                     std::span<const std::string> stop_strings,
                                     std::string* full_text = nullptr);

}  // namespace bloop
