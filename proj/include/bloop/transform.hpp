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

#include <algorithm>
#include <optional>
#include <span>
#include <vector>

#include "bloop/cache.hpp"
#include "bloop/text.hpp"

namespace bloop {

/// Dense unnormalized log-scores over the vocabulary.
using LogitVector = std::vector<double>;

enum class PromotionVariant { plain, frequency_weighted };

/// Token ids that end a summary. Promotion is suppressed whenever the raw
/// argmax lands in this set.
class StopSet {
 public:
  StopSet() = default;
  explicit StopSet(std::vector<TokenId> ids) : ids_(std::move(ids)) {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  }

  bool contains(TokenId id) const {
    return std::binary_search(ids_.begin(), ids_.end(), id);
  }
  std::span<const TokenId> ids() const { return ids_; }
  bool empty() const { return ids_.empty(); }

 private:
  std::vector<TokenId> ids_;
};

struct PromotionConfig {
  double alpha = 0.0;
  PromotionVariant variant = PromotionVariant::plain;
  StopSet stop_set;
  bool first_step_exempt = true;
  // When false the logits pass through untouched but lookups are still
  // recorded, so traces stay comparable with promoted runs.
  bool enabled = true;
};

/// Outcome of one promotion step.
struct Promotion {
  LogitVector logits;
  TokenId raw_argmax = -1;
  TokenId final_argmax = -1;
  bool looked_up = false;
  bool cache_hit = false;
  bool applied = false;
  bool argmax_changed = false;
};

/// Adds alpha (or count * alpha for the frequency-weighted variant) to the
/// score of every token that extends `prev` into a source bigram.
///
/// `step` is 1-based and `prev` must be empty exactly when step == 1. The
/// logits are left bitwise untouched on the first step (when exempt), when
/// the raw argmax is in the stop set, or when `prev` has no followers.
/// Throws DataError on non-finite input scores.
Promotion promote(LogitVector logits, std::optional<TokenId> prev,
                  const BigramCache& cache, const PromotionConfig& cfg,
                  int step, LookupStats* stats = nullptr);

}  // namespace bloop
