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

#include "bloop/transform.hpp"

#include <stdexcept>
#include <string>

#include "bloop/error.hpp"
#include "bloop/kernels.hpp"

namespace bloop {

Promotion promote(LogitVector logits, std::optional<TokenId> prev,
                  const BigramCache& cache, const PromotionConfig& cfg,
                  int step, LookupStats* stats) {
  if (step < 1) throw std::invalid_argument("promotion step must be >= 1");
  if (prev.has_value() == (step == 1)) {
    throw std::invalid_argument(
        "previous token must be absent exactly on the first step");
  }
  if (!kernels::all_finite(logits)) {
    throw DataError("non-finite logit in backend output at step " +
                    std::to_string(step));
  }

  Promotion out;
  out.raw_argmax = kernels::argmax(logits);
  out.final_argmax = out.raw_argmax;

  std::span<const TokenId> followers;
  if (prev) {
    LookupStats local;
    followers = cache.lookup(*prev, stats ? *stats : local);
    out.looked_up = true;
    out.cache_hit = !followers.empty();
  }

  const bool exempt = !cfg.enabled || cfg.alpha == 0.0 || !prev ||
                      (step == 1 && cfg.first_step_exempt) ||
                      cfg.stop_set.contains(out.raw_argmax) || followers.empty();
  if (!exempt) {
    const auto vocab = static_cast<TokenId>(logits.size());
    for (TokenId v : followers) {
      if (v < 0 || v >= vocab) continue;
      const double weight =
          cfg.variant == PromotionVariant::frequency_weighted
              ? static_cast<double>(cache.count(*prev, v))
              : 1.0;
      logits[static_cast<std::size_t>(v)] += weight * cfg.alpha;
    }
    out.applied = true;
    out.final_argmax = kernels::argmax(logits);
    out.argmax_changed = out.final_argmax != out.raw_argmax;
  }
  out.logits = std::move(logits);
  return out;
}

}  // namespace bloop
