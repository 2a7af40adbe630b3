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

#include "bloop/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <omp.h>

namespace bloop::kernels {

namespace {

struct Best {
  double value;
  std::size_t index;
};

bool better(double value, std::size_t index, const Best& best) {
  return value > best.value || (value == best.value && index < best.index);
}

bool ranks_before(std::span<const double> scores, TokenId a, TokenId b) {
  const double sa = scores[static_cast<std::size_t>(a)];
  const double sb = scores[static_cast<std::size_t>(b)];
  return sa > sb || (sa == sb && a < b);
}

}  // namespace

TokenId argmax_serial(std::span<const double> scores) {
  if (scores.empty()) return -1;
  Best best{scores[0], 0};
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > best.value) best = {scores[i], i};
  }
  return static_cast<TokenId>(best.index);
}

TokenId argmax(std::span<const double> scores) {
  if (scores.size() < kParallelThreshold) return argmax_serial(scores);
  const auto n = static_cast<std::ptrdiff_t>(scores.size());
  Best global{scores[0], 0};
#pragma omp parallel
  {
    Best local{scores[0], 0};
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      if (better(scores[idx], idx, local)) local = {scores[idx], idx};
    }
#pragma omp critical(bloop_argmax)
    if (better(local.value, local.index, global)) global = local;
  }
  return static_cast<TokenId>(global.index);
}

TokenId argmax_over(std::span<const double> scores,
                    std::span<const TokenId> ids) {
  TokenId best = -1;
  for (TokenId id : ids) {
    if (best < 0 || ranks_before(scores, id, best)) best = id;
  }
  return best;
}

bool all_finite_serial(std::span<const double> scores) {
  return std::all_of(scores.begin(), scores.end(),
                     [](double v) { return std::isfinite(v); });
}

bool all_finite(std::span<const double> scores) {
  if (scores.size() < kParallelThreshold) return all_finite_serial(scores);
  const auto n = static_cast<std::ptrdiff_t>(scores.size());
  int bad = 0;
#pragma omp parallel for schedule(static) reduction(+ : bad)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    bad += std::isfinite(scores[static_cast<std::size_t>(i)]) ? 0 : 1;
  }
  return bad == 0;
}

std::vector<TokenId> top_m(std::span<const double> scores, std::size_t m,
                           std::span<const TokenId> restrict_to) {
  std::vector<TokenId> ids;
  if (restrict_to.empty()) {
    ids.resize(scores.size());
    std::iota(ids.begin(), ids.end(), 0);
  } else {
    ids.assign(restrict_to.begin(), restrict_to.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  }
  const auto cmp = [&](TokenId a, TokenId b) {
    return ranks_before(scores, a, b);
  };
  m = std::min(m, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(m),
                    ids.end(), cmp);
  ids.resize(m);
  return ids;
}

}  // namespace bloop::kernels
