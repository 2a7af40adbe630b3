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

// Independent reference implementations. Each one favours obviousness over
// speed and shares no code with the library routine it checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bloop/model.hpp"
#include "bloop/text.hpp"

namespace bloop::oracle {

using BigramCounts = std::map<std::pair<TokenId, TokenId>, std::uint32_t>;

/// Every adjacent pair inside every sentence, counted.
inline BigramCounts bigrams(const Document& doc) {
  BigramCounts out;
  for (const auto& sentence : doc.sentences) {
    for (std::size_t i = 0; i + 1 < sentence.size(); ++i) {
      ++out[{sentence[i], sentence[i + 1]}];
    }
  }
  return out;
}

inline std::set<TokenId> followers(const BigramCounts& counts, TokenId prev) {
  std::set<TokenId> out;
  for (const auto& [pair, n] : counts) {
    if (pair.first == prev) out.insert(pair.second);
  }
  return out;
}

/// First index holding the maximum.
inline TokenId argmax(const std::vector<double>& v) {
  TokenId best = -1;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (best < 0 || v[i] > v[static_cast<std::size_t>(best)]) {
      best = static_cast<TokenId>(i);
    }
  }
  return best;
}

struct PromoteSpec {
  double alpha = 0.0;
  bool frequency_weighted = false;
  std::set<TokenId> stop;
  bool first_step_exempt = true;
};

/// Promotion written straight from its definition.
inline std::vector<double> promote(const std::vector<double>& raw,
                                   std::optional<TokenId> prev,
                                   const BigramCounts& counts,
                                   const PromoteSpec& spec, int step) {
  if (!prev || (step == 1 && spec.first_step_exempt)) return raw;
  if (spec.stop.count(argmax(raw))) return raw;
  std::vector<double> out = raw;
  for (std::size_t v = 0; v < raw.size(); ++v) {
    const auto it = counts.find({*prev, static_cast<TokenId>(v)});
    if (it == counts.end()) continue;
    const double weight = spec.frequency_weighted ? static_cast<double>(it->second) : 1.0;
    out[v] = raw[v] + weight * spec.alpha;
  }
  return out;
}

struct Sequence {
  std::vector<TokenId> ids;
  double score = 0.0;
};

/// Scores all |V|^horizon continuations and returns the best one (ties go to
/// the lexicographically smallest sequence).
inline Sequence exhaustive_best(const NgramLM& lm, const std::vector<TokenId>& prompt,
                                int horizon, const BigramCounts& counts,
                                const PromoteSpec& spec, bool promotion_on) {
  const auto vocab = static_cast<TokenId>(lm.vocab_size());
  std::optional<Sequence> best;
  std::vector<TokenId> ids(static_cast<std::size_t>(horizon), 0);
  for (;;) {
    double score = 0.0;
    std::vector<TokenId> context = prompt;
    for (int t = 0; t < horizon; ++t) {
      auto raw = lm.log_distribution(context);
      std::optional<TokenId> prev;
      if (t > 0) prev = ids[static_cast<std::size_t>(t - 1)];
      const auto scores = promotion_on ? promote(raw, prev, counts, spec, t + 1) : raw;
      score = score + scores[static_cast<std::size_t>(ids[static_cast<std::size_t>(t)])];
      context.push_back(ids[static_cast<std::size_t>(t)]);
    }
    if (!best || score > best->score || (score == best->score && ids < best->ids)) {
      best = Sequence{ids, score};
    }
    int pos = horizon - 1;
    while (pos >= 0 && ++ids[static_cast<std::size_t>(pos)] == vocab) {
      ids[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return *best;
}

/// Stepwise argmax of the promoted scores.
inline std::vector<TokenId> greedy(const NgramLM& lm, const std::vector<TokenId>& prompt,
                                   int horizon, const BigramCounts& counts,
                                   const PromoteSpec& spec) {
  std::vector<TokenId> ids;
  std::vector<TokenId> context = prompt;
  for (int t = 1; t <= horizon; ++t) {
    std::optional<TokenId> prev;
    if (!ids.empty()) prev = ids.back();
    const auto scores = promote(lm.log_distribution(context), prev, counts, spec, t);
    ids.push_back(argmax(scores));
    context.push_back(ids.back());
  }
  return ids;
}

/// Longest common subsequence by trying every subsequence of `a`.
inline std::size_t lcs_exhaustive(const std::vector<std::string>& a,
                                  const std::vector<std::string>& b) {
  std::size_t best = 0;
  const std::uint32_t subsets = 1u << a.size();
  for (std::uint32_t mask = 0; mask < subsets; ++mask) {
    std::vector<std::string> pick;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (mask & (1u << i)) pick.push_back(a[i]);
    }
    std::size_t j = 0;
    for (std::size_t i = 0; i < b.size() && j < pick.size(); ++i) {
      if (b[i] == pick[j]) ++j;
    }
    if (j == pick.size()) best = std::max(best, pick.size());
  }
  return best;
}

/// Two-sided signed-rank p-value by enumerating all 2^n sign assignments of
/// the (tie-averaged) ranks of the non-zero differences b - a.
inline double wilcoxon_p_enumerated(const std::vector<double>& a,
                                    const std::vector<double>& b) {
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (b[i] - a[i] != 0.0) d.push_back(b[i] - a[i]);
  }
  const std::size_t n = d.size();
  if (n == 0) return 1.0;
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::fabs(d[j]) < std::fabs(d[i])) ++less;
      if (std::fabs(d[j]) == std::fabs(d[i])) ++equal;
    }
    rank[i] = less + (equal + 1) / 2;
  }
  double observed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] > 0) observed += rank[i];
  }
  std::uint64_t at_most = 0, at_least = 0;
  const std::uint64_t patterns = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    double w = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::uint64_t{1} << i)) w += rank[i];
    }
    if (w <= observed) ++at_most;
    if (w >= observed) ++at_least;
  }
  const double tail =
      static_cast<double>(std::min(at_most, at_least)) / static_cast<double>(patterns);
  return std::min(1.0, 2 * tail);
}

}  // namespace bloop::oracle
