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

#include "bloop/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>

#include <json.hpp>

#include "bloop/error.hpp"

namespace bloop {

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return values[x] < values[y];
  });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a,
                                    std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("paired samples differ in length");
  if (a.size() < 5) throw DataError("paired test needs at least 5 pairs");

  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = b[i] - a[i];
    if (!std::isfinite(d)) throw DataError("non-finite paired score");
    if (d != 0.0) diffs.push_back(d);
  }
  WilcoxonResult r;
  r.n = diffs.size();
  if (diffs.empty()) {
    r.degenerate = true;
    return r;
  }

  std::vector<double> magnitudes(diffs.size());
  std::transform(diffs.begin(), diffs.end(), magnitudes.begin(),
                 [](double d) { return std::fabs(d); });
  const auto ranks = average_ranks(magnitudes);
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    (diffs[i] > 0 ? r.w_plus : r.w_minus) += ranks[i];
  }
  r.rank_biserial = (r.w_plus - r.w_minus) / (r.w_plus + r.w_minus);

  const double total = r.w_plus + r.w_minus;
  if (r.n <= kWilcoxonExactLimit) {
    // Ranks are multiples of 1/2, so doubled ranks are integers and the null
    // distribution of 2 * W+ is a subset-sum count over 2^n sign patterns.
    const auto max_sum = static_cast<std::size_t>(std::llround(2.0 * total));
    std::vector<std::uint64_t> ways(max_sum + 1, 0);
    ways[0] = 1;
    for (double rank : ranks) {
      const auto step = static_cast<std::size_t>(std::llround(2.0 * rank));
      for (std::size_t s = max_sum; s >= step; --s) ways[s] += ways[s - step];
    }
    const auto observed = static_cast<std::size_t>(std::llround(2.0 * r.w_plus));
    std::uint64_t lower = 0, upper = 0;
    for (std::size_t s = 0; s <= max_sum; ++s) {
      if (s <= observed) lower += ways[s];
      if (s >= observed) upper += ways[s];
    }
    const double patterns = std::ldexp(1.0, static_cast<int>(r.n));
    const double tail = static_cast<double>(std::min(lower, upper)) / patterns;
    r.p_value = std::min(1.0, 2.0 * tail);
    r.exact = true;
  } else {
    const double n = static_cast<double>(r.n);
    double variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
    std::map<double, std::size_t> ties;
    for (double rank : ranks) ++ties[rank];
    for (const auto& [rank, t] : ties) {
      const double tt = static_cast<double>(t);
      variance -= (tt * tt * tt - tt) / 48.0;
    }
    const double z = (r.w_plus - total / 2.0) / std::sqrt(variance);
    r.p_value = std::min(1.0, std::erfc(std::fabs(z) / std::sqrt(2.0)));
    r.exact = false;
  }
  return r;
}

std::vector<double> benjamini_hochberg(std::span<const double> p_values) {
  const std::size_t m = p_values.size();
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("p-value outside [0, 1]");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return p_values[x] < p_values[y];
  });
  std::vector<double> adjusted(m);
  double running = 1.0;
  for (std::size_t rank = m; rank-- > 0;) {
    const std::size_t idx = order[rank];
    const double scaled =
        p_values[idx] * static_cast<double>(m) / static_cast<double>(rank + 1);
    running = std::min(running, scaled);
    // p * m / rank can round below p when rank == m.
    adjusted[idx] = std::max(p_values[idx], std::min(1.0, running));
  }
  return adjusted;
}

std::vector<SignificanceRow> paired_significance(
    std::span<const PairedSeries> series) {
  std::vector<SignificanceRow> rows;
  rows.reserve(series.size());
  std::map<std::string, std::vector<std::size_t>> families;
  for (const auto& s : series) {
    families[s.family].push_back(rows.size());
    rows.push_back({s.name, s.family, wilcoxon_signed_rank(s.a, s.b), 1.0});
  }
  for (const auto& [family, members] : families) {
    std::vector<double> p;
    for (std::size_t i : members) p.push_back(rows[i].test.p_value);
    const auto adjusted = benjamini_hochberg(p);
    for (std::size_t k = 0; k < members.size(); ++k) {
      rows[members[k]].fdr_adjusted = adjusted[k];
    }
  }
  return rows;
}

std::string significance_to_json(std::span<const SignificanceRow> rows) {
  nlohmann::ordered_json tests = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    tests.push_back({{"metric", row.name},
                     {"family", row.family},
                     {"n", row.test.n},
                     {"w_plus", row.test.w_plus},
                     {"w_minus", row.test.w_minus},
                     {"p_value", row.test.p_value},
                     {"fdr_adjusted", row.fdr_adjusted},
                     {"rank_biserial", row.test.rank_biserial},
                     {"exact", row.test.exact},
                     {"degenerate", row.test.degenerate}});
  }
  nlohmann::ordered_json j;
  j["tests"] = std::move(tests);
  return j.dump(2);
}

}  // namespace bloop
