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
#include <span>
#include <string>
#include <vector>

namespace bloop {

/// Largest number of non-zero differences for which the null distribution
/// is computed exactly; beyond it a tie-corrected normal approximation is
/// used.
inline constexpr std::size_t kWilcoxonExactLimit = 50;

struct WilcoxonResult {
  std::size_t n = 0;        // pairs after dropping zero differences
  double w_plus = 0.0;      // rank sum of positive differences (b - a)
  double w_minus = 0.0;
  double p_value = 1.0;     // two-sided
  double rank_biserial = 0.0;  // (w_plus - w_minus) / (w_plus + w_minus)
  bool exact = true;
  bool degenerate = false;  // every difference was zero
};

/// Average ranks (1-based) of |values|, ties sharing the mean rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Paired two-sided signed-rank test on b - a. Zero differences are dropped;
/// tied magnitudes get average ranks and the exact null distribution is
/// conditioned on that tie structure. Throws DataError when the lengths
/// differ or are below 5.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a,
                                    std::span<const double> b);

/// Benjamini-Hochberg step-up adjustment, in input order. Throws DataError
/// for values outside [0, 1].
std::vector<double> benjamini_hochberg(std::span<const double> p_values);

struct PairedSeries {
  std::string name;
  std::string family;
  std::vector<double> a;
  std::vector<double> b;
};

struct SignificanceRow {
  std::string name;
  std::string family;
  WilcoxonResult test;
  double fdr_adjusted = 1.0;
};

/// One test per series; BH adjustment runs within each family.
std::vector<SignificanceRow> paired_significance(
    std::span<const PairedSeries> series);

std::string significance_to_json(std::span<const SignificanceRow> rows);

}  // namespace bloop
