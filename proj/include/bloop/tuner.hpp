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
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bloop/decode.hpp"

namespace bloop {

struct GridSpec {
  std::vector<double> alphas;
  std::vector<int> beam_widths;
  std::string objective = "rougeL";
  double subset_fraction = 0.10;
  std::uint64_t seed = 0;

  /// Integer alphas -8..2, beam widths 1..20.
  static GridSpec defaults();
  /// Throws ConfigError on empty grids, bad widths, an unknown objective or a
  /// fraction outside (0, 1].
  void validate() const;
};

/// Objectives the decode evaluator can compute natively, plus "bs_prob"
/// which needs an external scorer.
bool is_known_objective(std::string_view name);

struct GridCell {
  double alpha = 0.0;
  int beam_width = 1;
  std::optional<double> objective;  // empty when the cell failed
  std::string error;

  bool failed() const { return !objective.has_value(); }
};

struct GridResult {
  std::string objective;
  std::vector<std::size_t> subset;
  std::vector<GridCell> cells;      // alpha-major grid order
  std::vector<std::size_t> ranking; // indices into cells, best first
};

/// Objective value of one (alpha, beam width) cell on the given subset.
/// Throwing marks the cell failed.
using CellEvaluator = std::function<double(
    double alpha, int beam_width, std::span<const std::size_t> subset)>;

/// ceil(fraction * n) distinct indices, ascending, chosen by a partial
/// Fisher-Yates shuffle driven by mt19937_64 so the subset is identical
/// across platforms for a given seed.
std::vector<std::size_t> select_subset(std::size_t n, double fraction,
                                       std::uint64_t seed);

/// Failed cells are excluded; ties go to the smaller beam, then the alpha
/// closer to 0, then the smaller alpha.
std::vector<std::size_t> rank_cells(std::span<const GridCell> cells);

/// Append-only record of completed cells, one JSON object per line. Cells
/// already present are not re-evaluated.
class CellJournal {
 public:
  explicit CellJournal(std::string path);

  std::optional<GridCell> find(double alpha, int beam_width) const;
  void record(const GridCell& cell);

 private:
  std::string path_;
  std::vector<GridCell> done_;
  mutable std::mutex mutex_;
};

/// Evaluates every cell on one shared subset. With `parallel` the cells fan
/// out over OpenMP threads; the table is identical either way.
GridResult grid_search(const GridSpec& spec, std::size_t dataset_size,
                       const CellEvaluator& evaluate, bool parallel,
                       CellJournal* journal = nullptr);

std::string grid_to_csv(const GridResult& result);
std::string grid_to_json(const GridResult& result);

struct TuningExample {
  DecodeJob job;
  std::string source_text;
  std::string reference;
};

/// Scores one prediction externally (e.g. BARTScore); used by "bs_prob".
using ExternalScorer = std::function<double(
    const TuningExample& example, double alpha, int beam_width,
    const std::string& prediction)>;

/// Decodes the subset with the cell's alpha and beam width on top of `base`
/// and returns the mean objective: rouge1/rouge2/rougeL F1, hit_rate, or
/// bs_prob (mean e^score from `external`). Any example failure fails the cell.
CellEvaluator make_decode_evaluator(const TokenScorer& backend,
                                    const TextRenderer& renderer,
                                    std::span<const TuningExample> examples,
                                    DecodeConfig base, std::string objective,
                                    ExternalScorer external = {});

}  // namespace bloop
