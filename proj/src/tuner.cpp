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

#include "bloop/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bloop/error.hpp"
#include "bloop/eval.hpp"
#include "bloop/numfmt.hpp"

namespace bloop {

namespace {

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

bool same_alpha(double a, double b) { return a == b; }

}  // namespace

GridSpec GridSpec::defaults() {
  GridSpec spec;
  for (int a = -8; a <= 2; ++a) spec.alphas.push_back(a);
  for (int k = 1; k <= 20; ++k) spec.beam_widths.push_back(k);
  return spec;
}

bool is_known_objective(std::string_view name) {
  return name == "rouge1" || name == "rouge2" || name == "rougeL" ||
         name == "hit_rate" || name == "bs_prob";
}

void GridSpec::validate() const {
  if (alphas.empty() || beam_widths.empty()) throw ConfigError("empty tuning grid");
  for (double a : alphas) {
    if (!std::isfinite(a)) throw ConfigError("non-finite alpha in grid");
  }
  for (int k : beam_widths) {
    if (k < 1) throw ConfigError("beam widths must be >= 1");
  }
  if (!is_known_objective(objective)) {
    throw ConfigError("unknown tuning objective '" + objective + "'");
  }
  if (!(subset_fraction > 0.0 && subset_fraction <= 1.0)) {
    throw ConfigError("subset fraction must be in (0, 1]");
  }
}

std::vector<std::size_t> select_subset(std::size_t n, double fraction,
                                       std::uint64_t seed) {
  if (n == 0) throw DataError("cannot tune on an empty dataset");
  auto k = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(bounded(rng, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::size_t> rank_cells(std::span<const GridCell> cells) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!cells[i].failed()) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const auto& a = cells[x];
    const auto& b = cells[y];
    if (*a.objective != *b.objective) return *a.objective > *b.objective;
    if (a.beam_width != b.beam_width) return a.beam_width < b.beam_width;
    if (std::fabs(a.alpha) != std::fabs(b.alpha)) {
      return std::fabs(a.alpha) < std::fabs(b.alpha);
    }
    return a.alpha < b.alpha;
  });
  return order;
}

CellJournal::CellJournal(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      GridCell cell;
      cell.alpha = j.at("alpha").get<double>();
      cell.beam_width = j.at("beam_width").get<int>();
      if (!j.at("objective").is_null()) cell.objective = j["objective"].get<double>();
      cell.error = j.value("error", std::string{});
      done_.push_back(std::move(cell));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path_ + ":" + std::to_string(line_no) +
                      ": malformed journal entry: " + e.what());
    }
  }
}

std::optional<GridCell> CellJournal::find(double alpha, int beam_width) const {
  std::lock_guard lock(mutex_);
  for (const auto& c : done_) {
    if (same_alpha(c.alpha, alpha) && c.beam_width == beam_width) return c;
  }
  return std::nullopt;
}

void CellJournal::record(const GridCell& cell) {
  std::lock_guard lock(mutex_);
  nlohmann::ordered_json j;
  j["alpha"] = cell.alpha;
  j["beam_width"] = cell.beam_width;
  j["objective"] = cell.objective ? nlohmann::ordered_json(*cell.objective)
                                  : nlohmann::ordered_json(nullptr);
  j["error"] = cell.error;
  std::ofstream out(path_, std::ios::app);
  out << j.dump() << '\n';
  if (!out) throw DataError("cannot append to journal " + path_);
  done_.push_back(cell);
}

GridResult grid_search(const GridSpec& spec, std::size_t dataset_size,
                       const CellEvaluator& evaluate, bool parallel,
                       CellJournal* journal) {
  spec.validate();
  GridResult result;
  result.objective = spec.objective;
  result.subset = select_subset(dataset_size, spec.subset_fraction, spec.seed);
  for (double a : spec.alphas) {
    for (int k : spec.beam_widths) result.cells.push_back({a, k, std::nullopt, {}});
  }

  const auto run_cell = [&](GridCell& cell) {
    if (journal) {
      if (auto done = journal->find(cell.alpha, cell.beam_width)) {
        cell = *done;
        return;
      }
    }
    try {
      cell.objective = evaluate(cell.alpha, cell.beam_width, result.subset);
      if (!std::isfinite(*cell.objective)) {
        cell.objective.reset();
        cell.error = "objective is not finite";
      }
    } catch (const std::exception& e) {
      cell.objective.reset();
      cell.error = e.what();
    }
    if (journal) journal->record(cell);
  };

  const auto n = static_cast<std::ptrdiff_t>(result.cells.size());
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      run_cell(result.cells[static_cast<std::size_t>(i)]);
    }
  } else {
    for (auto& cell : result.cells) run_cell(cell);
  }
  result.ranking = rank_cells(result.cells);
  return result;
}

std::string grid_to_csv(const GridResult& result) {
  std::vector<std::size_t> rank_of(result.cells.size(), 0);
  for (std::size_t r = 0; r < result.ranking.size(); ++r) {
    rank_of[result.ranking[r]] = r + 1;
  }
  std::ostringstream out;
  out << "alpha,beam_width," << result.objective << ",status,rank\n";
  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    const auto& c = result.cells[i];
    out << format_double(c.alpha) << ',' << c.beam_width << ','
        << (c.objective ? format_double(*c.objective) : std::string{}) << ','
        << (c.failed() ? "failed" : "ok") << ',';
    if (rank_of[i]) out << rank_of[i];
    out << '\n';
  }
  return out.str();
}

std::string grid_to_json(const GridResult& result) {
  std::vector<std::size_t> rank_of(result.cells.size(), 0);
  for (std::size_t r = 0; r < result.ranking.size(); ++r) {
    rank_of[result.ranking[r]] = r + 1;
  }
  nlohmann::ordered_json j;
  j["objective"] = result.objective;
  j["subset"] = result.subset;
  auto cells = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    const auto& c = result.cells[i];
    nlohmann::ordered_json cell;
    cell["alpha"] = c.alpha;
    cell["beam_width"] = c.beam_width;
    cell["objective"] = c.objective ? nlohmann::ordered_json(*c.objective)
                                    : nlohmann::ordered_json(nullptr);
    cell["status"] = c.failed() ? "failed" : "ok";
    cell["error"] = c.error;
    cell["rank"] = rank_of[i] ? nlohmann::ordered_json(rank_of[i])
                              : nlohmann::ordered_json(nullptr);
    cells.push_back(std::move(cell));
  }
  j["cells"] = std::move(cells);
  return j.dump(2);
}

CellEvaluator make_decode_evaluator(const TokenScorer& backend,
                                    const TextRenderer& renderer,
                                    std::span<const TuningExample> examples,
                                    DecodeConfig base, std::string objective,
                                    ExternalScorer external) {
  if (!is_known_objective(objective)) {
    throw ConfigError("unknown tuning objective '" + objective + "'");
  }
  if (objective == "bs_prob" && !external) {
    throw ConfigError("the bs_prob objective needs external BARTScores");
  }
  return [&backend, &renderer, examples, base = std::move(base),
          objective = std::move(objective), external = std::move(external)](
             double alpha, int beam_width, std::span<const std::size_t> subset) {
    DecodeConfig cfg = base;
    cfg.promotion.alpha = alpha;
    cfg.beam_width = beam_width;
    std::vector<DecodeJob> jobs;
    jobs.reserve(subset.size());
    for (std::size_t i : subset) jobs.push_back(examples[i].job);
    const auto items = batch_decode(backend, renderer, jobs, cfg);
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t s = 0; s < items.size(); ++s) {
      const auto& item = items[s];
      if (!item.error.empty()) throw BackendError(item.id + ": " + item.error);
      const TuningExample& ex = examples[subset[s]];
      const std::string& pred = item.result->best.text;
      if (objective == "hit_rate") {
        if (item.stats.hit_rate) {
          sum += *item.stats.hit_rate;
          ++counted;
        }
        continue;
      }
      if (objective == "bs_prob") {
        sum += bartscore_prob(external(ex, alpha, beam_width, pred));
      } else {
        const RougeKind kind = objective == "rouge1"   ? RougeKind::rouge1
                               : objective == "rouge2" ? RougeKind::rouge2
                                                       : RougeKind::rougeL;
        sum += rouge(pred, ex.reference, kind).f1;
      }
      ++counted;
    }
    return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
  };
}

}  // namespace bloop
