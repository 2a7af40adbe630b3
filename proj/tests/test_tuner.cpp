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

#include <doctest.h>

#include <atomic>
#include <set>

#include <json.hpp>

#include "bloop/error.hpp"
#include "bloop/tuner.hpp"
#include "support/fixtures.hpp"
#include "support/planted.hpp"

using namespace bloop;

namespace {

// Smooth bump peaking at alpha = 1, beam width 3.
double bump(double alpha, int k, std::span<const std::size_t> subset) {
  return 10.0 - (alpha - 1.0) * (alpha - 1.0) - (k - 3) * (k - 3) +
         static_cast<double>(subset.size()) * 1e-6;
}

GridSpec small_grid() {
  GridSpec spec;
  spec.alphas = {-2, -1, 0, 1, 2};
  spec.beam_widths = {1, 2, 3, 4};
  return spec;
}

}  // namespace

TEST_SUITE("tuner") {

TEST_CASE("default grid") {
  const auto spec = GridSpec::defaults();
  CHECK(spec.alphas.size() == 11);
  CHECK(spec.alphas.front() == -8.0);
  CHECK(spec.alphas.back() == 2.0);
  CHECK(spec.beam_widths.size() == 20);
  CHECK(spec.subset_fraction == 0.10);
  CHECK(spec.objective == "rougeL");
  CHECK_NOTHROW(spec.validate());
}

TEST_CASE("grid validation") {
  auto spec = small_grid();
  spec.objective = "bleu";
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = small_grid();
  spec.beam_widths = {0};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = small_grid();
  spec.alphas.clear();
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = small_grid();
  spec.subset_fraction = 0.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.subset_fraction = 1.5;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("subset selection") {
  const auto a = select_subset(1000, 0.10, 7);
  CHECK(a.size() == 100);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 100);
  CHECK(a.back() < 1000);
  CHECK(select_subset(1000, 0.10, 7) == a);
  CHECK(select_subset(1000, 0.10, 8) != a);
  CHECK(select_subset(7, 0.10, 1).size() == 1);
  CHECK(select_subset(10, 0.3, 1).size() == 3);
  const auto all = select_subset(5, 1.0, 3);
  CHECK(all == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK_THROWS_AS(select_subset(0, 0.5, 1), DataError);
}

TEST_CASE("ranking tie-breaks") {
  std::vector<GridCell> cells{
      {-2.0, 3, 0.5, ""}, {2.0, 3, 0.5, ""}, {1.0, 3, 0.5, ""},
      {0.0, 5, 0.5, ""},  {0.0, 1, 0.4, ""}, {-1.0, 3, 0.5, ""},
      {0.0, 1, std::nullopt, "boom"},
  };
  const auto order = rank_cells(cells);
  // Equal objective: smaller beam first, then |alpha|, then alpha.
  CHECK(order == std::vector<std::size_t>{5, 2, 0, 1, 3, 4});
}

TEST_CASE("grid search finds the bump and is parallel-invariant") {
  auto spec = small_grid();
  const auto serial = grid_search(spec, 50, bump, false);
  const auto parallel = grid_search(spec, 50, bump, true);
  CHECK(serial.cells.size() == 20);
  CHECK(serial.subset.size() == 5);
  const auto& best = serial.cells[serial.ranking.front()];
  CHECK(best.alpha == 1.0);
  CHECK(best.beam_width == 3);
  CHECK(grid_to_csv(serial) == grid_to_csv(parallel));
  CHECK(grid_to_json(serial) == grid_to_json(parallel));
  // alpha-major order
  CHECK(serial.cells[1].alpha == -2.0);
  CHECK(serial.cells[1].beam_width == 2);
  CHECK(serial.cells[4].alpha == -1.0);
}

TEST_CASE("same seed gives the same table byte for byte") {
  auto spec = small_grid();
  spec.seed = 99;
  auto subset_sum = [](double alpha, int k, std::span<const std::size_t> subset) {
    double s = 0;
    for (auto i : subset) s += static_cast<double>(i) * 1e-3;
    return s - alpha * alpha / 7.0 + k / 3.0;
  };
  const auto a = grid_to_csv(grid_search(spec, 333, subset_sum, true));
  const auto b = grid_to_csv(grid_search(spec, 333, subset_sum, true));
  CHECK(a == b);
  spec.seed = 100;
  CHECK(grid_to_csv(grid_search(spec, 333, subset_sum, true)) != a);
}

TEST_CASE("failed cells stay in the table but are not ranked") {
  auto spec = small_grid();
  auto flaky = [](double alpha, int k, std::span<const std::size_t>) -> double {
    if (alpha == 2.0) throw BackendError("peer gone");
    if (k == 4) return std::nan("");
    return alpha + k;
  };
  const auto r = grid_search(spec, 10, flaky, false);
  CHECK(r.cells.size() == 20);
  CHECK(r.ranking.size() == 12);
  for (const auto& c : r.cells) {
    if (c.alpha == 2.0) {
      CHECK(c.failed());
      CHECK(c.error.find("peer gone") != std::string::npos);
    }
  }
  CHECK(r.cells[r.ranking.front()].alpha == 1.0);
  const auto csv = grid_to_csv(r);
  CHECK(csv.find("alpha,beam_width,rougeL,status,rank\n") == 0);
  CHECK(csv.find("2.0,1,,failed,") != std::string::npos);
}

TEST_CASE("single-cell grid") {
  GridSpec spec;
  spec.alphas = {0.5};
  spec.beam_widths = {2};
  const auto r = grid_search(spec, 3, bump, true);
  REQUIRE(r.ranking.size() == 1);
  const auto j = nlohmann::json::parse(grid_to_json(r));
  CHECK(j["cells"].size() == 1);
  CHECK(j["cells"][0]["rank"] == 1);
  CHECK(j["objective"] == "rougeL");
}

TEST_CASE("journal resumes without re-evaluating") {
  fixtures::TempDir dir("tuner");
  const auto path = (dir / "journal.jsonl").string();
  auto spec = small_grid();
  std::atomic<int> calls{0};
  auto counting = [&](double alpha, int k, std::span<const std::size_t> subset) {
    ++calls;
    if (alpha == -2.0 && k == 1) throw DataError("bad cell");
    return bump(alpha, k, subset);
  };
  std::string first;
  {
    CellJournal journal(path);
    first = grid_to_csv(grid_search(spec, 40, counting, true, &journal));
  }
  CHECK(calls == 20);
  CellJournal reopened(path);
  const auto cell = reopened.find(1.0, 3);
  REQUIRE(cell);
  CHECK(*cell->objective == bump(1.0, 3, std::vector<std::size_t>(4)));
  CHECK(reopened.find(-2.0, 1)->failed());
  CHECK(grid_to_csv(grid_search(spec, 40, counting, false, &reopened)) == first);
  CHECK(calls == 20);
  spec.alphas.push_back(3.0);
  grid_search(spec, 40, counting, false, &reopened);
  CHECK(calls == 24);
}

TEST_CASE("planted optimum on the winners grid ranks first") {
  const double alpha = 4.0;
  const int width = 5;
  const auto task = planted::make_task(5, alpha, width);
  const VocabularyRenderer renderer(task.vocab);
  auto spec = planted::winners_grid();
  const auto result = grid_search(
      spec, task.examples.size(),
      make_decode_evaluator(task.lm, renderer, task.examples, task.base, "rougeL"), true);
  REQUIRE(result.cells.size() == 9);
  const auto& top = result.cells[result.ranking.front()];
  CHECK(top.alpha == alpha);
  CHECK(top.beam_width == width);
  CHECK(*top.objective == 1.0);
  // Exhaustive check that the planted cell is the strict maximum.
  for (const auto& c : result.cells) {
    if (c.alpha != alpha || c.beam_width != width) CHECK(*c.objective < 1.0);
  }
}

TEST_CASE("decode evaluator objectives") {
  const auto task = planted::make_task(3, 2.0, 2, 6);
  const VocabularyRenderer renderer(task.vocab);
  const std::vector<std::size_t> all{0, 1, 2, 3, 4, 5};
  CHECK(make_decode_evaluator(task.lm, renderer, task.examples, task.base, "rouge1")(2.0, 2, all) ==
        1.0);
  const double hits =
      make_decode_evaluator(task.lm, renderer, task.examples, task.base, "hit_rate")(2.0, 2, all);
  CHECK(hits >= 0.0);
  CHECK(hits <= 1.0);
  auto constant = [](const TuningExample&, double, int, const std::string&) { return -1.0; };
  CHECK(make_decode_evaluator(task.lm, renderer, task.examples, task.base, "bs_prob",
                              constant)(2.0, 2, all) == doctest::Approx(std::exp(-1.0)));
  CHECK_THROWS_AS(make_decode_evaluator(task.lm, renderer, task.examples, task.base, "bs_prob"),
                  ConfigError);
  CHECK_THROWS_AS(make_decode_evaluator(task.lm, renderer, task.examples, task.base, "meteor"),
                  ConfigError);
}

}  // TEST_SUITE
