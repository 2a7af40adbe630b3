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

#include <random>

#include <json.hpp>

#include "bloop/error.hpp"
#include "bloop/stats.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace bloop;

TEST_SUITE("stats") {

TEST_CASE("uniform shift of six pairs") {
  const std::vector<double> a{1, 2, 3, 4, 5, 6};
  std::vector<double> b = a;
  for (auto& x : b) x += 1;
  const auto r = wilcoxon_signed_rank(a, b);
  CHECK(r.n == 6);
  CHECK(r.exact);
  CHECK(r.p_value == 0.03125);
  CHECK(r.rank_biserial == 1.0);
  CHECK(r.w_minus == 0.0);
  const auto swapped = wilcoxon_signed_rank(b, a);
  CHECK(swapped.p_value == 0.03125);
  CHECK(swapped.rank_biserial == -1.0);
}

TEST_CASE("distinct magnitudes give the textbook tail") {
  // d = 1..6 all positive except rank 1: W+ = 20, P(W+ >= 20) = 2/64.
  const std::vector<double> a(6, 0.0);
  const std::vector<double> b{-1, 2, 3, 4, 5, 6};
  const auto r = wilcoxon_signed_rank(a, b);
  CHECK(r.w_plus == 20.0);
  CHECK(r.w_minus == 1.0);
  CHECK(r.p_value == 4.0 / 64.0);
}

TEST_CASE("exact p-values match sign enumeration up to n = 10") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 400; ++trial) {
    const int n = fixtures::uniform(rng, 5, 10);
    std::vector<double> a(static_cast<std::size_t>(n)), b(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = fixtures::uniform(rng, 0, 4);
      // small integer range forces ties and zero differences
      b[i] = fixtures::uniform(rng, 0, 4) + (trial % 3 == 0 ? 0.5 : 0.0);
    }
    const auto r = wilcoxon_signed_rank(a, b);
    CAPTURE(trial);
    CHECK(r.p_value == doctest::Approx(oracle::wilcoxon_p_enumerated(a, b)).epsilon(1e-12));
    CHECK(r.p_value >= 0.0);
    CHECK(r.p_value <= 1.0);
  }
}

TEST_CASE("all-zero differences are degenerate") {
  const std::vector<double> a{0.1, 0.2, 0.3, 0.4, 0.5};
  const auto r = wilcoxon_signed_rank(a, a);
  CHECK(r.degenerate);
  CHECK(r.p_value == 1.0);
  CHECK(r.rank_biserial == 0.0);
  CHECK(r.n == 0);
}

TEST_CASE("large samples use the normal approximation") {
  std::vector<double> a(80), b(80);
  for (std::size_t i = 0; i < 80; ++i) {
    a[i] = static_cast<double>(i);
    b[i] = a[i] + (i % 4 == 0 ? -1.0 : 1.0) * static_cast<double>(i % 7 + 1);
  }
  const auto r = wilcoxon_signed_rank(a, b);
  CHECK_FALSE(r.exact);
  CHECK(r.p_value > 0.0);
  CHECK(r.p_value < 0.05);
  CHECK(wilcoxon_signed_rank(b, a).p_value == doctest::Approx(r.p_value));
}

TEST_CASE("input validation") {
  const std::vector<double> four{1, 2, 3, 4};
  CHECK_THROWS_AS(wilcoxon_signed_rank(four, four), DataError);
  const std::vector<double> five{1, 2, 3, 4, 5};
  const std::vector<double> six{1, 2, 3, 4, 5, 6};
  CHECK_THROWS_AS(wilcoxon_signed_rank(five, six), DataError);
  std::vector<double> bad = five;
  bad[2] = std::nan("");
  CHECK_THROWS_AS(wilcoxon_signed_rank(five, bad), DataError);
}

TEST_CASE("average ranks") {
  const std::vector<double> v{3, 1, 3, 2};
  CHECK(average_ranks(v) == std::vector<double>{3.5, 1, 3.5, 2});
}

TEST_CASE("benjamini-hochberg hand fixtures") {
  // Sorted: 0.01 * 3/1, 0.03 * 3/2, 0.04 * 3/3 = 0.03, 0.045, 0.04; the
  // step-up minimum pulls 0.045 down to 0.04.
  const std::vector<double> p{0.01, 0.04, 0.03};
  const auto adj = benjamini_hochberg(p);
  CHECK(adj[0] == doctest::Approx(0.03).epsilon(1e-15));
  CHECK(adj[1] == doctest::Approx(0.04).epsilon(1e-15));
  CHECK(adj[2] == doctest::Approx(0.04).epsilon(1e-15));

  const std::vector<double> q{0.2, 0.01, 0.9};
  const auto adj2 = benjamini_hochberg(q);
  CHECK(adj2[0] == doctest::Approx(0.3));
  CHECK(adj2[1] == doctest::Approx(0.03));
  CHECK(adj2[2] == doctest::Approx(0.9));

  CHECK(benjamini_hochberg(std::vector<double>{0.6, 0.7}) == std::vector<double>{0.7, 0.7});
  CHECK(benjamini_hochberg(std::vector<double>{}).empty());
  CHECK_THROWS_AS(benjamini_hochberg(std::vector<double>{1.5}), DataError);
}

TEST_CASE("benjamini-hochberg properties") {
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> p(static_cast<std::size_t>(fixtures::uniform(rng, 1, 12)));
    for (auto& x : p) x = unit(rng);
    const auto adj = benjamini_hochberg(p);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(adj[i] >= p[i]);
      CHECK(adj[i] <= 1.0);
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[i] <= p[j]) CHECK(adj[i] <= adj[j]);
      }
    }
  }
}

TEST_CASE("families are adjusted independently") {
  const std::vector<double> a{1, 2, 3, 4, 5, 6};
  const std::vector<double> up{2, 3, 4, 5, 6, 7};
  const std::vector<double> mixed{2, 1, 4, 3, 6, 5};
  std::vector<PairedSeries> series{{"x", "f", a, up}, {"y", "f", a, mixed}, {"z", "g", a, up}};
  const auto rows = paired_significance(series);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].test.p_value == 0.03125);
  CHECK(rows[1].test.p_value == 1.0);
  CHECK(rows[0].fdr_adjusted == 0.0625);
  CHECK(rows[1].fdr_adjusted == 1.0);
  CHECK(rows[2].fdr_adjusted == 0.03125);
  const auto j = nlohmann::json::parse(significance_to_json(rows));
  CHECK(j["tests"].size() == 3);
  CHECK(j["tests"][0]["metric"] == "x");
  CHECK(j["tests"][0]["rank_biserial"] == 1.0);
}

}  // TEST_SUITE
