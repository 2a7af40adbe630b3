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

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "bloop/error.hpp"
#include "bloop/kernels.hpp"
#include "bloop/transform.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace bloop;

namespace {

bool bitwise_equal(const LogitVector& a, const LogitVector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

BigramCache cache_of(std::vector<BigramEntry> entries) {
  return BigramCache::from_entries(std::move(entries));
}

}  // namespace

TEST_SUITE("transform") {

TEST_CASE("promotion shifts the argmax onto a follower") {
  // vocab {a, b, c}; prev = 3 has follower a
  const auto cache = cache_of({{3, 0, 1}});
  PromotionConfig cfg;
  cfg.alpha = 2.0;
  const auto out = promote({0.0, 1.0, 0.5}, 3, cache, cfg, 2);
  CHECK(out.logits == LogitVector{2.0, 1.0, 0.5});
  CHECK(out.raw_argmax == 1);
  CHECK(out.final_argmax == 0);
  CHECK(out.applied);
  CHECK(out.argmax_changed);
  CHECK(out.cache_hit);
}

TEST_CASE("newline-bearing argmax is exempt") {
  const auto cache = cache_of({{3, 0, 1}});
  PromotionConfig cfg;
  cfg.alpha = 2.0;
  cfg.stop_set = StopSet({1});
  const auto out = promote({0.0, 1.0, 0.5}, 3, cache, cfg, 2);
  CHECK(out.logits == LogitVector{0.0, 1.0, 0.5});
  CHECK_FALSE(out.applied);
  CHECK_FALSE(out.argmax_changed);
  CHECK(out.cache_hit);
}

TEST_CASE("frequency weighting multiplies alpha by the bigram count") {
  const auto cache = cache_of({{7, 0, 3}, {7, 2, 1}});
  PromotionConfig cfg;
  cfg.alpha = 1.0;
  cfg.variant = PromotionVariant::frequency_weighted;
  const auto out = promote({0.0, 0.0, 0.0}, 7, cache, cfg, 5);
  CHECK(out.logits == LogitVector{3.0, 0.0, 1.0});
}

TEST_CASE("alpha zero leaves logits untouched") {
  const auto cache = cache_of({{0, 1, 1}});
  PromotionConfig cfg;
  const LogitVector in{0.25, 0.5, 0.125};
  const auto out = promote(in, 0, cache, cfg, 2);
  CHECK(bitwise_equal(out.logits, in));
  CHECK_FALSE(out.argmax_changed);
  CHECK_FALSE(out.applied);
  CHECK(out.cache_hit);
}

TEST_CASE("negative alpha demotes followers") {
  const auto cache = cache_of({{0, 1, 1}});
  PromotionConfig cfg;
  cfg.alpha = -1.0;
  const auto out = promote({0.0, 0.5}, 0, cache, cfg, 2);
  CHECK(out.logits == LogitVector{0.0, -0.5});
  CHECK(out.final_argmax == 0);
  CHECK(out.argmax_changed);
}

TEST_CASE("first step is exempt unless configured otherwise") {
  const auto cache = cache_of({{0, 1, 1}});
  PromotionConfig cfg;
  cfg.alpha = 4.0;
  const auto first = promote({1.0, 0.0}, std::nullopt, cache, cfg, 1);
  CHECK_FALSE(first.looked_up);
  CHECK_FALSE(first.applied);
  CHECK_THROWS_AS(promote({1.0, 0.0}, 0, cache, cfg, 1), std::invalid_argument);
  CHECK_THROWS_AS(promote({1.0, 0.0}, std::nullopt, cache, cfg, 2), std::invalid_argument);
  CHECK_THROWS_AS(promote({1.0, 0.0}, std::nullopt, cache, cfg, 0), std::invalid_argument);
}

TEST_CASE("disabled promotion still records the lookup") {
  const auto cache = cache_of({{0, 1, 1}});
  PromotionConfig cfg;
  cfg.alpha = 4.0;
  cfg.enabled = false;
  LookupStats stats;
  const auto out = promote({1.0, 0.0}, 0, cache, cfg, 2, &stats);
  CHECK(out.looked_up);
  CHECK(out.cache_hit);
  CHECK_FALSE(out.applied);
  CHECK(out.logits == LogitVector{1.0, 0.0});
  CHECK(stats.hits == 1);
}

TEST_CASE("non-finite logits are rejected") {
  const auto cache = cache_of({});
  PromotionConfig cfg;
  CHECK_THROWS_AS(promote({0.0, std::numeric_limits<double>::infinity()}, 0, cache, cfg, 2),
                  DataError);
  CHECK_THROWS_AS(promote({std::nan("")}, std::nullopt, cache, cfg, 1), DataError);
}

TEST_CASE("followers outside the vocabulary are ignored") {
  const auto cache = cache_of({{0, 1, 1}, {0, 9, 1}});
  PromotionConfig cfg;
  cfg.alpha = 1.0;
  const auto out = promote({0.0, 0.0}, 0, cache, cfg, 2);
  CHECK(out.logits == LogitVector{0.0, 1.0});
}

TEST_CASE("property: matches the direct definition and preserves outside order") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto vocab = static_cast<std::size_t>(fixtures::uniform(rng, 1, 24));
    const auto doc = fixtures::random_document(rng, static_cast<TokenId>(vocab), 4, 8);
    const auto cache = BigramCache::build(doc);
    const auto counts = oracle::bigrams(doc);
    const auto raw = fixtures::grid_logits(rng, vocab);
    const int step = fixtures::uniform(rng, 1, 4);
    std::optional<TokenId> prev;
    if (step > 1) prev = fixtures::uniform(rng, 0, static_cast<int>(vocab) - 1);

    PromotionConfig cfg;
    cfg.alpha = fixtures::grid_value(rng, -8.0, 8.0);
    cfg.variant = fixtures::uniform(rng, 0, 1) ? PromotionVariant::frequency_weighted
                                               : PromotionVariant::plain;
    std::vector<TokenId> stop;
    if (fixtures::uniform(rng, 0, 2) == 0) stop.push_back(fixtures::uniform(rng, 0, static_cast<int>(vocab) - 1));
    cfg.stop_set = StopSet(stop);
    cfg.first_step_exempt = fixtures::uniform(rng, 0, 3) != 0;

    oracle::PromoteSpec spec;
    spec.alpha = cfg.alpha;
    spec.frequency_weighted = cfg.variant == PromotionVariant::frequency_weighted;
    spec.stop = {stop.begin(), stop.end()};
    spec.first_step_exempt = cfg.first_step_exempt;

    const auto out = promote(raw, prev, cache, cfg, step);
    const auto expected = oracle::promote(raw, prev, counts, spec, step);
    REQUIRE(bitwise_equal(out.logits, expected));
    CHECK(out.final_argmax == oracle::argmax(expected));
    CHECK(out.argmax_changed == (oracle::argmax(expected) != oracle::argmax(raw)));

    if (!prev) continue;
    const auto in_b = oracle::followers(counts, *prev);
    for (std::size_t x = 0; x < vocab; ++x) {
      for (std::size_t y = 0; y < vocab; ++y) {
        if (in_b.count(static_cast<TokenId>(x)) || in_b.count(static_cast<TokenId>(y))) continue;
        CHECK((raw[x] < raw[y]) == (out.logits[x] < out.logits[y]));
      }
    }
  }
}

}  // TEST_SUITE
