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

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "bloop/protocol.hpp"

namespace bloop::fixtures {

/// A finite double drawn uniformly over bit patterns.
inline double random_bits_double(std::mt19937_64& rng) {
  for (;;) {
    const double d = std::bit_cast<double>(rng());
    if (std::isfinite(d)) return d;
  }
}

/// Valid UTF-8 mixing ASCII (controls and quotes included) with multi-byte
/// code points.
inline std::string random_utf8(std::mt19937_64& rng, int max_len) {
  std::string s;
  const int n = std::uniform_int_distribution<int>(0, max_len)(rng);
  for (int i = 0; i < n; ++i) {
    std::uint32_t cp;
    switch (rng() % 4) {
      case 0: cp = static_cast<std::uint32_t>(rng() % 0x20); break;
      case 1: cp = static_cast<std::uint32_t>(0x20 + rng() % 0x5f); break;
      case 2: cp = static_cast<std::uint32_t>(0x80 + rng() % 0x780); break;
      default:
        cp = static_cast<std::uint32_t>(0x800 + rng() % (0x10ffff - 0x800));
        if (cp >= 0xd800 && cp <= 0xdfff) cp = 0x20ac;
    }
    if (cp < 0x80) {
      s.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      s.push_back(static_cast<char>(0xc0 | (cp >> 6)));
      s.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
      s.push_back(static_cast<char>(0xe0 | (cp >> 12)));
      s.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      s.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
      s.push_back(static_cast<char>(0xf0 | (cp >> 18)));
      s.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
      s.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      s.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
  }
  return s;
}

inline std::vector<TokenId> random_ids(std::mt19937_64& rng, int max_len) {
  std::vector<TokenId> ids(rng() % static_cast<std::uint64_t>(max_len + 1));
  for (auto& id : ids) {
    id = rng() % 8 == 0 ? std::bit_cast<TokenId>(static_cast<std::uint32_t>(rng()))
                        : static_cast<TokenId>(rng() % 50000);
  }
  return ids;
}

inline protocol::Frame random_frame(std::mt19937_64& rng) {
  using namespace protocol;
  switch (rng() % 9) {
    case 0:
      return Hello{rng() % 300000, rng() % 1000000, random_ids(rng, 4)};
    case 1:
      return ScoreRequest{random_utf8(rng, 8), random_ids(rng, 40), rng() % 100,
                          random_ids(rng, 6), rng() % 2 == 0};
    case 2: {
      Logits l{random_utf8(rng, 8), {}, random_bits_double(rng)};
      const auto n = rng() % 20;
      for (std::uint64_t i = 0; i < n; ++i) {
        l.entries.emplace_back(static_cast<TokenId>(rng() % 50000), random_bits_double(rng));
      }
      return l;
    }
    case 3: {
      DenseLogits d;
      d.scores.resize(rng() % 40);
      for (auto& x : d.scores) x = random_bits_double(rng);
      return d;
    }
    case 4:
      return Error{random_utf8(rng, 30)};
    case 5:
      return TokenizeRequest{random_utf8(rng, 30), rng() % 2 == 0};
    case 6:
      return Tokens{random_ids(rng, 30)};
    case 7:
      return DetokenizeRequest{random_ids(rng, 30)};
    default:
      return Text{random_utf8(rng, 30)};
  }
}

namespace detail {
inline bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}
}  // namespace detail

/// Equality that also distinguishes -0.0 from 0.0.
inline bool bit_equal(const protocol::Frame& a, const protocol::Frame& b) {
  if (!(a == b)) return false;
  if (const auto* la = std::get_if<protocol::Logits>(&a)) {
    const auto& lb = std::get<protocol::Logits>(b);
    if (!detail::same_bits(la->floor, lb.floor)) return false;
    for (std::size_t i = 0; i < la->entries.size(); ++i) {
      if (!detail::same_bits(la->entries[i].second, lb.entries[i].second)) return false;
    }
  }
  if (const auto* da = std::get_if<protocol::DenseLogits>(&a)) {
    const auto& db = std::get<protocol::DenseLogits>(b);
    for (std::size_t i = 0; i < da->scores.size(); ++i) {
      if (!detail::same_bits(da->scores[i], db.scores[i])) return false;
    }
  }
  return true;
}

}  // namespace bloop::fixtures
