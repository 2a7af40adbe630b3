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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bloop/text.hpp"

namespace bloop {

/// Per-session lookup instrumentation. A hit is a lookup that returned a
/// non-empty follower set.
struct LookupStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;

  std::uint64_t total() const { return hits + misses; }
  std::optional<double> hit_rate() const {
    if (total() == 0) return std::nullopt;
    return static_cast<double>(hits) / static_cast<double>(total());
  }
  LookupStats& operator+=(const LookupStats& other) {
    hits += other.hits;
    misses += other.misses;
    return *this;
  }
};

struct BigramEntry {
  TokenId prev = 0;
  TokenId next = 0;
  std::uint32_t count = 0;

  friend bool operator==(const BigramEntry&, const BigramEntry&) = default;
};

/// Intra-sentence bigram index of one source document.
///
/// Followers of each token are stored contiguously, deduplicated and sorted
/// ascending, and addressed through a hash index so lookup cost does not
/// depend on document length. A second hash over packed (prev, next) keys
/// gives O(1) containment and the occurrence counts used by the
/// frequency-weighted promotion. Immutable after build.
class BigramCache {
 public:
  BigramCache() = default;

  static BigramCache build(const Document& doc, std::string source_doc_id = {});
  /// Entries need not be sorted; duplicate (prev, next) keys are rejected.
  static BigramCache from_entries(std::vector<BigramEntry> entries,
                                  std::string source_doc_id = {});

  std::span<const TokenId> followers(TokenId prev) const;
  std::span<const TokenId> lookup(TokenId prev, LookupStats& stats) const {
    auto result = followers(prev);
    ++(result.empty() ? stats.misses : stats.hits);
    return result;
  }

  bool contains(TokenId prev, TokenId next) const {
    return counts_.find(pack(prev, next)) != counts_.end();
  }
  std::uint32_t count(TokenId prev, TokenId next) const;

  std::size_t size() const { return counts_.size(); }
  bool empty() const { return counts_.empty(); }
  const std::string& source_doc_id() const { return source_doc_id_; }

  /// All (prev, next, count) triples, sorted lexicographically.
  std::vector<BigramEntry> entries() const;

  // {"source_doc_id": "...", "bigrams": [[prev, next, count], ...]}
  std::string to_json() const;
  static BigramCache from_json(std::string_view json);

  // Little-endian: "BLBC", u32 version, u32 id length, id bytes, u64 entry
  // count, then (u32 prev, u32 next, u32 count) per entry.
  void write_binary(std::ostream& out) const;
  static BigramCache read_binary(std::istream& in);

 private:
  struct Range {
    std::uint32_t offset = 0;
    std::uint32_t length = 0;
  };

  static std::uint64_t pack(TokenId prev, TokenId next) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(prev)) << 32) |
           static_cast<std::uint32_t>(next);
  }

  std::unordered_map<TokenId, Range> index_;
  std::vector<TokenId> followers_;
  std::unordered_map<std::uint64_t, std::uint32_t> counts_;
  std::string source_doc_id_;
};

}  // namespace bloop
