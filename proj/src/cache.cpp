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

#include "bloop/cache.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <ostream>
#include <tuple>

#include <json.hpp>

#include "bloop/error.hpp"

namespace bloop {

namespace {

constexpr std::array<char, 4> kMagic = {'B', 'L', 'B', 'C'};
constexpr std::uint32_t kBinaryVersion = 1;

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) &
                                 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<char, sizeof(T)> bytes{};
  if (!in.read(bytes.data(), bytes.size())) {
    throw DataError("truncated binary bigram cache");
  }
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i]))
             << (8 * i);
  }
  return static_cast<T>(value);
}

}  // namespace

BigramCache BigramCache::build(const Document& doc,
                               std::string source_doc_id) {
  std::unordered_map<std::uint64_t, std::uint32_t> counts;
  for (const auto& sentence : doc.sentences) {
    for (std::size_t j = 0; j + 1 < sentence.size(); ++j) {
      ++counts[pack(sentence[j], sentence[j + 1])];
    }
  }
  std::vector<BigramEntry> entries;
  entries.reserve(counts.size());
  for (const auto& [key, count] : counts) {
    entries.push_back({static_cast<TokenId>(key >> 32),
                       static_cast<TokenId>(key & 0xFFFFFFFFu), count});
  }
  return from_entries(std::move(entries), std::move(source_doc_id));
}

BigramCache BigramCache::from_entries(std::vector<BigramEntry> entries,
                                      std::string source_doc_id) {
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return std::tie(a.prev, a.next) < std::tie(b.prev, b.next);
  });
  BigramCache cache;
  cache.source_doc_id_ = std::move(source_doc_id);
  cache.followers_.reserve(entries.size());
  cache.counts_.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.count == 0) throw DataError("bigram entry with zero count");
    if (i > 0 && entries[i - 1].prev == e.prev && entries[i - 1].next == e.next) {
      throw DataError("duplicate bigram entry (" + std::to_string(e.prev) +
                      ", " + std::to_string(e.next) + ")");
    }
    auto [it, inserted] = cache.index_.try_emplace(
        e.prev, Range{static_cast<std::uint32_t>(cache.followers_.size()), 0});
    ++it->second.length;
    cache.followers_.push_back(e.next);
    cache.counts_.emplace(pack(e.prev, e.next), e.count);
  }
  return cache;
}

std::span<const TokenId> BigramCache::followers(TokenId prev) const {
  auto it = index_.find(prev);
  if (it == index_.end()) return {};
  return std::span<const TokenId>(followers_).subspan(it->second.offset,
                                                      it->second.length);
}

std::uint32_t BigramCache::count(TokenId prev, TokenId next) const {
  auto it = counts_.find(pack(prev, next));
  return it == counts_.end() ? 0 : it->second;
}

std::vector<BigramEntry> BigramCache::entries() const {
  std::vector<BigramEntry> out;
  out.reserve(counts_.size());
  std::vector<TokenId> keys;
  keys.reserve(index_.size());
  for (const auto& [prev, range] : index_) keys.push_back(prev);
  std::sort(keys.begin(), keys.end());
  for (TokenId prev : keys) {
    for (TokenId next : followers(prev)) {
      out.push_back({prev, next, count(prev, next)});
    }
  }
  return out;
}

std::string BigramCache::to_json() const {
  nlohmann::ordered_json j;
  j["source_doc_id"] = source_doc_id_;
  auto bigrams = nlohmann::ordered_json::array();
  for (const auto& e : entries()) bigrams.push_back({e.prev, e.next, e.count});
  j["bigrams"] = std::move(bigrams);
  return j.dump();
}

BigramCache BigramCache::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    std::vector<BigramEntry> entries;
    for (const auto& triple : j.at("bigrams")) {
      if (!triple.is_array() || triple.size() != 3) {
        throw DataError("bigram entry must be a [prev, next, count] triple");
      }
      entries.push_back({triple[0].get<TokenId>(), triple[1].get<TokenId>(),
                         triple[2].get<std::uint32_t>()});
    }
    return from_entries(std::move(entries),
                        j.value("source_doc_id", std::string{}));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed bigram cache JSON: ") + e.what());
  }
}

void BigramCache::write_binary(std::ostream& out) const {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kBinaryVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(source_doc_id_.size()));
  out.write(source_doc_id_.data(),
            static_cast<std::streamsize>(source_doc_id_.size()));
  const auto all = entries();
  put_le<std::uint64_t>(out, all.size());
  for (const auto& e : all) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.prev));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.next));
    put_le<std::uint32_t>(out, e.count);
  }
}

BigramCache BigramCache::read_binary(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw DataError("not a binary bigram cache (bad magic)");
  }
  if (get_le<std::uint32_t>(in) != kBinaryVersion) {
    throw DataError("unsupported binary bigram cache version");
  }
  std::string id(get_le<std::uint32_t>(in), '\0');
  if (!in.read(id.data(), static_cast<std::streamsize>(id.size()))) {
    throw DataError("truncated binary bigram cache");
  }
  const auto n = get_le<std::uint64_t>(in);
  std::vector<BigramEntry> entries;
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto prev = static_cast<TokenId>(get_le<std::uint32_t>(in));
    const auto next = static_cast<TokenId>(get_le<std::uint32_t>(in));
    entries.push_back({prev, next, get_le<std::uint32_t>(in)});
  }
  return from_entries(std::move(entries), std::move(id));
}

}  // namespace bloop
