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

#include "bloop/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bloop/error.hpp"

namespace bloop {

void check_context_length(const TokenScorer& backend,
                          std::size_t context_length) {
  if (context_length > backend.context_limit()) {
    throw DataError("context of " + std::to_string(context_length) +
                    " tokens exceeds the backend limit of " +
                    std::to_string(backend.context_limit()) +
                    "; truncate the source (see --context-budget)");
  }
}

LogitVector score(const TokenScorer& backend,
                  std::span<const TokenId> context) {
  check_context_length(backend, context.size());
  return backend.score(context, {}).logits;
}

std::size_t NgramLM::ContextHash::operator()(
    const std::vector<TokenId>& ids) const {
  std::uint64_t h = 1469598103934665603ull;
  for (TokenId id : ids) {
    h ^= static_cast<std::uint32_t>(id);
    h *= 1099511628211ull;
  }
  return static_cast<std::size_t>(h);
}

NgramLM NgramLM::train(std::span<const Document> corpus,
                       std::size_t vocab_size, int order, double delta,
                       std::size_t context_limit) {
  std::vector<std::vector<TokenId>> sequences;
  sequences.reserve(corpus.size());
  for (const auto& doc : corpus) sequences.push_back(doc.flatten());
  return train_sequences(sequences, vocab_size, order, delta, context_limit);
}

NgramLM NgramLM::train_sequences(std::span<const std::vector<TokenId>> corpus,
                                 std::size_t vocab_size, int order,
                                 double delta, std::size_t context_limit) {
  if (order < 1) throw std::invalid_argument("n-gram order must be >= 1");
  if (!(delta > 0.0)) {
    throw std::invalid_argument("smoothing delta must be > 0");
  }
  if (vocab_size == 0) throw std::invalid_argument("empty vocabulary");

  NgramLM lm;
  lm.order_ = order;
  lm.delta_ = delta;
  lm.vocab_size_ = vocab_size;
  lm.context_limit_ = context_limit;
  lm.tables_.resize(static_cast<std::size_t>(order));

  std::uint64_t tokens = 0;
  for (const auto& seq : corpus) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const TokenId w = seq[i];
      if (w < 0 || static_cast<std::size_t>(w) >= vocab_size) {
        throw DataError("training token id out of range: " + std::to_string(w));
      }
      ++tokens;
      for (std::size_t m = 0; m < lm.tables_.size() && m <= i; ++m) {
        std::vector<TokenId> ctx(seq.begin() + static_cast<std::ptrdiff_t>(i - m),
                                 seq.begin() + static_cast<std::ptrdiff_t>(i));
        auto& counts = lm.tables_[m][std::move(ctx)];
        ++counts.total;
        ++counts.next[w];
      }
    }
  }
  if (tokens == 0) throw DataError("cannot train an n-gram model on an empty corpus");
  return lm;
}

const NgramLM::ContextCounts& NgramLM::counts_for(
    std::span<const TokenId> context) const {
  const std::size_t longest =
      std::min(context.size(), tables_.size() - 1);
  for (std::size_t m = longest; m > 0; --m) {
    std::vector<TokenId> key(context.end() - static_cast<std::ptrdiff_t>(m),
                             context.end());
    auto it = tables_[m].find(key);
    if (it != tables_[m].end()) return it->second;
  }
  return tables_[0].begin()->second;
}

LogitVector NgramLM::log_distribution(std::span<const TokenId> context) const {
  const ContextCounts& counts = counts_for(context);
  const double denom =
      static_cast<double>(counts.total) + delta_ * static_cast<double>(vocab_size_);
  LogitVector out(vocab_size_, std::log(delta_ / denom));
  for (const auto& [w, c] : counts.next) {
    out[static_cast<std::size_t>(w)] =
        std::log((static_cast<double>(c) + delta_) / denom);
  }
  return out;
}

double NgramLM::log_prob(std::span<const TokenId> context, TokenId token) const {
  const ContextCounts& counts = counts_for(context);
  const double denom =
      static_cast<double>(counts.total) + delta_ * static_cast<double>(vocab_size_);
  auto it = counts.next.find(token);
  const double c = it == counts.next.end() ? 0.0 : static_cast<double>(it->second);
  return std::log((c + delta_) / denom);
}

ScoreResult NgramLM::score(std::span<const TokenId> context,
                           std::span<const TokenId>) const {
  check_context_length(*this, context.size());
  return ScoreResult{log_distribution(context), std::nullopt};
}

}  // namespace bloop
