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
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bloop/text.hpp"
#include "bloop/transform.hpp"

namespace bloop {

/// Scores returned by a backend for one context.
///
/// Dense results carry an exact score for every id. Sparse results carry
/// exact scores only for `exact_ids`; every other entry holds the backend's
/// floor value and must not be selected.
struct ScoreResult {
  LogitVector logits;
  std::optional<std::vector<TokenId>> exact_ids;

  bool dense() const { return !exact_ids.has_value(); }
};

/// Next-token scoring backend.
///
/// For a fixed context, repeated calls must return identical scores.
/// `must_score` lists ids the caller needs exact scores for (the current
/// follower set); dense backends may ignore it.
class TokenScorer {
 public:
  virtual ~TokenScorer() = default;

  virtual std::size_t vocab_size() const = 0;
  virtual std::size_t context_limit() const = 0;
  virtual bool concurrency_safe() const = 0;
  virtual ScoreResult score(std::span<const TokenId> context,
                            std::span<const TokenId> must_score) const = 0;
};

/// Dense scores for `context`; throws DataError when the context exceeds the
/// backend's declared limit.
LogitVector score(const TokenScorer& backend, std::span<const TokenId> context);

/// Throws DataError (asking for truncation) if `context_length` is over the
/// backend's limit.
void check_context_length(const TokenScorer& backend,
                          std::size_t context_length);

/// Renders generated ids back to text for stop-string detection and output.
class TextRenderer {
 public:
  virtual ~TextRenderer() = default;
  virtual std::string render(std::span<const TokenId> ids) const = 0;
};

class VocabularyRenderer final : public TextRenderer {
 public:
  explicit VocabularyRenderer(const Vocabulary& vocab) : vocab_(vocab) {}
  std::string render(std::span<const TokenId> ids) const override {
    return detokenize(ids, vocab_);
  }

 private:
  const Vocabulary& vocab_;
};

/// Additive-smoothed n-gram language model.
///
/// Conditional distributions use the longest context suffix seen in
/// training, down to the unigram distribution:
///   P(w | h) = (c(h, w) + delta) / (c(h) + delta * |V|).
/// Scores are natural-log probabilities. Immutable after training.
class NgramLM final : public TokenScorer {
 public:
  static constexpr std::size_t kDefaultContextLimit = 4096;

  /// Counts n-grams within each document's flattened token stream.
  /// Throws DataError for an empty corpus and std::invalid_argument for
  /// order < 1, delta <= 0, or an empty vocabulary.
  static NgramLM train(std::span<const Document> corpus,
                       std::size_t vocab_size, int order = 3,
                       double delta = 0.1,
                       std::size_t context_limit = kDefaultContextLimit);
  static NgramLM train_sequences(std::span<const std::vector<TokenId>> corpus,
                                 std::size_t vocab_size, int order = 3,
                                 double delta = 0.1,
                                 std::size_t context_limit =
                                     kDefaultContextLimit);

  std::size_t vocab_size() const override { return vocab_size_; }
  std::size_t context_limit() const override { return context_limit_; }
  bool concurrency_safe() const override { return true; }
  ScoreResult score(std::span<const TokenId> context,
                    std::span<const TokenId> must_score) const override;

  /// Full log-distribution for `context` (no length check).
  LogitVector log_distribution(std::span<const TokenId> context) const;
  double log_prob(std::span<const TokenId> context, TokenId token) const;

  int order() const { return order_; }
  double delta() const { return delta_; }

 private:
  struct ContextCounts {
    std::uint64_t total = 0;
    std::unordered_map<TokenId, std::uint64_t> next;
  };
  struct ContextHash {
    std::size_t operator()(const std::vector<TokenId>& ids) const;
  };
  using Table =
      std::unordered_map<std::vector<TokenId>, ContextCounts, ContextHash>;

  const ContextCounts& counts_for(std::span<const TokenId> context) const;

  int order_ = 3;
  double delta_ = 0.1;
  std::size_t vocab_size_ = 0;
  std::size_t context_limit_ = kDefaultContextLimit;
  // tables_[m] holds contexts of length m; tables_[0] has the single empty
  // context (unigram counts).
  std::vector<Table> tables_;
};

}  // namespace bloop
