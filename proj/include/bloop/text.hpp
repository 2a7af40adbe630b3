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
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bloop {

using TokenId = std::int32_t;

/// Dense token-id <-> surface-form table.
///
/// Ids are assigned in insertion order and are dense in [0, size()). The
/// newline mask is maintained alongside so the stop set can be derived
/// without re-scanning surface forms.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Builds from an ordered token list. Throws DataError on duplicates.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }

  /// Throws DataError naming the id when out of range.
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view surface) const;
  bool contains(TokenId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < tokens_.size();
  }

  /// Returns the existing id or appends a new one.
  TokenId add(std::string_view surface);

  bool is_newline(TokenId id) const {
    return contains(id) && newline_mask_[static_cast<std::size_t>(id)];
  }
  const std::vector<bool>& newline_mask() const { return newline_mask_; }
  std::vector<TokenId> newline_ids() const;

  /// Designates (adding if needed) the token that frozen-mode tokenization
  /// maps unseen surfaces to.
  TokenId set_unknown(std::string_view surface);
  std::optional<TokenId> unknown_id() const { return unknown_; }

  const std::vector<std::string>& tokens() const { return tokens_; }

  // One token per line, id = line number. Backslash and newline are escaped
  // as "\\" and "\n" so the newline token survives the line format.
  void save(std::ostream& out) const;
  static Vocabulary load(std::istream& in);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  std::vector<bool> newline_mask_;
  std::optional<TokenId> unknown_;
};

/// Sentence-segmented token ids of one input text.
struct Document {
  std::vector<std::vector<TokenId>> sentences;
  std::string raw;

  std::vector<TokenId> flatten() const;
  std::size_t token_count() const;
};

/// Surface token with the byte offset it started at in the input.
struct SurfaceToken {
  std::string text;
  std::size_t offset = 0;
};

// Word-level split on Unicode whitespace. Each of . , ; : ! ? " ' ( ) is its
// own token, and every '\n' is emitted as a "\n" token. Throws DataError on
// invalid UTF-8.
std::vector<SurfaceToken> split_surface(std::string_view text);

// Sentence segmentation over surface tokens. A sentence closes after . ! ?
// when the next input character is whitespace or end of text, and after a
// newline token. Newline tokens that would open a sentence are attached to
// the previous one; leading newlines are dropped.
std::vector<std::vector<SurfaceToken>> segment_sentences(
    std::string_view text);

/// Tokenizes and extends `vocab` with unseen surfaces.
Document tokenize(std::string_view text, Vocabulary& vocab);

/// Tokenizes against a fixed vocabulary. Unseen surfaces map to the unknown
/// id, or raise DataError naming the token and byte offset.
Document tokenize_frozen(std::string_view text, const Vocabulary& vocab);

bool is_punctuation_token(std::string_view surface);

/// Canonical surface: single space between tokens, none before punctuation,
/// none around newline tokens.
std::string detokenize(std::span<const TokenId> ids, const Vocabulary& vocab);

}  // namespace bloop
