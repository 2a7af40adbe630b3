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
#include <string>
#include <string_view>
#include <vector>

#include "bloop/protocol.hpp"

namespace bloop::protocol {

/// Deterministic stand-in peer for protocol testing.
///
/// Scores depend only on (context length, token id), so responses are fully
/// reproducible. Surface forms: id 0 is "\n", id 1 is ".", every other id k
/// is "w<k>". Unknown words hash onto ids >= 2. A chat-wrapped tokenize
/// prepends the ids of "w2 w3" as a fixed template header.
class EchoModel {
 public:
  explicit EchoModel(std::size_t vocab_size = 64,
                     std::size_t context_limit = 4096);

  Hello hello() const;
  double logit(std::size_t position, TokenId id) const;

  std::vector<TokenId> tokenize(std::string_view text, bool chat) const;
  std::string detokenize(std::span<const TokenId> ids) const;

  /// Reply frame for one request frame. Never throws; problems become
  /// error frames.
  Frame handle(const Frame& request) const;
  std::string handle_line(std::string_view line) const;

 private:
  std::string surface(TokenId id) const;

  std::size_t vocab_size_;
  std::size_t context_limit_;
};

}  // namespace bloop::protocol
