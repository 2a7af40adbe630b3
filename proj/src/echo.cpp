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

#include "bloop/echo.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <stdexcept>

#include "bloop/error.hpp"
#include "bloop/kernels.hpp"
#include "bloop/text.hpp"

namespace bloop::protocol {

EchoModel::EchoModel(std::size_t vocab_size, std::size_t context_limit)
    : vocab_size_(vocab_size), context_limit_(context_limit) {
  if (vocab_size_ < 4) throw std::invalid_argument("echo vocabulary needs >= 4 ids");
}

Hello EchoModel::hello() const { return Hello{vocab_size_, context_limit_, {0}}; }

double EchoModel::logit(std::size_t position, TokenId id) const {
  const std::uint64_t mix =
      (static_cast<std::uint64_t>(id) + 1) * 2654435761ull + position * 97ull;
  return -static_cast<double>(mix % 1009) / 64.0;
}

std::string EchoModel::surface(TokenId id) const {
  if (id == 0) return "\n";
  if (id == 1) return ".";
  return "w" + std::to_string(id);
}

std::vector<TokenId> EchoModel::tokenize(std::string_view text, bool chat) const {
  std::vector<TokenId> ids;
  if (chat) ids = {2, 3};
  for (const auto& tok : split_surface(text)) {
    if (tok.text == "\n") {
      ids.push_back(0);
      continue;
    }
    if (tok.text == ".") {
      ids.push_back(1);
      continue;
    }
    if (tok.text.size() > 1 && tok.text[0] == 'w') {
      std::size_t value = 0;
      const char* begin = tok.text.data() + 1;
      const char* end = tok.text.data() + tok.text.size();
      auto [ptr, ec] = std::from_chars(begin, end, value);
      if (ec == std::errc{} && ptr == end && value >= 2 && value < vocab_size_) {
        ids.push_back(static_cast<TokenId>(value));
        continue;
      }
    }
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : tok.text) {
      h ^= c;
      h *= 1099511628211ull;
    }
    ids.push_back(static_cast<TokenId>(2 + h % (vocab_size_ - 2)));
  }
  return ids;
}

std::string EchoModel::detokenize(std::span<const TokenId> ids) const {
  std::string out;
  bool previous_newline = true;
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size_) {
      throw DataError("echo id out of range: " + std::to_string(id));
    }
    const bool newline = id == 0;
    if (!previous_newline && !newline && id != 1) out.push_back(' ');
    out += surface(id);
    previous_newline = newline;
  }
  return out;
}

Frame EchoModel::handle(const Frame& request) const {
  try {
    if (auto* req = std::get_if<ScoreRequest>(&request)) {
      if (req->context.size() > context_limit_) return Error{"context too long"};
      const std::size_t pos = req->context.size();
      if (req->dense) {
        DenseLogits out;
        out.scores.resize(vocab_size_);
        for (std::size_t v = 0; v < vocab_size_; ++v) {
          out.scores[v] = logit(pos, static_cast<TokenId>(v));
        }
        return out;
      }
      std::vector<double> all(vocab_size_);
      for (std::size_t v = 0; v < vocab_size_; ++v) {
        all[v] = logit(pos, static_cast<TokenId>(v));
      }
      Logits out;
      out.session = req->session;
      std::vector<TokenId> chosen = kernels::top_m(all, req->top_k);
      std::vector<TokenId> sorted_chosen = chosen;
      std::sort(sorted_chosen.begin(), sorted_chosen.end());
      std::vector<TokenId> extra;
      for (TokenId id : req->must_score) {
        if (id < 0 || static_cast<std::size_t>(id) >= vocab_size_) {
          return Error{"must_score id out of range: " + std::to_string(id)};
        }
        if (!std::binary_search(sorted_chosen.begin(), sorted_chosen.end(), id)) {
          extra.push_back(id);
        }
      }
      std::sort(extra.begin(), extra.end());
      extra.erase(std::unique(extra.begin(), extra.end()), extra.end());
      chosen.insert(chosen.end(), extra.begin(), extra.end());
      std::vector<bool> included(vocab_size_, false);
      for (TokenId id : chosen) {
        out.entries.emplace_back(id, all[static_cast<std::size_t>(id)]);
        included[static_cast<std::size_t>(id)] = true;
      }
      // Floor: an upper bound on every omitted score.
      double floor = 0.0;
      bool any_omitted = false;
      for (std::size_t v = 0; v < vocab_size_; ++v) {
        if (included[v]) continue;
        floor = any_omitted ? std::max(floor, all[v]) : all[v];
        any_omitted = true;
      }
      if (!any_omitted) {
        floor = *std::min_element(all.begin(), all.end());
      }
      out.floor = floor;
      return out;
    }
    if (auto* req = std::get_if<TokenizeRequest>(&request)) {
      return Tokens{tokenize(req->text, req->chat)};
    }
    if (auto* req = std::get_if<DetokenizeRequest>(&request)) {
      return Text{detokenize(req->ids)};
    }
    return Error{"unexpected frame '" + std::string(frame_type(request)) + "'"};
  } catch (const std::exception& e) {
    return Error{e.what()};
  }
}

std::string EchoModel::handle_line(std::string_view line) const {
  try {
    return encode(handle(decode(line)));
  } catch (const std::exception& e) {
    return encode(Error{e.what()});
  }
}

}  // namespace bloop::protocol
