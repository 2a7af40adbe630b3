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

#include "bloop/protocol.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <type_traits>

#include <json.hpp>

#include "bloop/error.hpp"
#include "bloop/numfmt.hpp"

namespace bloop::protocol {

namespace {

using nlohmann::json;

std::string quote(std::string_view s) {
  return json(std::string(s)).dump(-1, ' ', false,
                                   json::error_handler_t::strict);
}

template <typename Seq, typename Fn>
void append_array(std::string& out, const Seq& seq, Fn&& item) {
  out += '[';
  bool first = true;
  for (const auto& v : seq) {
    if (!first) out += ',';
    first = false;
    item(out, v);
  }
  out += ']';
}

void append_ids(std::string& out, const std::vector<TokenId>& ids) {
  append_array(out, ids, [](std::string& o, TokenId id) { o += std::to_string(id); });
}

void append_bool(std::string& out, bool v) { out += v ? "true" : "false"; }

struct Encoder {
  std::string operator()(const Hello& f) const {
    std::string out = R"({"type":"hello","vocab_size":)";
    out += std::to_string(f.vocab_size);
    out += R"(,"context_limit":)";
    out += std::to_string(f.context_limit);
    out += R"(,"newline_token_ids":)";
    append_ids(out, f.newline_token_ids);
    out += '}';
    return out;
  }
  std::string operator()(const ScoreRequest& f) const {
    std::string out = R"({"type":"score","session":)";
    out += quote(f.session);
    out += R"(,"context":)";
    append_ids(out, f.context);
    out += R"(,"top_k":)";
    out += std::to_string(f.top_k);
    out += R"(,"must_score":)";
    append_ids(out, f.must_score);
    out += R"(,"dense":)";
    append_bool(out, f.dense);
    out += '}';
    return out;
  }
  std::string operator()(const Logits& f) const {
    std::string out = R"({"type":"logits","session":)";
    out += quote(f.session);
    out += R"(,"entries":)";
    append_array(out, f.entries, [](std::string& o, const auto& e) {
      o += '[';
      o += std::to_string(e.first);
      o += ',';
      o += format_double(e.second);
      o += ']';
    });
    out += R"(,"floor":)";
    out += format_double(f.floor);
    out += '}';
    return out;
  }
  std::string operator()(const DenseLogits& f) const {
    std::string out = R"({"type":"logits_dense","scores":)";
    append_array(out, f.scores,
                 [](std::string& o, double v) { o += format_double(v); });
    out += '}';
    return out;
  }
  std::string operator()(const Error& f) const {
    return R"({"type":"error","message":)" + quote(f.message) + "}";
  }
  std::string operator()(const TokenizeRequest& f) const {
    std::string out = R"({"type":"tokenize","text":)" + quote(f.text);
    out += R"(,"chat":)";
    append_bool(out, f.chat);
    out += '}';
    return out;
  }
  std::string operator()(const Tokens& f) const {
    std::string out = R"({"type":"tokens","ids":)";
    append_ids(out, f.ids);
    out += '}';
    return out;
  }
  std::string operator()(const DetokenizeRequest& f) const {
    std::string out = R"({"type":"detokenize","ids":)";
    append_ids(out, f.ids);
    out += '}';
    return out;
  }
  std::string operator()(const Text& f) const {
    return R"({"type":"text","text":)" + quote(f.text) + "}";
  }
};

const json& field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) {
    throw ProtocolError(std::string("frame is missing field '") + name + "'");
  }
  return *it;
}

std::vector<TokenId> ids_of(const json& j, const char* name) {
  const json& arr = field(j, name);
  if (!arr.is_array()) throw ProtocolError(std::string("'") + name + "' must be an array");
  std::vector<TokenId> ids;
  ids.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number_integer()) {
      throw ProtocolError(std::string("'") + name + "' must hold integer ids");
    }
    const auto id = v.get<std::int64_t>();
    if (id < std::numeric_limits<TokenId>::min() || id > std::numeric_limits<TokenId>::max()) {
      throw ProtocolError(std::string("'") + name + "' holds an id outside 32 bits");
    }
    ids.push_back(static_cast<TokenId>(id));
  }
  return ids;
}

double float_of(const json& v) {
  if (!v.is_number()) throw ProtocolError("expected a number");
  return v.get<double>();
}

std::size_t size_of(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number_unsigned()) {
    throw ProtocolError(std::string("'") + name + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::string string_of(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_string()) throw ProtocolError(std::string("'") + name + "' must be a string");
  return v.get<std::string>();
}

bool bool_of(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_boolean()) throw ProtocolError(std::string("'") + name + "' must be a boolean");
  return v.get<bool>();
}

}  // namespace

std::string encode(const Frame& frame) { return std::visit(Encoder{}, frame); }

Frame decode(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("unparseable frame: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("frame must be a JSON object");
  const std::string type = string_of(j, "type");
  try {
    if (type == "hello") {
      return Hello{size_of(j, "vocab_size"), size_of(j, "context_limit"),
                   ids_of(j, "newline_token_ids")};
    }
    if (type == "score") {
      return ScoreRequest{string_of(j, "session"), ids_of(j, "context"),
                          size_of(j, "top_k"), ids_of(j, "must_score"),
                          bool_of(j, "dense")};
    }
    if (type == "logits") {
      Logits f;
      f.session = string_of(j, "session");
      const json& entries = field(j, "entries");
      if (!entries.is_array()) throw ProtocolError("'entries' must be an array");
      for (const auto& e : entries) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer()) {
          throw ProtocolError("logit entry must be [id, score]");
        }
        f.entries.emplace_back(e[0].get<TokenId>(), float_of(e[1]));
      }
      f.floor = float_of(field(j, "floor"));
      return f;
    }
    if (type == "logits_dense") {
      DenseLogits f;
      const json& scores = field(j, "scores");
      if (!scores.is_array()) throw ProtocolError("'scores' must be an array");
      f.scores.reserve(scores.size());
      for (const auto& v : scores) f.scores.push_back(float_of(v));
      return f;
    }
    if (type == "error") return Error{string_of(j, "message")};
    if (type == "tokenize") {
      return TokenizeRequest{string_of(j, "text"), bool_of(j, "chat")};
    }
    if (type == "tokens") return Tokens{ids_of(j, "ids")};
    if (type == "detokenize") return DetokenizeRequest{ids_of(j, "ids")};
    if (type == "text") return Text{string_of(j, "text")};
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad field in '") + type + "' frame: " + e.what());
  }
  throw ProtocolError("unknown frame type '" + type + "'");
}

std::string_view frame_type(const Frame& frame) {
  static constexpr std::string_view kNames[] = {
      "hello", "score", "logits", "logits_dense", "error",
      "tokenize", "tokens", "detokenize", "text"};
  return kNames[frame.index()];
}

BridgeClient::BridgeClient(std::unique_ptr<LineTransport> transport)
    : transport_(std::move(transport)) {
  Frame first = decode(transport_->receive());
  if (auto* err = std::get_if<Error>(&first)) {
    throw BackendError("bridge refused connection: " + err->message);
  }
  auto* hello = std::get_if<Hello>(&first);
  if (!hello) {
    throw ProtocolError("expected hello frame, got '" +
                        std::string(frame_type(first)) + "'");
  }
  if (hello->vocab_size == 0) throw ProtocolError("bridge reported an empty vocabulary");
  hello_ = std::move(*hello);
}

Frame BridgeClient::round_trip(const Frame& request) {
  std::lock_guard lock(mutex_);
  transport_->send(encode(request));
  Frame reply = decode(transport_->receive());
  if (auto* err = std::get_if<Error>(&reply)) {
    throw BackendError("bridge error: " + err->message);
  }
  return reply;
}

ScoreResult BridgeClient::score(const std::string& session,
                                std::span<const TokenId> context,
                                std::span<const TokenId> must_score,
                                std::size_t top_k, bool dense) {
  ScoreRequest req{session,
                   std::vector<TokenId>(context.begin(), context.end()), top_k,
                   std::vector<TokenId>(must_score.begin(), must_score.end()),
                   dense};
  Frame reply = round_trip(req);
  const std::size_t vocab = hello_.vocab_size;
  if (auto* d = std::get_if<DenseLogits>(&reply)) {
    if (d->scores.size() != vocab) {
      throw ProtocolError("dense logits length " + std::to_string(d->scores.size()) +
                          " does not match vocab_size " + std::to_string(vocab));
    }
    return ScoreResult{std::move(d->scores), std::nullopt};
  }
  auto* s = std::get_if<Logits>(&reply);
  if (!s) {
    throw ProtocolError("expected logits frame, got '" +
                        std::string(frame_type(reply)) + "'");
  }
  if (dense) throw ProtocolError("bridge answered a dense request sparsely");
  ScoreResult out{LogitVector(vocab, s->floor), std::vector<TokenId>{}};
  for (const auto& [id, value] : s->entries) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw ProtocolError("logit entry id out of range: " + std::to_string(id));
    }
    out.logits[static_cast<std::size_t>(id)] = value;
    out.exact_ids->push_back(id);
  }
  std::sort(out.exact_ids->begin(), out.exact_ids->end());
  out.exact_ids->erase(std::unique(out.exact_ids->begin(), out.exact_ids->end()),
                       out.exact_ids->end());
  for (TokenId id : must_score) {
    if (!std::binary_search(out.exact_ids->begin(), out.exact_ids->end(), id)) {
      throw ProtocolError("bridge omitted must_score id " + std::to_string(id));
    }
  }
  return out;
}

std::vector<TokenId> BridgeClient::tokenize(std::string_view text, bool chat) {
  Frame reply = round_trip(TokenizeRequest{std::string(text), chat});
  auto* t = std::get_if<Tokens>(&reply);
  if (!t) throw ProtocolError("expected tokens frame");
  return std::move(t->ids);
}

std::string BridgeClient::detokenize(std::span<const TokenId> ids) {
  Frame reply =
      round_trip(DetokenizeRequest{std::vector<TokenId>(ids.begin(), ids.end())});
  auto* t = std::get_if<Text>(&reply);
  if (!t) throw ProtocolError("expected text frame");
  return std::move(t->text);
}

ScoreResult BridgeScorer::score(std::span<const TokenId> context,
                                std::span<const TokenId> must_score) const {
  check_context_length(*this, context.size());
  return client_->score(session_, context, must_score, top_k_, dense_);
}

}  // namespace bloop::protocol
