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
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "bloop/model.hpp"
#include "bloop/text.hpp"

// Newline-delimited JSON protocol between the engine and an external
// scoring backend. One frame per line; floats carry 17 significant digits.
namespace bloop::protocol {

struct Hello {
  std::size_t vocab_size = 0;
  std::size_t context_limit = 0;
  std::vector<TokenId> newline_token_ids;
  friend bool operator==(const Hello&, const Hello&) = default;
};

struct ScoreRequest {
  std::string session;
  std::vector<TokenId> context;
  std::size_t top_k = 0;
  std::vector<TokenId> must_score;
  bool dense = false;
  friend bool operator==(const ScoreRequest&, const ScoreRequest&) = default;
};

struct Logits {
  std::string session;
  std::vector<std::pair<TokenId, double>> entries;
  double floor = 0.0;
  friend bool operator==(const Logits&, const Logits&) = default;
};

struct DenseLogits {
  std::vector<double> scores;
  friend bool operator==(const DenseLogits&, const DenseLogits&) = default;
};

struct Error {
  std::string message;
  friend bool operator==(const Error&, const Error&) = default;
};

// Text round-trips through the backend's own tokenizer. With chat = true the
// backend wraps the text as a user message in its chat template.
struct TokenizeRequest {
  std::string text;
  bool chat = false;
  friend bool operator==(const TokenizeRequest&, const TokenizeRequest&) = default;
};

struct Tokens {
  std::vector<TokenId> ids;
  friend bool operator==(const Tokens&, const Tokens&) = default;
};

struct DetokenizeRequest {
  std::vector<TokenId> ids;
  friend bool operator==(const DetokenizeRequest&, const DetokenizeRequest&) = default;
};

struct Text {
  std::string text;
  friend bool operator==(const Text&, const Text&) = default;
};

using Frame = std::variant<Hello, ScoreRequest, Logits, DenseLogits, Error,
                           TokenizeRequest, Tokens, DetokenizeRequest, Text>;

/// One JSON object, no trailing newline. Throws std::invalid_argument on
/// non-finite floats.
std::string encode(const Frame& frame);
/// Throws ProtocolError on malformed or unknown frames.
Frame decode(std::string_view line);

std::string_view frame_type(const Frame& frame);

/// Bidirectional line channel.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  virtual void send(std::string_view line) = 0;
  /// Throws BackendError when the peer has closed the channel.
  virtual std::string receive() = 0;
};

/// File-descriptor channel (pipes to a child process, or a socket).
class FdTransport final : public LineTransport {
 public:
  FdTransport(int read_fd, int write_fd, int child_pid = -1);
  ~FdTransport() override;
  FdTransport(const FdTransport&) = delete;
  FdTransport& operator=(const FdTransport&) = delete;

  void send(std::string_view line) override;
  std::string receive() override;

 private:
  int read_fd_;
  int write_fd_;
  int child_pid_;
  std::string buffer_;
};

/// In-process channel: each sent line is handed to `peer`, whose reply is
/// queued for the next receive(). `greeting` is queued up front.
class LoopbackTransport final : public LineTransport {
 public:
  using Peer = std::function<std::string(std::string_view)>;
  LoopbackTransport(Peer peer, std::string greeting);

  void send(std::string_view line) override;
  std::string receive() override;

 private:
  Peer peer_;
  std::vector<std::string> pending_;
};

std::unique_ptr<LineTransport> connect_tcp(const std::string& host, int port);
/// Runs `command` through /bin/sh with its stdin/stdout as the channel.
std::unique_ptr<LineTransport> spawn_process(const std::string& command);
/// "exec:<command>", "tcp://host:port" or "host:port".
std::unique_ptr<LineTransport> open_transport(std::string_view address);

/// Engine side of the protocol. Requests are serialized per connection.
class BridgeClient {
 public:
  /// Reads the peer's hello frame.
  explicit BridgeClient(std::unique_ptr<LineTransport> transport);

  const Hello& hello() const { return hello_; }

  ScoreResult score(const std::string& session,
                    std::span<const TokenId> context,
                    std::span<const TokenId> must_score, std::size_t top_k,
                    bool dense);
  std::vector<TokenId> tokenize(std::string_view text, bool chat);
  std::string detokenize(std::span<const TokenId> ids);

 private:
  Frame round_trip(const Frame& request);

  std::unique_ptr<LineTransport> transport_;
  Hello hello_;
  std::mutex mutex_;
};

class BridgeScorer final : public TokenScorer {
 public:
  BridgeScorer(std::shared_ptr<BridgeClient> client, std::string session,
               std::size_t top_k, bool dense)
      : client_(std::move(client)),
        session_(std::move(session)),
        top_k_(top_k),
        dense_(dense) {}

  std::size_t vocab_size() const override {
    return client_->hello().vocab_size;
  }
  std::size_t context_limit() const override {
    return client_->hello().context_limit;
  }
  bool concurrency_safe() const override { return false; }
  ScoreResult score(std::span<const TokenId> context,
                    std::span<const TokenId> must_score) const override;

 private:
  std::shared_ptr<BridgeClient> client_;
  std::string session_;
  std::size_t top_k_;
  bool dense_;
};

class BridgeRenderer final : public TextRenderer {
 public:
  explicit BridgeRenderer(std::shared_ptr<BridgeClient> client)
      : client_(std::move(client)) {}
  std::string render(std::span<const TokenId> ids) const override {
    return client_->detokenize(ids);
  }

 private:
  std::shared_ptr<BridgeClient> client_;
};

}  // namespace bloop::protocol
