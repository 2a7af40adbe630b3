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

#include <cerrno>
#include <charconv>
#include <csignal>
#include <cstring>

#include <netdb.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "bloop/error.hpp"
#include "bloop/protocol.hpp"

namespace bloop::protocol {

FdTransport::FdTransport(int read_fd, int write_fd, int child_pid)
    : read_fd_(read_fd), write_fd_(write_fd), child_pid_(child_pid) {
  // A vanished peer must surface as an error, not kill the process.
  std::signal(SIGPIPE, SIG_IGN);
}

FdTransport::~FdTransport() {
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  if (read_fd_ >= 0) ::close(read_fd_);
  if (child_pid_ > 0) {
    int status = 0;
    ::waitpid(child_pid_, &status, 0);
  }
}

void FdTransport::send(std::string_view line) {
  std::string framed(line);
  framed.push_back('\n');
  std::size_t written = 0;
  while (written < framed.size()) {
    const ssize_t n =
        ::write(write_fd_, framed.data() + written, framed.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw BackendError(std::string("bridge write failed: ") + std::strerror(errno));
    }
    written += static_cast<std::size_t>(n);
  }
}

std::string FdTransport::receive() {
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    char chunk[4096];
    const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw BackendError(std::string("bridge read failed: ") + std::strerror(errno));
    }
    if (n == 0) throw BackendError("bridge closed the connection");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

LoopbackTransport::LoopbackTransport(Peer peer, std::string greeting)
    : peer_(std::move(peer)) {
  pending_.push_back(std::move(greeting));
}

void LoopbackTransport::send(std::string_view line) {
  pending_.push_back(peer_(line));
}

std::string LoopbackTransport::receive() {
  if (pending_.empty()) throw BackendError("loopback peer has nothing to send");
  std::string line = std::move(pending_.front());
  pending_.erase(pending_.begin());
  return line;
}

std::unique_ptr<LineTransport> connect_tcp(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const std::string service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &result); rc != 0) {
    throw BackendError("cannot resolve " + host + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = result; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(result);
  if (fd < 0) {
    throw BackendError("cannot connect to bridge at " + host + ":" + service);
  }
  return std::make_unique<FdTransport>(fd, fd);
}

std::unique_ptr<LineTransport> spawn_process(const std::string& command) {
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
    throw BackendError("cannot create pipes for bridge process");
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw BackendError("cannot fork bridge process");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::make_unique<FdTransport>(from_child[0], to_child[1], pid);
}

std::unique_ptr<LineTransport> open_transport(std::string_view address) {
  if (address.starts_with("exec:")) {
    return spawn_process(std::string(address.substr(5)));
  }
  if (address.starts_with("tcp://")) address.remove_prefix(6);
  const auto colon = address.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw ConfigError("bridge address must be exec:<cmd>, tcp://host:port or host:port");
  }
  int port = 0;
  const auto digits = address.substr(colon + 1);
  const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc{} || end != digits.data() + digits.size() || port < 1 || port > 65535) {
    throw ConfigError("bad bridge port in '" + std::string(address) + "'");
  }
  return connect_tcp(std::string(address.substr(0, colon)), port);
}

}  // namespace bloop::protocol
