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

// Deterministic wire-protocol peer on stdin/stdout for integration tests.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bloop/echo.hpp"
#include "bloop/protocol.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Echo-mode protocol peer"};
  std::size_t vocab_size = 64;
  std::size_t context_limit = 4096;
  long fail_after = -1;
  app.add_option("--vocab-size", vocab_size)->capture_default_str();
  app.add_option("--context-limit", context_limit)->capture_default_str();
  app.add_option("--fail-after", fail_after,
                 "Answer every request after this many with an error frame");
  CLI11_PARSE(app, argc, argv);

  const bloop::protocol::EchoModel model(vocab_size, context_limit);
  std::cout << bloop::protocol::encode(model.hello()) << '\n' << std::flush;
  std::string line;
  for (long served = 0; std::getline(std::cin, line); ++served) {
    if (fail_after >= 0 && served >= fail_after) {
      std::cout << bloop::protocol::encode(bloop::protocol::Error{"injected failure"});
    } else {
      std::cout << model.handle_line(line);
    }
    std::cout << '\n' << std::flush;
  }
  return 0;
}
