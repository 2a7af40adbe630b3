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

#include <ostream>
#include <string>
#include <vector>

namespace bloop::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitBackend = 3;

inline constexpr const char* kDefaultTemplate =
    "Write a paragraph summarizing the given article without preamble.\n\n"
    "{article}";

/// Runs one `bloop` invocation. `args` includes the program name. Errors are
/// reported on `err` and mapped to the exit codes above.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

/// Replaces the single {article} placeholder; throws ConfigError unless the
/// template contains it exactly once.
std::string render_template(const std::string& tmpl, std::string_view article);

/// Interprets \n, \t, \r and \\ in a stop string given on the command line.
std::string unescape(std::string_view text);

}  // namespace bloop::cli
