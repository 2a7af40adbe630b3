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

#include <string>
#include <string_view>

namespace bloop {

/// Decimal with 17 significant digits; always contains '.' or an exponent so
/// the value parses back as a float (keeping -0.0). Throws on non-finite.
std::string format_double(double value);

/// Exact inverse of format_double. Throws DataError on malformed input.
double parse_double(std::string_view text);

}  // namespace bloop
