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
#include <span>
#include <vector>

#include "bloop/text.hpp"

// Vocabulary-wide reductions. Each kernel has a serial reference used by the
// tests and an OpenMP version that falls back to the serial path below
// kParallelThreshold elements. Both resolve ties toward the lowest index, so
// results are identical regardless of thread count.
namespace bloop::kernels {

inline constexpr std::size_t kParallelThreshold = 1 << 15;

TokenId argmax_serial(std::span<const double> scores);
TokenId argmax(std::span<const double> scores);

/// Argmax restricted to `ids`; returns -1 when `ids` is empty.
TokenId argmax_over(std::span<const double> scores, std::span<const TokenId> ids);

bool all_finite_serial(std::span<const double> scores);
bool all_finite(std::span<const double> scores);

/// The `m` highest-scoring ids (score descending, id ascending). When
/// `restrict_to` is non-empty only those ids are candidates.
std::vector<TokenId> top_m(std::span<const double> scores, std::size_t m,
                           std::span<const TokenId> restrict_to = {});

}  // namespace bloop::kernels
