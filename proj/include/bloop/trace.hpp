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
#include <optional>
#include <span>

#include "bloop/text.hpp"

namespace bloop {

/// What promotion did at one generation step of one hypothesis.
struct StepRecord {
  int step = 0;
  bool looked_up = false;
  bool cache_hit = false;
  bool promotion_applied = false;
  bool argmax_changed = false;
  TokenId raw_argmax = -1;
  TokenId final_argmax = -1;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct TraceStats {
  std::size_t steps = 0;
  std::size_t lookups = 0;
  std::size_t hits = 0;
  std::size_t argmax_changes = 0;
  // Absent when there was nothing to measure.
  std::optional<double> hit_rate;
  std::optional<double> argmax_change_rate;
};

/// hit_rate = hits / lookups; argmax_change_rate = changed steps / steps.
TraceStats trace_stats(std::span<const StepRecord> trace);

}  // namespace bloop
