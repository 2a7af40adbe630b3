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

#include "bloop/trace.hpp"

namespace bloop {

TraceStats trace_stats(std::span<const StepRecord> trace) {
  TraceStats s;
  s.steps = trace.size();
  for (const auto& r : trace) {
    if (r.looked_up) ++s.lookups;
    if (r.cache_hit) ++s.hits;
    if (r.argmax_changed) ++s.argmax_changes;
  }
  if (s.lookups > 0) {
    s.hit_rate = static_cast<double>(s.hits) / static_cast<double>(s.lookups);
  }
  if (s.steps > 0) {
    s.argmax_change_rate =
        static_cast<double>(s.argmax_changes) / static_cast<double>(s.steps);
  }
  return s;
}

}  // namespace bloop
