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

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bloop/trace.hpp"

namespace bloop {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Harmonic mean, 0 when both inputs are 0.
PRF make_prf(double precision, double recall);

std::string porter_stem(std::string_view word);

struct RougeOptions {
  bool stem = false;
};

/// Lowercases, splits on anything outside [a-z0-9], and optionally stems
/// tokens longer than three characters.
std::vector<std::string> rouge_tokens(std::string_view text,
                                      RougeOptions opts = {});

/// Clipped n-gram overlap.
PRF rouge_n(std::span<const std::string> pred, std::span<const std::string> ref,
            int n);
/// Longest-common-subsequence precision/recall.
PRF rouge_l(std::span<const std::string> pred, std::span<const std::string> ref);
std::size_t lcs_length(std::span<const std::string> a,
                       std::span<const std::string> b);

enum class RougeKind { rouge1, rouge2, rougeL };
PRF rouge(std::string_view pred, std::string_view ref, RougeKind kind,
          RougeOptions opts = {});

/// Novel n-grams are the distinct n-grams of a text that never occur in the
/// source. precision = |novel(pred) & novel(ref)| / |novel(pred)|, recall
/// divides by |novel(ref)|; 0/0 is 0.
PRF novel_ngram_prf(std::span<const std::string> pred,
                    std::span<const std::string> ref,
                    std::span<const std::string> source, int n);

/// e^bartscore. Throws DataError on non-finite input.
double bartscore_prob(double bartscore);

/// One evaluated example, as read from a predictions file.
struct ExampleRecord {
  std::string id;
  std::string source;
  std::string reference;
  std::string prediction;
  std::optional<double> hit_rate;
  std::optional<double> argmax_change_rate;
  std::optional<double> bartscore;
};

inline constexpr int kMaxNovelN = 3;

struct ExampleMetrics {
  PRF rouge1, rouge2, rougeL;
  std::array<PRF, kMaxNovelN> novel{};
};

ExampleMetrics score_example(const ExampleRecord& ex, RougeOptions opts = {});

/// Per-example metrics in input order. The parallel version is an OpenMP
/// fan-out over examples and matches the serial one exactly.
std::vector<ExampleMetrics> score_batch(std::span<const ExampleRecord> examples,
                                        RougeOptions opts = {});
std::vector<ExampleMetrics> score_batch_serial(
    std::span<const ExampleRecord> examples, RougeOptions opts = {});

struct MetricsReport {
  std::size_t examples = 0;
  // Mean F1 over examples.
  double rouge1 = 0.0, rouge2 = 0.0, rougeL = 0.0;
  // Mean precision and recall over examples; f1 is their harmonic mean.
  std::array<PRF, kMaxNovelN> novel_ngram{};
  std::optional<double> hit_rate;
  std::optional<double> argmax_change_rate;
  std::optional<double> bartscore;
  // Mean of per-summary e^bartscore.
  std::optional<double> bartscore_prob;
};

/// Unweighted means. Rates average over examples that report them.
MetricsReport aggregate(std::span<const ExampleRecord> examples,
                        std::span<const ExampleMetrics> metrics);

std::string report_to_json(const MetricsReport& report);

}  // namespace bloop
