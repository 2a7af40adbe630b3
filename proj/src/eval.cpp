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

#include "bloop/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "bloop/error.hpp"

namespace bloop {

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, std::size_t> ngram_counts(std::span<const std::string> toks,
                                          int n) {
  std::map<Ngram, std::size_t> counts;
  const auto len = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + len <= toks.size(); ++i) {
    ++counts[Ngram(toks.begin() + static_cast<std::ptrdiff_t>(i),
                   toks.begin() + static_cast<std::ptrdiff_t>(i + len))];
  }
  return counts;
}

std::set<Ngram> ngram_set(std::span<const std::string> toks, int n) {
  std::set<Ngram> out;
  for (auto& [gram, count] : ngram_counts(toks, n)) out.insert(gram);
  return out;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double mean(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

}  // namespace

PRF make_prf(double precision, double recall) {
  const double f1 = precision + recall > 0.0
                        ? 2.0 * precision * recall / (precision + recall)
                        : 0.0;
  return {precision, recall, f1};
}

std::vector<std::string> rouge_tokens(std::string_view text, RougeOptions opts) {
  std::vector<std::string> out;
  std::string current;
  const auto flush = [&] {
    if (current.empty()) return;
    if (opts.stem && current.size() > 3) current = porter_stem(current);
    out.push_back(std::move(current));
    current.clear();
  };
  for (char raw : text) {
    char c = raw;
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      current.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  return out;
}

PRF rouge_n(std::span<const std::string> pred, std::span<const std::string> ref,
            int n) {
  const auto p = ngram_counts(pred, n);
  const auto r = ngram_counts(ref, n);
  std::size_t overlap = 0, p_total = 0, r_total = 0;
  for (const auto& [gram, count] : p) {
    p_total += count;
    if (auto it = r.find(gram); it != r.end()) overlap += std::min(count, it->second);
  }
  for (const auto& [gram, count] : r) r_total += count;
  return make_prf(ratio(overlap, p_total), ratio(overlap, r_total));
}

std::size_t lcs_length(std::span<const std::string> a,
                       std::span<const std::string> b) {
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = a[i - 1] == b[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

PRF rouge_l(std::span<const std::string> pred, std::span<const std::string> ref) {
  const std::size_t lcs = lcs_length(pred, ref);
  return make_prf(ratio(lcs, pred.size()), ratio(lcs, ref.size()));
}

PRF rouge(std::string_view pred, std::string_view ref, RougeKind kind,
          RougeOptions opts) {
  const auto p = rouge_tokens(pred, opts);
  const auto r = rouge_tokens(ref, opts);
  switch (kind) {
    case RougeKind::rouge1:
      return rouge_n(p, r, 1);
    case RougeKind::rouge2:
      return rouge_n(p, r, 2);
    case RougeKind::rougeL:
      return rouge_l(p, r);
  }
  return {};
}

PRF novel_ngram_prf(std::span<const std::string> pred,
                    std::span<const std::string> ref,
                    std::span<const std::string> source, int n) {
  if (n < 1) throw std::invalid_argument("n-gram order must be >= 1");
  const auto src = ngram_set(source, n);
  const auto novel = [&](std::span<const std::string> toks) {
    std::set<Ngram> out;
    for (auto& gram : ngram_set(toks, n)) {
      if (!src.contains(gram)) out.insert(gram);
    }
    return out;
  };
  const auto np = novel(pred);
  const auto nr = novel(ref);
  std::size_t shared = 0;
  for (const auto& gram : np) shared += nr.contains(gram) ? 1 : 0;
  return make_prf(ratio(shared, np.size()), ratio(shared, nr.size()));
}

double bartscore_prob(double bartscore) {
  if (!std::isfinite(bartscore)) throw DataError("non-finite BARTScore");
  return std::exp(bartscore);
}

ExampleMetrics score_example(const ExampleRecord& ex, RougeOptions opts) {
  const auto pred = rouge_tokens(ex.prediction, opts);
  const auto ref = rouge_tokens(ex.reference, opts);
  const auto src = rouge_tokens(ex.source, opts);
  ExampleMetrics m;
  m.rouge1 = rouge_n(pred, ref, 1);
  m.rouge2 = rouge_n(pred, ref, 2);
  m.rougeL = rouge_l(pred, ref);
  for (int n = 1; n <= kMaxNovelN; ++n) {
    m.novel[static_cast<std::size_t>(n - 1)] = novel_ngram_prf(pred, ref, src, n);
  }
  return m;
}

std::vector<ExampleMetrics> score_batch_serial(
    std::span<const ExampleRecord> examples, RougeOptions opts) {
  std::vector<ExampleMetrics> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(score_example(ex, opts));
  return out;
}

std::vector<ExampleMetrics> score_batch(std::span<const ExampleRecord> examples,
                                        RougeOptions opts) {
  std::vector<ExampleMetrics> out(examples.size());
  const auto n = static_cast<std::ptrdiff_t>(examples.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    out[idx] = score_example(examples[idx], opts);
  }
  return out;
}

MetricsReport aggregate(std::span<const ExampleRecord> examples,
                        std::span<const ExampleMetrics> metrics) {
  if (examples.size() != metrics.size()) {
    throw std::invalid_argument("examples and metrics differ in length");
  }
  MetricsReport report;
  report.examples = examples.size();
  std::vector<double> r1, r2, rl, hits, changes, bs, bs_prob;
  std::array<std::vector<double>, kMaxNovelN> np, nr;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    r1.push_back(metrics[i].rouge1.f1);
    r2.push_back(metrics[i].rouge2.f1);
    rl.push_back(metrics[i].rougeL.f1);
    for (std::size_t n = 0; n < kMaxNovelN; ++n) {
      np[n].push_back(metrics[i].novel[n].precision);
      nr[n].push_back(metrics[i].novel[n].recall);
    }
    const auto& ex = examples[i];
    if (ex.hit_rate) hits.push_back(*ex.hit_rate);
    if (ex.argmax_change_rate) changes.push_back(*ex.argmax_change_rate);
    if (ex.bartscore) {
      bs.push_back(*ex.bartscore);
      bs_prob.push_back(bartscore_prob(*ex.bartscore));
    }
  }
  report.rouge1 = mean(r1);
  report.rouge2 = mean(r2);
  report.rougeL = mean(rl);
  for (std::size_t n = 0; n < kMaxNovelN; ++n) {
    report.novel_ngram[n] = make_prf(mean(np[n]), mean(nr[n]));
  }
  if (!hits.empty()) report.hit_rate = mean(hits);
  if (!changes.empty()) report.argmax_change_rate = mean(changes);
  if (!bs.empty()) {
    report.bartscore = mean(bs);
    report.bartscore_prob = mean(bs_prob);
  }
  return report;
}

std::string report_to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  const auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  j["examples"] = report.examples;
  j["rouge1"] = report.rouge1;
  j["rouge2"] = report.rouge2;
  j["rougeL"] = report.rougeL;
  nlohmann::ordered_json novel;
  for (std::size_t n = 0; n < kMaxNovelN; ++n) {
    const auto& prf = report.novel_ngram[n];
    novel[std::to_string(n + 1)] = {{"precision", prf.precision},
                                    {"recall", prf.recall},
                                    {"f1", prf.f1}};
  }
  j["novel_ngram"] = std::move(novel);
  j["hit_rate"] = opt(report.hit_rate);
  j["argmax_change_rate"] = opt(report.argmax_change_rate);
  j["bartscore"] = opt(report.bartscore);
  j["bartscore_prob"] = opt(report.bartscore_prob);
  j["bartscore_prob_x100"] =
      report.bartscore_prob ? nlohmann::ordered_json(*report.bartscore_prob * 100.0)
                            : nlohmann::ordered_json(nullptr);
  return j.dump(2);
}

}  // namespace bloop
