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

// Serial reference kernels against their OpenMP counterparts.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bloop/cache.hpp"
#include "bloop/decode.hpp"
#include "bloop/eval.hpp"
#include "bloop/kernels.hpp"
#include "bloop/model.hpp"

namespace {

using Clock = std::chrono::steady_clock;

template <typename Fn>
double best_ms(int reps, Fn&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    fn();
    const auto t1 = Clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void row(const std::string& name, double serial_ms, double parallel_ms, bool agree) {
  std::printf("%-28s serial %10.3f ms   omp %10.3f ms   speedup %6.2fx   %s\n",
              name.c_str(), serial_ms, parallel_ms, serial_ms / parallel_ms,
              agree ? "agree" : "MISMATCH");
}

bloop::Document random_document(std::mt19937_64& rng, std::size_t tokens,
                                bloop::TokenId vocab) {
  bloop::Document doc;
  std::uniform_int_distribution<bloop::TokenId> tok(1, vocab - 1);
  std::uniform_int_distribution<int> len(5, 30);
  while (doc.token_count() < tokens) {
    std::vector<bloop::TokenId> s(static_cast<std::size_t>(len(rng)));
    for (auto& t : s) t = tok(rng);
    doc.sentences.push_back(std::move(s));
  }
  return doc;
}

std::string random_text(std::mt19937_64& rng, int words) {
  static const char* kWords[] = {"the", "cat", "sat", "on", "mat", "a", "dog",
                                 "ran", "far", "away", "and", "then", "slept",
                                 "good", "example", "news", "today", "city"};
  std::uniform_int_distribution<int> pick(0, 17);
  std::string out;
  for (int i = 0; i < words; ++i) {
    if (i) out += ' ';
    out += kWords[pick(rng)];
  }
  return out + ".";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bloop kernel benchmarks"};
  bool quick = false;
  app.add_flag("--quick", quick, "Small sizes, single repetition");
  CLI11_PARSE(app, argc, argv);

  const int reps = quick ? 1 : 5;
  std::mt19937_64 rng(7);
  std::printf("threads: %d\n", omp_get_max_threads());

  {
    const std::size_t n = quick ? (1u << 16) : (1u << 22);
    std::vector<double> v(n);
    std::normal_distribution<double> g;
    for (auto& x : v) x = g(rng);
    long a = 0, b = 0;
    const double s = best_ms(reps, [&] { a = bloop::kernels::argmax_serial(v); });
    const double p = best_ms(reps, [&] { b = bloop::kernels::argmax(v); });
    row("argmax n=" + std::to_string(n), s, p, a == b);
    bool fa = false, fb = false;
    const double s2 = best_ms(reps, [&] { fa = bloop::kernels::all_finite_serial(v); });
    const double p2 = best_ms(reps, [&] { fb = bloop::kernels::all_finite(v); });
    row("all_finite n=" + std::to_string(n), s2, p2, fa == fb);
  }

  {
    const int docs = quick ? 4 : 32;
    std::vector<bloop::Document> corpus;
    std::vector<bloop::DecodeJob> jobs;
    for (int d = 0; d < docs; ++d) {
      corpus.push_back(random_document(rng, 200, 500));
      bloop::DecodeJob job;
      job.id = "doc" + std::to_string(d);
      job.source = corpus.back();
      job.prompt = job.source.flatten();
      jobs.push_back(std::move(job));
    }
    const auto lm = bloop::NgramLM::train(corpus, 500, 3);
    bloop::Vocabulary vocab;
    for (int i = 0; i < 500; ++i) vocab.add("t" + std::to_string(i));
    const bloop::VocabularyRenderer renderer(vocab);
    bloop::DecodeConfig cfg;
    cfg.beam_width = 4;
    cfg.max_new_tokens = quick ? 8 : 32;
    cfg.promotion.alpha = 2.0;
    std::vector<bloop::BatchItem> sa, pa;
    const double s = best_ms(reps, [&] { sa = bloop::batch_decode_serial(lm, renderer, jobs, cfg); });
    const double p = best_ms(reps, [&] { pa = bloop::batch_decode(lm, renderer, jobs, cfg); });
    bool agree = sa.size() == pa.size();
    for (std::size_t i = 0; agree && i < sa.size(); ++i) {
      agree = sa[i].result && pa[i].result && sa[i].result->best.ids == pa[i].result->best.ids;
    }
    row("batch_decode docs=" + std::to_string(docs), s, p, agree);
  }

  {
    const int n = quick ? 50 : 2000;
    std::vector<bloop::ExampleRecord> ex;
    for (int i = 0; i < n; ++i) {
      ex.push_back({"e" + std::to_string(i), random_text(rng, 400), random_text(rng, 60),
                    random_text(rng, 60), std::nullopt, std::nullopt, std::nullopt});
    }
    std::vector<bloop::ExampleMetrics> ms, mp;
    const double s = best_ms(reps, [&] { ms = bloop::score_batch_serial(ex, {true}); });
    const double p = best_ms(reps, [&] { mp = bloop::score_batch(ex, {true}); });
    bool agree = ms.size() == mp.size();
    for (std::size_t i = 0; agree && i < ms.size(); ++i) {
      agree = ms[i].rougeL.f1 == mp[i].rougeL.f1 && ms[i].novel[1].f1 == mp[i].novel[1].f1;
    }
    row("score_batch n=" + std::to_string(n), s, p, agree);
  }

  std::printf("\nbigram lookup latency (median of 64 batches of 4096 lookups)\n");
  for (std::size_t tokens : {std::size_t{1000}, std::size_t{10000}, std::size_t{100000}}) {
    const auto vocab = static_cast<bloop::TokenId>(std::max<std::size_t>(64, tokens / 4));
    const auto doc = random_document(rng, tokens, vocab);
    const auto cache = bloop::BigramCache::build(doc);
    std::uniform_int_distribution<bloop::TokenId> q(0, vocab - 1);
    std::vector<bloop::TokenId> queries(4096);
    for (auto& x : queries) x = q(rng);
    std::vector<double> samples;
    std::size_t sink = 0;
    for (int b = 0; b < (quick ? 8 : 64); ++b) {
      bloop::LookupStats stats;
      const auto t0 = Clock::now();
      for (auto id : queries) sink += cache.lookup(id, stats).size();
      const auto t1 = Clock::now();
      samples.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count() /
                        static_cast<double>(queries.size()));
    }
    std::nth_element(samples.begin(), samples.begin() + samples.size() / 2, samples.end());
    std::printf("  %7zu tokens  %8.2f ns/lookup  (entries %zu, sink %zu)\n", tokens,
                samples[samples.size() / 2], cache.size(), sink);
  }
  return 0;
}
