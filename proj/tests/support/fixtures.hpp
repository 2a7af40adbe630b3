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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bloop/text.hpp"

namespace bloop::fixtures {

/// Logits on a 2^-16 grid, so sums with small integer multiples of a
/// grid-valued alpha are exact.
inline double grid_value(std::mt19937_64& rng, double lo, double hi) {
  const auto steps = static_cast<std::int64_t>((hi - lo) * 65536.0);
  std::uniform_int_distribution<std::int64_t> pick(0, steps);
  return lo + static_cast<double>(pick(rng)) / 65536.0;
}

inline std::vector<double> grid_logits(std::mt19937_64& rng, std::size_t vocab) {
  std::vector<double> v(vocab);
  for (auto& x : v) x = grid_value(rng, -16.0, 16.0);
  return v;
}

inline int uniform(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline Document random_document(std::mt19937_64& rng, TokenId vocab, int max_sentences = 6,
                                int max_len = 10) {
  Document doc;
  const int n = uniform(rng, 0, max_sentences);
  for (int s = 0; s < n; ++s) {
    std::vector<TokenId> sentence(static_cast<std::size_t>(uniform(rng, 0, max_len)));
    for (auto& t : sentence) t = uniform(rng, 0, vocab - 1);
    doc.sentences.push_back(std::move(sentence));
  }
  return doc;
}

inline std::string data_path(const std::string& name) {
  return std::string(BLOOP_TEST_DATA_DIR) + "/" + name;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("bloop-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace bloop::fixtures
