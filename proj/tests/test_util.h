// Copyright 2026 The mtaffect Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MTAFFECT_TESTS_TEST_UTIL_H_
#define MTAFFECT_TESTS_TEST_UTIL_H_

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mtaffect/featstore.h"
#include "mtaffect/matrix.h"
#include "mtaffect/net.h"
#include "mtaffect/random.h"
#include "mtaffect/synthetic.h"
#include "oracles.h"

namespace mtaffect::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("mtaffect_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols,
                            double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

// Scores on a 1/20 lattice so that ties and grid hits are common.
inline Matrix lattice_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = static_cast<double>(rng.index(21)) / 20.0;
  return m;
}

inline SyntheticParams small_params(std::size_t feature_dim = 16,
                                    bool openface = false) {
  SyntheticParams p;
  p.feature_dim = feature_dim;
  p.mean_scale = 1.0;
  p.au_scale = 1.0;
  p.with_openface = openface;
  return p;
}

inline Dataset small_dataset(std::size_t n, std::uint64_t seed,
                             std::size_t feature_dim = 16, bool openface = false,
                             const std::string& prefix = "r") {
  SyntheticWorld world(small_params(feature_dim, openface), 99);
  SampleOptions o;
  o.n = n;
  o.seed = seed;
  o.id_prefix = prefix;
  return world.sample(o);
}

// Max relative error of backward() against central differences of
// sum(output .* r), over both the parameters and the input batch.
inline double mlp_gradient_error(const HeadModel& model, const Matrix& x,
                                 const Matrix& r) {
  const Gradients g = backward(model, forward(model, x), r);
  auto weighted_sum = [&](const HeadModel& m, const Matrix& in) {
    const Matrix out = forward(m, in).output();
    double s = 0.0;
    for (std::size_t i = 0; i < out.values().size(); ++i) {
      s += out.values()[i] * r.values()[i];
    }
    return s;
  };
  const std::vector<double> p(model.params().begin(), model.params().end());
  const auto dp = oracle::numeric_gradient(
      [&](const std::vector<double>& q) {
        HeadModel m = model;
        std::copy(q.begin(), q.end(), m.params().begin());
        return weighted_sum(m, x);
      },
      p);
  const std::vector<double> xv(x.values().begin(), x.values().end());
  const auto dx = oracle::numeric_gradient(
      [&](const std::vector<double>& q) {
        Matrix in(x.rows(), x.cols());
        std::copy(q.begin(), q.end(), in.values().begin());
        return weighted_sum(model, in);
      },
      xv);
  const std::vector<double> gx(g.input.values().begin(), g.input.values().end());
  return std::max(oracle::max_relative_error(g.params, dp),
                  oracle::max_relative_error(gx, dx));
}

}  // namespace mtaffect::testing

#endif  // MTAFFECT_TESTS_TEST_UTIL_H_
