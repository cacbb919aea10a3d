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

// Seeded synthetic datasets with known ground truth.
//
// A SyntheticWorld fixes the generative parameters (class means, AU
// directions, the valence/arousal map and OpenFace class patterns); sample()
// draws records from it. Train and validation splits drawn from the same
// world share those parameters.
//
//   expression  c ~ Uniform{0..C-1}
//   AUs         a_j ~ Bernoulli(au_rate)
//   embedding   mean_c + sum_j (2 a_j - 1) au_dir_j + N(0, noise^2 I)
//   logits      l_k = expr_logit_gain [k == c mod 8] + N(0, logit_noise^2)
//               for k < 8; (l_8, l_9) ~ Uniform(-1, 1)^2
//   valence     clamp(0.6 l_8 + 0.2 l_9 + N(0, va_noise^2), -1, 1)
//   arousal     clamp(-0.2 l_8 + 0.6 l_9 + N(0, va_noise^2), -1, 1)
//   openface    f_k = [k in pattern_c] + N(0, openface_noise^2)
//
// Each label group is then kept with its own probability.

#ifndef MTAFFECT_SYNTHETIC_H_
#define MTAFFECT_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mtaffect/featstore.h"

namespace mtaffect {

struct SyntheticParams {
  std::size_t feature_dim = kDefaultFeatureDim;
  int num_classes = 8;
  double mean_scale = 0.3;
  double au_scale = 0.3;
  double noise = 1.0;
  double expr_logit_gain = 1.0;
  double logit_noise = 0.3;
  double va_noise = 0.05;
  double au_rate = 0.4;
  double openface_noise = 0.3;
  bool with_openface = false;
};

struct SampleOptions {
  std::size_t n = 100;
  std::uint64_t seed = 0;
  std::string id_prefix = "r";
  double expr_rate = 1.0;
  double va_rate = 1.0;
  double au_rate = 1.0;
};

class Rng;

class SyntheticWorld {
 public:
  SyntheticWorld(SyntheticParams params, std::uint64_t seed);

  Dataset sample(const SampleOptions& options) const;

  // Records with features drawn as usual but every label absent.
  std::vector<Record> unlabeled(std::size_t n, std::uint64_t seed,
                                const std::string& id_prefix) const;

  const SyntheticParams& params() const { return params_; }

 private:
  Record draw(Rng& rng, const std::string& id) const;

  SyntheticParams params_;
  std::vector<std::vector<double>> class_means_;
  std::vector<std::vector<double>> au_dirs_;
  std::vector<std::vector<int>> openface_patterns_;
};

}  // namespace mtaffect

#endif  // MTAFFECT_SYNTHETIC_H_
