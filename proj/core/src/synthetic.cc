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

#include "mtaffect/synthetic.h"

#include <algorithm>
#include <array>
#include <cstdio>

#include "mtaffect/error.h"
#include "mtaffect/random.h"

namespace mtaffect {
namespace {

std::string make_id(const std::string& prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu", i);
  return prefix + buf;
}

}  // namespace

SyntheticWorld::SyntheticWorld(SyntheticParams params, std::uint64_t seed)
    : params_(params) {
  if (params_.num_classes < 2) throw RangeError("synthetic: need >= 2 classes");
  if (params_.feature_dim < 1) throw RangeError("synthetic: feature_dim must be >= 1");
  Rng rng(seed);
  const auto classes = static_cast<std::size_t>(params_.num_classes);
  class_means_.assign(classes, std::vector<double>(params_.feature_dim));
  for (auto& mean : class_means_) {
    for (double& v : mean) v = params_.mean_scale * rng.normal();
  }
  au_dirs_.assign(kNumAus, std::vector<double>(params_.feature_dim));
  for (auto& dir : au_dirs_) {
    for (double& v : dir) v = params_.au_scale * rng.normal();
  }
  // Each class lights up a distinct block of four OpenFace channels plus one
  // channel shared with its neighbor.
  openface_patterns_.resize(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t k = 0; k < 4; ++k) {
      openface_patterns_[c].push_back(static_cast<int>((4 * c + k) % kOpenFaceDim));
    }
    openface_patterns_[c].push_back(
        static_cast<int>((4 * ((c + 1) % classes)) % kOpenFaceDim));
  }
}

Record SyntheticWorld::draw(Rng& rng, const std::string& id) const {
  const SyntheticParams& p = params_;
  Record r;
  r.features.id = id;
  const int c = static_cast<int>(rng.index(static_cast<std::uint64_t>(p.num_classes)));
  std::array<std::uint8_t, kNumAus> aus{};
  for (auto& a : aus) a = rng.uniform() < p.au_rate ? 1 : 0;

  r.features.embedding = class_means_[static_cast<std::size_t>(c)];
  for (std::size_t j = 0; j < kNumAus; ++j) {
    const double sign = aus[j] ? 1.0 : -1.0;
    for (std::size_t i = 0; i < p.feature_dim; ++i) {
      r.features.embedding[i] += sign * au_dirs_[j][i];
    }
  }
  for (double& v : r.features.embedding) v += p.noise * rng.normal();

  r.features.logits.assign(kLogitsDim, 0.0);
  for (std::size_t k = 0; k < 8; ++k) {
    const double hit = static_cast<int>(k) == c % 8 ? p.expr_logit_gain : 0.0;
    r.features.logits[k] = hit + p.logit_noise * rng.normal();
  }
  const double u0 = rng.uniform(-1.0, 1.0);
  const double u1 = rng.uniform(-1.0, 1.0);
  r.features.logits[kLogitValence] = u0;
  r.features.logits[kLogitArousal] = u1;

  const double valence = 0.6 * u0 + 0.2 * u1 + p.va_noise * rng.normal();
  const double arousal = -0.2 * u0 + 0.6 * u1 + p.va_noise * rng.normal();

  if (p.with_openface) {
    std::vector<double> of(kOpenFaceDim, 0.0);
    for (int k : openface_patterns_[static_cast<std::size_t>(c)]) {
      of[static_cast<std::size_t>(k)] = 1.0;
    }
    for (double& v : of) v += p.openface_noise * rng.normal();
    r.features.openface_aus = std::move(of);
  }

  r.labels.expression = c;
  r.labels.valence = std::clamp(valence, -1.0, 1.0);
  r.labels.arousal = std::clamp(arousal, -1.0, 1.0);
  r.labels.aus = aus;
  return r;
}

Dataset SyntheticWorld::sample(const SampleOptions& options) const {
  Dataset d;
  d.manifest.feature_dim = params_.feature_dim;
  d.manifest.num_expr_classes = params_.num_classes;
  if (params_.with_openface) {
    d.manifest.openface_dim = kOpenFaceDim;
    d.manifest.openface_file = "openface.csv";
  }
  Rng rng(options.seed);
  Rng keep(derive_seed(options.seed, 1));
  d.records.reserve(options.n);
  for (std::size_t i = 0; i < options.n; ++i) {
    Record r = draw(rng, make_id(options.id_prefix, i));
    if (keep.uniform() >= options.expr_rate) r.labels.expression.reset();
    if (keep.uniform() >= options.va_rate) {
      r.labels.valence.reset();
      r.labels.arousal.reset();
    }
    if (keep.uniform() >= options.au_rate) r.labels.aus.reset();
    d.records.push_back(std::move(r));
  }
  return d;
}

std::vector<Record> SyntheticWorld::unlabeled(std::size_t n, std::uint64_t seed,
                                              const std::string& id_prefix) const {
  Rng rng(seed);
  std::vector<Record> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Record r = draw(rng, make_id(id_prefix, i));
    r.labels = LabelSet{};
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace mtaffect
