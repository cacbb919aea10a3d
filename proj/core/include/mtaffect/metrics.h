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

// Evaluation metrics for the affect tasks.
//
// All reductions run left to right over the inputs in a single thread, so
// every function is bit-reproducible for identical inputs. Precision, recall
// and F1 are 0 whenever their denominator is 0.

#ifndef MTAFFECT_METRICS_H_
#define MTAFFECT_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mtaffect/matrix.h"

namespace mtaffect {

// Denominators below this make ccc() return 0.
inline constexpr double kCccEpsilon = 1e-12;

struct Moments {
  double mean_x = 0.0;
  double mean_y = 0.0;
  double var_x = 0.0;   // population (1/n)
  double var_y = 0.0;
  double cov_xy = 0.0;
};

// Population first and second moments of a paired sample.
Moments paired_moments(std::span<const double> x, std::span<const double> y);

// Lin's concordance correlation coefficient with population moments:
//   2 cov(x, y) / (var(x) + var(y) + (mean(x) - mean(y))^2)
double ccc(std::span<const double> x, std::span<const double> y);

double rmse(std::span<const double> x, std::span<const double> y);

struct F1Result {
  double macro = 0.0;
  std::vector<double> per_class;
};

// Macro average over all num_classes classes, including ones that never
// occur in either sequence.
F1Result macro_f1(std::span<const int> truth, std::span<const int> pred,
                  int num_classes);

double accuracy(std::span<const int> truth, std::span<const int> pred);

// F1 from raw counts, with the zero-denominator convention.
double f1_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn);

// Binary label matrix; row per sample, column per label, values 0/1.
struct BinaryMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> data;

  BinaryMatrix() = default;
  BinaryMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0) {}
  std::uint8_t& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  std::uint8_t operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }
};

struct AuF1Result {
  std::vector<double> per_au;
  double macro = 0.0;
};

// Label j is predicted present iff score >= thresholds[j].
AuF1Result binary_f1_per_au(const BinaryMatrix& truth, const Matrix& scores,
                            std::span<const double> thresholds);

struct ConfusionMatrix {
  std::size_t num_classes = 0;
  std::vector<std::int64_t> counts;  // row-major, [true][pred]
  std::vector<std::string> class_names;

  std::int64_t operator()(std::size_t truth, std::size_t pred) const {
    return counts[truth * num_classes + pred];
  }
  std::int64_t total() const;
};

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> pred,
                          int num_classes,
                          std::vector<std::string> class_names = {});

// Per-class and macro F1 recomputed from a confusion matrix.
F1Result macro_f1_from_confusion(const ConfusionMatrix& cm);

// CSV with a header row "true\pred,<names...>" and one row per true class.
std::string confusion_to_csv(const ConfusionMatrix& cm);

struct MtlScores {
  double p_va = 0.0;
  double p_expr = 0.0;
  double p_au = 0.0;
  double p_mtl = 0.0;
  double ccc_valence = 0.0;
  double ccc_arousal = 0.0;
  std::vector<double> per_class_f1;
  std::vector<double> per_au_f1;
};

// p_va = (ccc_v + ccc_a) / 2 and p_mtl = (p_va + p_expr) + p_au.
MtlScores mtl_score(double ccc_v, double ccc_a, double p_expr, double p_au);

}  // namespace mtaffect

#endif  // MTAFFECT_METRICS_H_
