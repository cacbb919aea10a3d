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

#include "mtaffect/metrics.h"

#include <algorithm>
#include <cmath>

#include "mtaffect/error.h"

namespace mtaffect {
namespace {

void check_classes(std::span<const int> truth, std::span<const int> pred,
                   int num_classes) {
  if (truth.size() != pred.size()) {
    throw ShapeError("class sequences differ in length: " +
                     std::to_string(truth.size()) + " vs " +
                     std::to_string(pred.size()));
  }
  if (num_classes < 1) throw RangeError("num_classes must be >= 1");
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= num_classes || pred[i] < 0 ||
        pred[i] >= num_classes) {
      throw RangeError("class index out of range at position " +
                       std::to_string(i));
    }
  }
}

}  // namespace

Moments paired_moments(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  Moments m;
  for (std::size_t i = 0; i < x.size(); ++i) {
    m.mean_x += x[i];
    m.mean_y += y[i];
  }
  m.mean_x /= n;
  m.mean_y /= n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - m.mean_x;
    const double dy = y[i] - m.mean_y;
    m.var_x += dx * dx;
    m.var_y += dy * dy;
    m.cov_xy += dx * dy;
  }
  m.var_x /= n;
  m.var_y /= n;
  m.cov_xy /= n;
  return m;
}

double ccc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ShapeError("ccc: length mismatch " + std::to_string(x.size()) +
                     " vs " + std::to_string(y.size()));
  }
  if (x.size() < 2) throw ShapeError("ccc: need at least 2 samples");
  const Moments m = paired_moments(x, y);
  const double shift = m.mean_x - m.mean_y;
  const double denom = m.var_x + m.var_y + shift * shift;
  if (denom < kCccEpsilon) return 0.0;
  return std::clamp(2.0 * m.cov_xy / denom, -1.0, 1.0);
}

double rmse(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("rmse: length mismatch");
  if (x.empty()) throw ShapeError("rmse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(x.size()));
}

double f1_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  // Equal to 2PR / (P + R), and 0 whenever P or R has a zero denominator or
  // tp == 0. One division keeps equal ratios bit-identical.
  const std::int64_t denom = 2 * tp + fp + fn;
  if (tp == 0 || denom == 0) return 0.0;
  return static_cast<double>(2 * tp) / static_cast<double>(denom);
}

F1Result macro_f1(std::span<const int> truth, std::span<const int> pred,
                  int num_classes) {
  return macro_f1_from_confusion(confusion(truth, pred, num_classes));
}

double accuracy(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size()) throw ShapeError("accuracy: length mismatch");
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == pred[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

AuF1Result binary_f1_per_au(const BinaryMatrix& truth, const Matrix& scores,
                            std::span<const double> thresholds) {
  if (truth.rows != scores.rows() || truth.cols != scores.cols() ||
      thresholds.size() != truth.cols) {
    throw ShapeError("binary_f1_per_au: shape mismatch (labels " +
                     std::to_string(truth.rows) + "x" +
                     std::to_string(truth.cols) + ", scores " +
                     std::to_string(scores.rows()) + "x" +
                     std::to_string(scores.cols()) + ", thresholds " +
                     std::to_string(thresholds.size()) + ")");
  }
  AuF1Result result;
  result.per_au.assign(truth.cols, 0.0);
  for (std::size_t j = 0; j < truth.cols; ++j) {
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.rows; ++i) {
      const bool predicted = scores(i, j) >= thresholds[j];
      const bool actual = truth(i, j) != 0;
      tp += predicted && actual;
      fp += predicted && !actual;
      fn += !predicted && actual;
    }
    result.per_au[j] = f1_from_counts(tp, fp, fn);
  }
  double sum = 0.0;
  for (double f : result.per_au) sum += f;
  result.macro = truth.cols ? sum / static_cast<double>(truth.cols) : 0.0;
  return result;
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (std::int64_t c : counts) t += c;
  return t;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> pred,
                          int num_classes, std::vector<std::string> class_names) {
  check_classes(truth, pred, num_classes);
  ConfusionMatrix cm;
  cm.num_classes = static_cast<std::size_t>(num_classes);
  cm.counts.assign(cm.num_classes * cm.num_classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++cm.counts[static_cast<std::size_t>(truth[i]) * cm.num_classes +
                static_cast<std::size_t>(pred[i])];
  }
  if (class_names.empty()) {
    for (int c = 0; c < num_classes; ++c) class_names.push_back(std::to_string(c));
  }
  if (class_names.size() != cm.num_classes) {
    throw ShapeError("confusion: class_names size mismatch");
  }
  cm.class_names = std::move(class_names);
  return cm;
}

F1Result macro_f1_from_confusion(const ConfusionMatrix& cm) {
  const std::size_t k = cm.num_classes;
  F1Result result;
  result.per_class.assign(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    std::int64_t tp = cm(c, c), fp = 0, fn = 0;
    for (std::size_t o = 0; o < k; ++o) {
      if (o == c) continue;
      fp += cm(o, c);
      fn += cm(c, o);
    }
    result.per_class[c] = f1_from_counts(tp, fp, fn);
  }
  double sum = 0.0;
  for (double f : result.per_class) sum += f;
  result.macro = k ? sum / static_cast<double>(k) : 0.0;
  return result;
}

std::string confusion_to_csv(const ConfusionMatrix& cm) {
  std::string out = "true\\pred";
  for (const auto& name : cm.class_names) (out += ',') += name;
  out += '\n';
  for (std::size_t r = 0; r < cm.num_classes; ++r) {
    out += cm.class_names[r];
    for (std::size_t c = 0; c < cm.num_classes; ++c) {
      (out += ',') += std::to_string(cm(r, c));
    }
    out += '\n';
  }
  return out;
}

MtlScores mtl_score(double ccc_v, double ccc_a, double p_expr, double p_au) {
  MtlScores s;
  s.ccc_valence = ccc_v;
  s.ccc_arousal = ccc_a;
  s.p_va = (ccc_v + ccc_a) / 2.0;
  s.p_expr = p_expr;
  s.p_au = p_au;
  s.p_mtl = (s.p_va + s.p_expr) + s.p_au;
  return s;
}

}  // namespace mtaffect
