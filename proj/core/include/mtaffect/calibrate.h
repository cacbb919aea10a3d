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

// Post-hoc decisions: argmax, two-model score blending, grid searches for the
// blending weight and per-AU thresholds, and full evaluation runs.
//
// Search grids are {k / K} for integer k, with K = round(1 / grid_step), so
// grid values are the doubles nearest to exact decimals. Both searches return
// the smallest grid value that attains the maximum; F1 values within
// kSearchTieTolerance of each other count as equal.

#ifndef MTAFFECT_CALIBRATE_H_
#define MTAFFECT_CALIBRATE_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mtaffect/featstore.h"
#include "mtaffect/matrix.h"
#include "mtaffect/metrics.h"
#include "mtaffect/net.h"
#include "mtaffect/training.h"

namespace mtaffect {

inline constexpr double kDefaultGridStep = 0.1;
inline constexpr double kSearchTieTolerance = 1e-12;

struct CalibrationProfile {
  double blend_weight = 1.0;
  std::vector<double> au_thresholds = std::vector<double>(kNumAus, 0.5);
  double grid_step = kDefaultGridStep;
  // Name of the split the values were tuned on; empty when untuned.
  std::string tuned_on;
  std::uint64_t seed = 0;
};

// Number of grid intervals K for a step; throws unless K * step == 1 within
// 1e-9.
int grid_intervals(double grid_step);

// Elementwise w * s_pre + (1 - w) * s_ft.
Matrix blend(double w, const Matrix& s_pre, const Matrix& s_ft);

// Row-wise argmax; ties go to the lowest class index.
std::vector<int> decide(const Matrix& scores);

struct BlendSearchResult {
  double weight = 0.0;
  double f1 = 0.0;
};

// Exhaustive search over w in {0, 1/K, ..., 1} maximizing macro F1 (over
// s_pre.cols() classes) of decide(blend(w, s_pre, s_ft)).
BlendSearchResult search_blend_weight(const Matrix& s_pre, const Matrix& s_ft,
                                      std::span<const int> labels,
                                      double grid_step = kDefaultGridStep);

struct ThresholdSearchResult {
  std::vector<double> thresholds;
  std::vector<double> per_au_f1;
};

// Per column independently, the smallest t in {1/K, ..., (K-1)/K} maximizing
// binary F1 with prediction score >= t.
ThresholdSearchResult search_au_thresholds(const Matrix& scores,
                                           const BinaryMatrix& truth,
                                           double grid_step = kDefaultGridStep);

// Raw model outputs for a dataset, one row per record (file order). Rows for
// records without OpenFace features hold the expression head scores in
// `openface` as well, so blending leaves them unchanged.
struct ModelScores {
  std::vector<std::string> ids;
  Matrix expr;      // n x C softmax
  Matrix va;        // n x 2
  Matrix au;        // n x 12 sigmoid
  std::optional<Matrix> openface;  // n x C softmax
};

ModelScores compute_scores(const HeadBundle& bundle, const Dataset& d);

// Expression scores after the optional OpenFace blend:
// blend(w, expr, openface) when openface scores are present.
Matrix blended_expr_scores(const ModelScores& scores, double w);

// Per-task metrics; tasks without labels in the dataset are absent and left
// out of p_mtl, which is then flagged partial.
struct EvalReport {
  std::optional<double> p_va;
  std::optional<double> p_expr;
  std::optional<double> p_au;
  double p_mtl = 0.0;
  bool partial = false;

  std::optional<double> ccc_valence;
  std::optional<double> ccc_arousal;
  std::optional<double> rmse_valence;
  std::optional<double> rmse_arousal;
  std::optional<double> expr_accuracy;
  std::vector<double> per_class_f1;
  std::vector<double> per_au_f1;
  std::optional<ConfusionMatrix> confusion;

  std::size_t num_records = 0;
  LabelCounts counts;
  std::vector<double> au_thresholds;
  double blend_weight = 1.0;
  std::string tuned_on;
  std::uint64_t seed = 0;
};

// Scores each task on its labeled subset using the profile's blend weight
// and thresholds.
EvalReport evaluate_scores(const ModelScores& scores, const Dataset& d,
                           const CalibrationProfile& profile);

// Runs the heads and evaluates. With `openface_blend` the expression scores
// are blend(w, expr head, OpenFace MLP); both are softmax outputs.
EvalReport evaluate_mtl(const HeadBundle& bundle, const Dataset& d,
                        const CalibrationProfile& profile,
                        const std::optional<std::pair<HeadModel, double>>&
                            openface_blend = std::nullopt);

// Report assembled directly from the four challenge components.
EvalReport report_from_components(double p_va, double p_expr, double p_au);

struct LsdReport {
  double weight = 0.0;
  double f1 = 0.0;              // blended macro F1 at the chosen weight
  double pretrained_f1 = 0.0;   // w = 1
  double finetuned_f1 = 0.0;    // w = 0
  std::vector<double> per_class_f1;  // blended
  ConfusionMatrix pretrained_confusion;
  ConfusionMatrix blended_confusion;
};

LsdReport evaluate_lsd(const Matrix& s_pre, const Matrix& s_ft,
                       std::span<const int> labels,
                       double grid_step = kDefaultGridStep);

// profile.json: {blend_weight, au_thresholds[12], grid_step, tuned_on, seed}
std::string profile_to_json(const CalibrationProfile& profile);
CalibrationProfile profile_from_json(std::string_view text);
void save_profile(const std::filesystem::path& path,
                  const CalibrationProfile& profile);
CalibrationProfile load_profile(const std::filesystem::path& path);

// metrics.json mirroring EvalReport; absent metrics are omitted.
std::string report_to_json(const EvalReport& report);
std::string lsd_report_to_json(const LsdReport& report);

// predictions.csv: id,expression,valence,arousal,au1,...,au26 with
// calibrated decisions.
std::string predictions_to_csv(const ModelScores& scores,
                               const CalibrationProfile& profile);

// scores.csv: id,s0..s{C-1},valence,arousal,au1,...,au26 with raw outputs
// (blended expression scores). read_scores_csv is the inverse, returning
// expression, va and AU blocks.
std::string scores_to_csv(const ModelScores& scores, double blend_weight);
ModelScores read_scores_csv(const std::filesystem::path& path);

}  // namespace mtaffect

#endif  // MTAFFECT_CALIBRATE_H_
