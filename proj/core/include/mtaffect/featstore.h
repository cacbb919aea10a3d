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

// On-disk dataset format and per-task views.
//
// A dataset is a manifest.json plus up to three CSV tables:
//
//   manifest.json  {version: 1, feature_dim, logits_dim, openface_dim (0|35),
//                   num_expr_classes, features_file, labels_file,
//                   openface_file?, counts?}
//   features.csv   id,e0..e{D-1},l0..l9
//   labels.csv     id,expression,valence,arousal,au1,au2,au4,au6,au7,au10,
//                  au12,au15,au23,au24,au25,au26
//   openface.csv   id,f0..f34
//
// File names in the manifest are relative to the manifest's directory. In
// labels.csv an empty field means the label is absent. Valence and arousal
// are absent together; the twelve AU columns are absent together.

#ifndef MTAFFECT_FEATSTORE_H_
#define MTAFFECT_FEATSTORE_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtaffect/matrix.h"

namespace mtaffect {

inline constexpr std::size_t kDefaultFeatureDim = 1280;
inline constexpr std::size_t kLogitsDim = 10;
inline constexpr std::size_t kOpenFaceDim = 35;
inline constexpr std::size_t kNumAus = 12;
inline constexpr int kFormatVersion = 1;

// Logits positions: 8 AffectNet expression logits (Neutral, Happy, Sad,
// Surprise, Fear, Anger, Disgust, Contempt), then valence, then arousal.
inline constexpr std::size_t kLogitValence = 8;
inline constexpr std::size_t kLogitArousal = 9;

inline constexpr std::array<int, kNumAus> kAuNumbers = {1,  2,  4,  6,  7,  10,
                                                        12, 15, 23, 24, 25, 26};

inline const std::vector<std::string>& mtl_expression_names() {
  static const std::vector<std::string> names = {
      "Neutral", "Anger",   "Disgust",  "Fear",
      "Happiness", "Sadness", "Surprise", "Other"};
  return names;
}

inline const std::vector<std::string>& lsd_expression_names() {
  static const std::vector<std::string> names = {
      "Surprise", "Fear", "Disgust", "Anger", "Happiness", "Sadness"};
  return names;
}

// Class names for a C-class expression task: the MTL order for 8, the LSD
// order for 6, "class<k>" otherwise.
std::vector<std::string> expression_class_names(int num_classes);

enum class Task { kExpr, kVa, kAu, kExprOpenFace };

std::string_view task_name(Task task);
// Accepts "EXPR", "VA", "AU", "EXPR_OPENFACE" (case-insensitive).
Task parse_task(std::string_view name);

struct FeatureRecord {
  std::string id;
  std::vector<double> embedding;
  std::vector<double> logits;
  std::optional<std::vector<double>> openface_aus;
};

struct LabelSet {
  std::optional<int> expression;
  std::optional<double> valence;
  std::optional<double> arousal;
  std::optional<std::array<std::uint8_t, kNumAus>> aus;

  bool has(Task task) const;
  bool empty() const {
    return !expression && !valence && !arousal && !aus;
  }
  friend bool operator==(const LabelSet&, const LabelSet&) = default;
};

struct Record {
  FeatureRecord features;
  LabelSet labels;
};

struct LabelCounts {
  std::size_t expr = 0;
  std::size_t va = 0;
  std::size_t au = 0;
  std::size_t openface = 0;
  friend bool operator==(const LabelCounts&, const LabelCounts&) = default;
};

struct Manifest {
  int version = kFormatVersion;
  std::size_t feature_dim = kDefaultFeatureDim;
  std::size_t logits_dim = kLogitsDim;
  std::size_t openface_dim = 0;
  int num_expr_classes = 8;
  std::string features_file = "features.csv";
  std::string labels_file = "labels.csv";
  std::optional<std::string> openface_file;
  // Claimed counts; checked against the records by validate_dataset.
  std::optional<LabelCounts> counts;
  std::optional<std::vector<std::size_t>> class_counts;
};

struct Dataset {
  Manifest manifest;
  std::vector<Record> records;

  std::size_t size() const { return records.size(); }
  bool has_openface() const { return manifest.openface_dim > 0; }
};

struct ValidationReport {
  bool ok = true;
  LabelCounts counts;
  // N_c for c in [0, num_expr_classes).
  std::vector<std::size_t> class_counts;
  std::vector<std::string> issues;
};

struct TaskView {
  Task task;
  std::vector<std::size_t> indices;

  std::size_t size() const { return indices.size(); }
};

// Loads and validates a dataset. Throws DatasetError naming the file, line,
// record id and field for any malformed input or violated invariant.
Dataset load_dataset(const std::filesystem::path& manifest_path);

// Writes manifest.json and the CSV tables into `dir`, filling in the
// manifest counts. Reals are printed with 17 significant digits, so
// load_dataset(save_dataset(d)) reproduces every value bit-for-bit.
std::filesystem::path save_dataset(const Dataset& dataset,
                                   const std::filesystem::path& dir);

// Never throws; violations are listed in the report.
ValidationReport validate_dataset(const Dataset& dataset);

TaskView task_view(const Dataset& dataset, Task task);

// Per-class counts over the records in `view` (which must carry expression
// labels).
std::vector<std::size_t> class_counts(const Dataset& dataset,
                                      const TaskView& view);

// Input matrices for the heads, with one row per view index.
Matrix embeddings_with_logits(const Dataset& dataset,
                              std::span<const std::size_t> indices);
Matrix logits_matrix(const Dataset& dataset,
                     std::span<const std::size_t> indices);
Matrix openface_matrix(const Dataset& dataset,
                       std::span<const std::size_t> indices);

std::vector<std::size_t> all_indices(const Dataset& dataset);

}  // namespace mtaffect

#endif  // MTAFFECT_FEATSTORE_H_
