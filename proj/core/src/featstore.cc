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

#include "mtaffect/featstore.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "mtaffect/error.h"
#include "mtaffect/textio.h"

namespace mtaffect {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& label_header() {
  static const std::vector<std::string> header = [] {
    std::vector<std::string> h = {"id", "expression", "valence", "arousal"};
    for (int au : kAuNumbers) h.push_back("au" + std::to_string(au));
    return h;
  }();
  return header;
}

std::vector<std::string> feature_header(std::size_t feature_dim,
                                        std::size_t logits_dim) {
  std::vector<std::string> h = {"id"};
  for (std::size_t i = 0; i < feature_dim; ++i) h.push_back("e" + std::to_string(i));
  for (std::size_t i = 0; i < logits_dim; ++i) h.push_back("l" + std::to_string(i));
  return h;
}

std::vector<std::string> openface_header(std::size_t dim) {
  std::vector<std::string> h = {"id"};
  for (std::size_t i = 0; i < dim; ++i) h.push_back("f" + std::to_string(i));
  return h;
}

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

// Line-oriented reader that keeps enough context for error messages.
class CsvTable {
 public:
  explicit CsvTable(const fs::path& path)
      : path_(path), text_(read_text_file(path)) {}

  const fs::path& path() const { return path_; }

  bool next(std::vector<std::string_view>& fields) {
    while (pos_ < text_.size()) {
      std::size_t end = text_.find('\n', pos_);
      if (end == std::string::npos) end = text_.size();
      std::string_view line(text_.data() + pos_, end - pos_);
      pos_ = end + 1;
      ++line_;
      if (line.empty() || line == "\r") continue;
      fields = split_csv_line(line);
      return true;
    }
    return false;
  }

  void expect_header(const std::vector<std::string>& expected) {
    std::vector<std::string_view> fields;
    if (!next(fields)) fail("missing header row");
    bool match = fields.size() == expected.size();
    for (std::size_t i = 0; match && i < fields.size(); ++i) {
      match = fields[i] == expected[i];
    }
    if (!match) {
      std::string got;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) got += ',';
        got += fields[i];
      }
      if (got.size() > 80) got = got.substr(0, 77) + "...";
      fail("unexpected header '" + got + "' (expected " +
           std::to_string(expected.size()) + " columns starting '" +
           expected.front() + "," + expected[1] + "')");
    }
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw DatasetError(path_.string() + ":" + std::to_string(line_) + ": " +
                       what);
  }

  [[noreturn]] void fail(std::string_view id, std::string_view field,
                         const std::string& what) const {
    fail("id '" + std::string(id) + "' field '" + std::string(field) +
         "': " + what);
  }

  double real(std::string_view id, std::string_view field,
              std::string_view text) const {
    const auto v = parse_double(text);
    if (!v) fail(id, field, "not a number: '" + std::string(text) + "'");
    if (!std::isfinite(*v)) fail(id, field, "non-finite value");
    return *v;
  }

 private:
  fs::path path_;
  std::string text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

Manifest parse_manifest(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw DatasetError(path.string() + ": malformed manifest: " + e.what());
  }
  auto fail = [&](const std::string& what) -> void {
    throw DatasetError(path.string() + ": " + what);
  };
  if (!j.is_object()) fail("manifest must be a JSON object");
  Manifest m;
  try {
    m.version = j.at("version").get<int>();
    m.feature_dim = j.at("feature_dim").get<std::size_t>();
    m.logits_dim = j.at("logits_dim").get<std::size_t>();
    m.openface_dim = j.value("openface_dim", std::size_t{0});
    m.num_expr_classes = j.at("num_expr_classes").get<int>();
    m.features_file = j.at("features_file").get<std::string>();
    m.labels_file = j.at("labels_file").get<std::string>();
    if (j.contains("openface_file") && !j["openface_file"].is_null()) {
      m.openface_file = j["openface_file"].get<std::string>();
    }
    if (j.contains("counts")) {
      const json& c = j["counts"];
      LabelCounts counts;
      counts.expr = c.at("expr").get<std::size_t>();
      counts.va = c.at("va").get<std::size_t>();
      counts.au = c.at("au").get<std::size_t>();
      counts.openface = c.value("openface", std::size_t{0});
      m.counts = counts;
    }
    if (j.contains("class_counts")) {
      m.class_counts = j["class_counts"].get<std::vector<std::size_t>>();
    }
  } catch (const json::exception& e) {
    throw DatasetError(path.string() + ": malformed manifest: " + e.what());
  }
  if (m.version != kFormatVersion) {
    fail("unsupported manifest version " + std::to_string(m.version));
  }
  if (m.feature_dim < 1) fail("feature_dim must be >= 1");
  if (m.logits_dim != kLogitsDim) {
    fail("logits_dim must be " + std::to_string(kLogitsDim) + ", got " +
         std::to_string(m.logits_dim));
  }
  if (m.openface_dim != 0 && m.openface_dim != kOpenFaceDim) {
    fail("openface_dim must be 0 or 35, got " +
         std::to_string(m.openface_dim));
  }
  if (m.openface_dim > 0 && !m.openface_file) {
    fail("openface_dim is 35 but openface_file is missing");
  }
  if (m.num_expr_classes < 2) fail("num_expr_classes must be >= 2");
  return m;
}

json manifest_to_json(const Manifest& m, const LabelCounts& counts,
                      const std::vector<std::size_t>& class_counts) {
  json j;
  j["version"] = m.version;
  j["feature_dim"] = m.feature_dim;
  j["logits_dim"] = m.logits_dim;
  j["openface_dim"] = m.openface_dim;
  j["num_expr_classes"] = m.num_expr_classes;
  j["features_file"] = m.features_file;
  j["labels_file"] = m.labels_file;
  if (m.openface_file) j["openface_file"] = *m.openface_file;
  j["counts"] = {{"expr", counts.expr},
                 {"va", counts.va},
                 {"au", counts.au},
                 {"openface", counts.openface}};
  j["class_counts"] = class_counts;
  return j;
}

LabelSet parse_labels(const CsvTable& table,
                      const std::vector<std::string_view>& f,
                      int num_classes) {
  const auto& header = label_header();
  const std::string_view id = f[0];
  LabelSet labels;
  if (!f[1].empty()) {
    const auto v = parse_int(f[1]);
    if (!v) table.fail(id, "expression", "not an integer: '" + std::string(f[1]) + "'");
    if (*v < 0 || *v >= num_classes) {
      table.fail(id, "expression",
                 "class " + std::to_string(*v) + " out of range [0, " +
                     std::to_string(num_classes) + ")");
    }
    labels.expression = static_cast<int>(*v);
  }
  if (f[2].empty() != f[3].empty()) {
    table.fail(id, f[2].empty() ? "valence" : "arousal",
               "valence and arousal must be present together");
  }
  if (!f[2].empty()) {
    for (int k = 2; k <= 3; ++k) {
      const double v = table.real(id, header[k], f[k]);
      if (v < -1.0 || v > 1.0) {
        table.fail(id, header[k],
                   "value " + format_double(v) + " out of range [-1, 1]");
      }
      (k == 2 ? labels.valence : labels.arousal) = v;
    }
  }
  std::size_t present = 0;
  for (std::size_t k = 0; k < kNumAus; ++k) present += !f[4 + k].empty();
  if (present != 0 && present != kNumAus) {
    table.fail(id, "au", "AU columns must be all present or all empty");
  }
  if (present == kNumAus) {
    std::array<std::uint8_t, kNumAus> aus{};
    for (std::size_t k = 0; k < kNumAus; ++k) {
      const std::string_view text = f[4 + k];
      if (text != "0" && text != "1") {
        table.fail(id, header[4 + k],
                   "AU value must be 0 or 1, got '" + std::string(text) + "'");
      }
      aus[k] = text == "1" ? 1 : 0;
    }
    labels.aus = aus;
  }
  return labels;
}

}  // namespace

std::vector<std::string> expression_class_names(int num_classes) {
  if (num_classes == 8) return mtl_expression_names();
  if (num_classes == 6) return lsd_expression_names();
  std::vector<std::string> names;
  for (int c = 0; c < num_classes; ++c) names.push_back("class" + std::to_string(c));
  return names;
}

std::string_view task_name(Task task) {
  switch (task) {
    case Task::kExpr:
      return "EXPR";
    case Task::kVa:
      return "VA";
    case Task::kAu:
      return "AU";
    case Task::kExprOpenFace:
      return "EXPR_OPENFACE";
  }
  return "?";
}

Task parse_task(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  for (Task t : {Task::kExpr, Task::kVa, Task::kAu, Task::kExprOpenFace}) {
    if (upper == task_name(t)) return t;
  }
  throw RangeError("unknown task '" + std::string(name) + "'");
}

bool LabelSet::has(Task task) const {
  switch (task) {
    case Task::kExpr:
    case Task::kExprOpenFace:
      return expression.has_value();
    case Task::kVa:
      return valence.has_value() && arousal.has_value();
    case Task::kAu:
      return aus.has_value();
  }
  return false;
}

Dataset load_dataset(const fs::path& manifest_path) {
  Dataset d;
  d.manifest = parse_manifest(manifest_path);
  const Manifest& m = d.manifest;
  const fs::path base = manifest_path.parent_path();

  std::unordered_map<std::string, std::size_t> position;
  {
    CsvTable table(base / m.features_file);
    const auto header = feature_header(m.feature_dim, m.logits_dim);
    table.expect_header(header);
    std::vector<std::string_view> f;
    while (table.next(f)) {
      if (f.size() != header.size()) {
        table.fail("expected " + std::to_string(header.size()) +
                   " fields, got " + std::to_string(f.size()));
      }
      const std::string id(f[0]);
      if (id.empty()) table.fail("empty id");
      if (!position.emplace(id, d.records.size()).second) {
        table.fail("duplicate id '" + id + "'");
      }
      Record r;
      r.features.id = id;
      r.features.embedding.resize(m.feature_dim);
      r.features.logits.resize(m.logits_dim);
      for (std::size_t i = 0; i < m.feature_dim; ++i) {
        r.features.embedding[i] = table.real(id, header[1 + i], f[1 + i]);
      }
      for (std::size_t i = 0; i < m.logits_dim; ++i) {
        const std::size_t col = 1 + m.feature_dim + i;
        r.features.logits[i] = table.real(id, header[col], f[col]);
      }
      d.records.push_back(std::move(r));
    }
  }
  {
    CsvTable table(base / m.labels_file);
    table.expect_header(label_header());
    std::unordered_set<std::string> seen;
    std::vector<std::string_view> f;
    while (table.next(f)) {
      if (f.size() != label_header().size()) {
        table.fail("expected " + std::to_string(label_header().size()) +
                   " fields, got " + std::to_string(f.size()));
      }
      const std::string id(f[0]);
      const auto it = position.find(id);
      if (it == position.end()) table.fail("id '" + id + "' not in features");
      if (!seen.insert(id).second) table.fail("duplicate id '" + id + "'");
      d.records[it->second].labels = parse_labels(table, f, m.num_expr_classes);
    }
  }
  if (m.openface_file) {
    CsvTable table(base / *m.openface_file);
    const auto header = openface_header(m.openface_dim);
    table.expect_header(header);
    std::unordered_set<std::string> seen;
    std::vector<std::string_view> f;
    while (table.next(f)) {
      if (f.size() != header.size()) {
        table.fail("expected " + std::to_string(header.size()) +
                   " fields, got " + std::to_string(f.size()));
      }
      const std::string id(f[0]);
      const auto it = position.find(id);
      if (it == position.end()) table.fail("id '" + id + "' not in features");
      if (!seen.insert(id).second) table.fail("duplicate id '" + id + "'");
      std::vector<double> aus(m.openface_dim);
      for (std::size_t i = 0; i < m.openface_dim; ++i) {
        aus[i] = table.real(id, header[1 + i], f[1 + i]);
      }
      d.records[it->second].features.openface_aus = std::move(aus);
    }
  }

  const ValidationReport report = validate_dataset(d);
  if (!report.ok) {
    throw DatasetError(manifest_path.string() + ": " + report.issues.front());
  }
  return d;
}

fs::path save_dataset(const Dataset& d, const fs::path& dir) {
  fs::create_directories(dir);
  const Manifest& m = d.manifest;
  const ValidationReport report = validate_dataset(d);

  std::string features = join(feature_header(m.feature_dim, m.logits_dim));
  features += '\n';
  std::string labels = join(label_header());
  labels += '\n';
  std::string openface;
  if (m.openface_file) {
    openface = join(openface_header(m.openface_dim));
    openface += '\n';
  }
  for (const Record& r : d.records) {
    if (r.features.id.find_first_of(",\n\r") != std::string::npos) {
      throw DatasetError("id '" + r.features.id +
                         "' contains a separator character");
    }
    features += r.features.id;
    for (double v : r.features.embedding) (features += ',') += format_double(v);
    for (double v : r.features.logits) (features += ',') += format_double(v);
    features += '\n';

    const LabelSet& l = r.labels;
    labels += r.features.id;
    labels += ',';
    if (l.expression) labels += std::to_string(*l.expression);
    labels += ',';
    if (l.valence) labels += format_double(*l.valence);
    labels += ',';
    if (l.arousal) labels += format_double(*l.arousal);
    for (std::size_t k = 0; k < kNumAus; ++k) {
      labels += ',';
      if (l.aus) labels += (*l.aus)[k] ? '1' : '0';
    }
    labels += '\n';

    if (m.openface_file && r.features.openface_aus) {
      openface += r.features.id;
      for (double v : *r.features.openface_aus) (openface += ',') += format_double(v);
      openface += '\n';
    }
  }
  write_text_file(dir / m.features_file, features);
  write_text_file(dir / m.labels_file, labels);
  if (m.openface_file) write_text_file(dir / *m.openface_file, openface);
  const fs::path manifest_path = dir / "manifest.json";
  write_text_file(manifest_path,
                  manifest_to_json(m, report.counts, report.class_counts)
                          .dump(2) +
                      "\n");
  return manifest_path;
}

ValidationReport validate_dataset(const Dataset& d) {
  ValidationReport report;
  const Manifest& m = d.manifest;
  auto issue = [&](std::string what) {
    report.ok = false;
    report.issues.push_back(std::move(what));
  };
  report.class_counts.assign(
      static_cast<std::size_t>(std::max(m.num_expr_classes, 0)), 0);

  std::unordered_set<std::string> ids;
  for (const Record& r : d.records) {
    const FeatureRecord& f = r.features;
    const std::string where = "id '" + f.id + "': ";
    if (!ids.insert(f.id).second) issue(where + "duplicate id");
    if (f.embedding.size() != m.feature_dim) {
      issue(where + "embedding length " + std::to_string(f.embedding.size()) +
            " != feature_dim " + std::to_string(m.feature_dim));
    }
    if (f.logits.size() != kLogitsDim) {
      issue(where + "logits length " + std::to_string(f.logits.size()) +
            " != 10");
    }
    auto all_finite = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(),
                         [](double x) { return std::isfinite(x); });
    };
    if (!all_finite(f.embedding) || !all_finite(f.logits)) {
      issue(where + "non-finite feature value");
    }
    if (f.openface_aus) {
      if (m.openface_dim == 0) {
        issue(where + "openface features present but openface_dim is 0");
      } else if (f.openface_aus->size() != m.openface_dim) {
        issue(where + "openface length mismatch");
      }
      if (!all_finite(*f.openface_aus)) issue(where + "non-finite openface value");
    }

    const LabelSet& l = r.labels;
    if (l.expression) {
      if (*l.expression < 0 || *l.expression >= m.num_expr_classes) {
        issue(where + "expression class " + std::to_string(*l.expression) +
              " out of range");
      } else {
        ++report.class_counts[static_cast<std::size_t>(*l.expression)];
      }
      ++report.counts.expr;
      if (f.openface_aus) ++report.counts.openface;
    }
    if (l.valence.has_value() != l.arousal.has_value()) {
      issue(where + "valence and arousal must be present together");
    }
    if (l.valence && l.arousal) {
      for (double v : {*l.valence, *l.arousal}) {
        if (!(v >= -1.0 && v <= 1.0)) {
          issue(where + "valence/arousal out of range [-1, 1]");
        }
      }
      ++report.counts.va;
    }
    if (l.aus) {
      for (std::uint8_t a : *l.aus) {
        if (a > 1) issue(where + "AU value must be 0 or 1");
      }
      ++report.counts.au;
    }
  }

  if (m.counts) {
    auto check = [&](const char* name, std::size_t claimed, std::size_t actual) {
      if (claimed != actual) {
        issue(std::string("manifest claims ") + name + " count " +
              std::to_string(claimed) + " but " + std::to_string(actual) +
              " present");
      }
    };
    check("expr", m.counts->expr, report.counts.expr);
    check("va", m.counts->va, report.counts.va);
    check("au", m.counts->au, report.counts.au);
    check("openface", m.counts->openface, report.counts.openface);
  }
  if (m.class_counts && *m.class_counts != report.class_counts) {
    issue("manifest class_counts do not match the expression labels");
  }
  return report;
}

TaskView task_view(const Dataset& d, Task task) {
  TaskView view{task, {}};
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const Record& r = d.records[i];
    if (!r.labels.has(task)) continue;
    if (task == Task::kExprOpenFace && !r.features.openface_aus) continue;
    view.indices.push_back(i);
  }
  return view;
}

std::vector<std::size_t> class_counts(const Dataset& d, const TaskView& view) {
  std::vector<std::size_t> counts(
      static_cast<std::size_t>(d.manifest.num_expr_classes), 0);
  for (std::size_t i : view.indices) {
    const auto& e = d.records[i].labels.expression;
    if (!e) throw RangeError("record without expression label in view");
    ++counts[static_cast<std::size_t>(*e)];
  }
  return counts;
}

Matrix embeddings_with_logits(const Dataset& d,
                              std::span<const std::size_t> indices) {
  const std::size_t dim = d.manifest.feature_dim + kLogitsDim;
  Matrix out(indices.size(), dim);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const FeatureRecord& f = d.records[indices[i]].features;
    auto row = out.row(i);
    std::copy(f.embedding.begin(), f.embedding.end(), row.begin());
    std::copy(f.logits.begin(), f.logits.end(),
              row.begin() + static_cast<std::ptrdiff_t>(f.embedding.size()));
  }
  return out;
}

Matrix logits_matrix(const Dataset& d, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), kLogitsDim);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& logits = d.records[indices[i]].features.logits;
    std::copy(logits.begin(), logits.end(), out.row(i).begin());
  }
  return out;
}

Matrix openface_matrix(const Dataset& d, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), kOpenFaceDim);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& aus = d.records[indices[i]].features.openface_aus;
    if (!aus) {
      throw DatasetError("id '" + d.records[indices[i]].features.id +
                         "': openface features missing");
    }
    std::copy(aus->begin(), aus->end(), out.row(i).begin());
  }
  return out;
}

std::vector<std::size_t> all_indices(const Dataset& d) {
  std::vector<std::size_t> idx(d.records.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

}  // namespace mtaffect
