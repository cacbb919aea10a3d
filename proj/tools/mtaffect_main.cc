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

// mtaffect: train, tune and evaluate affect heads on exported features.
//
// Every subcommand accepts --config FILE (TOML or INI, keys are the long
// option names without dashes); flags given on the command line win.
// Errors go to stderr as "mtaffect: error [<category>]: <message>" and the
// exit status is nonzero.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mtaffect/calibrate.h"
#include "mtaffect/error.h"
#include "mtaffect/featstore.h"
#include "mtaffect/metrics.h"
#include "mtaffect/net.h"
#include "mtaffect/synthetic.h"
#include "mtaffect/textio.h"
#include "mtaffect/training.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mtaffect {
namespace {

constexpr const char* kExprCkpt = "expr_head.ckpt";
constexpr const char* kVaCkpt = "va_head.ckpt";
constexpr const char* kAuCkpt = "au_head.ckpt";
constexpr const char* kOpenFaceCkpt = "openface_mlp.ckpt";

void print_line(const std::string& s) { std::cout << s << '\n'; }

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

void make_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("io", dir.string() + ": cannot create directory: " + ec.message());
}

HeadBundle load_run(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("io", dir.string() + ": run directory not found");
  HeadBundle b;
  b.expr_head = load_checkpoint(dir / kExprCkpt).model;
  b.va_head = load_checkpoint(dir / kVaCkpt).model;
  b.au_head = load_checkpoint(dir / kAuCkpt).model;
  if (fs::exists(dir / kOpenFaceCkpt)) {
    b.openface_mlp = load_checkpoint(dir / kOpenFaceCkpt).model;
  }
  return b;
}

std::optional<std::uint64_t> run_seed(const fs::path& dir) {
  const fs::path p = dir / "run.json";
  if (!fs::exists(p)) return std::nullopt;
  try {
    return json::parse(read_text_file(p)).at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
}

// Scores read from a file must line up with the dataset records.
void check_ids(const ModelScores& s, const Dataset& d, const std::string& what) {
  if (s.ids.size() != d.size()) {
    throw ShapeError(what + ": " + std::to_string(s.ids.size()) +
                     " score rows for " + std::to_string(d.size()) + " records");
  }
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (s.ids[i] != d.records[i].features.id) {
      throw DatasetError(what + ": row " + std::to_string(i + 1) + " has id '" +
                         s.ids[i] + "', dataset has '" + d.records[i].features.id +
                         "'");
    }
  }
}

// ---------------------------------------------------------------------------

struct TrainOptions {
  std::string manifest;
  std::string val_manifest;
  std::string out;
  std::string protocol = "separate";
  std::string optimizer = "adam";
  std::vector<std::string> tasks = {"expr", "va", "au"};
  std::uint64_t seed = 0;
  int epochs = 20;
  std::size_t batch_size = 128;
  double lr = 0.001;
  double rho = 0.05;
  bool openface = false;
};

int cmd_train(const TrainOptions& o) {
  TrainConfig cfg;
  cfg.protocol = parse_protocol(o.protocol);
  cfg.optimizer = parse_optimizer(o.optimizer);
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch_size;
  cfg.adam.learning_rate = o.lr;
  cfg.adam.rho = o.rho;
  cfg.seed = o.seed;
  cfg.train_expr = cfg.train_va = cfg.train_au = false;
  for (const std::string& t : o.tasks) {
    switch (parse_task(t)) {
      case Task::kExpr: cfg.train_expr = true; break;
      case Task::kVa: cfg.train_va = true; break;
      case Task::kAu: cfg.train_au = true; break;
      case Task::kExprOpenFace:
        throw RangeError("use --openface to train the OpenFace MLP");
    }
  }

  const Dataset train = load_dataset(o.manifest);
  const Dataset val = load_dataset(o.val_manifest);
  if (o.openface && (!train.has_openface() || !val.has_openface())) {
    throw DatasetError("--openface needs openface.csv in both datasets");
  }
  const TrainResult result = train_heads(train, val, cfg);
  std::optional<OpenFaceResult> of;
  if (o.openface) of = train_openface_mlp(train, val, cfg);

  const fs::path out(o.out);
  make_out_dir(out);
  save_checkpoint(out / kExprCkpt, result.bundle.expr_head);
  save_checkpoint(out / kVaCkpt, result.bundle.va_head);
  save_checkpoint(out / kAuCkpt, result.bundle.au_head);
  write_text_file(out / "history.csv", result.history.to_csv());
  if (of) {
    save_checkpoint(out / kOpenFaceCkpt, of->model);
    write_text_file(out / "openface_history.csv", of->history.to_csv());
  } else if (fs::exists(out / kOpenFaceCkpt)) {
    fs::remove(out / kOpenFaceCkpt);
  }

  json run;
  run["command"] = "train";
  run["manifest"] = o.manifest;
  run["val_manifest"] = o.val_manifest;
  run["protocol"] = protocol_name(cfg.protocol);
  run["optimizer"] = optimizer_name(cfg.optimizer);
  run["tasks"] = o.tasks;
  run["openface"] = o.openface;
  run["epochs"] = cfg.epochs;
  run["batch_size"] = cfg.batch_size;
  run["learning_rate"] = cfg.adam.learning_rate;
  run["beta1"] = cfg.adam.beta1;
  run["beta2"] = cfg.adam.beta2;
  run["epsilon"] = cfg.adam.epsilon;
  run["rho"] = cfg.adam.rho;
  run["seed"] = cfg.seed;
  run["feature_dim"] = train.manifest.feature_dim;
  run["num_expr_classes"] = train.manifest.num_expr_classes;
  run["train_records"] = train.size();
  run["val_records"] = val.size();
  run["best_epoch"] = {{"expr", result.history.best_expr_epoch},
                       {"va", result.history.best_va_epoch},
                       {"au", result.history.best_au_epoch}};
  if (of) run["best_epoch"]["openface"] = of->history.best_expr_epoch;
  write_text_file(out / "run.json", run.dump(2) + "\n");

  const EpochRecord& last = result.history.epochs.back();
  std::string msg = "trained " + std::string(protocol_name(cfg.protocol)) + " heads for " +
                    std::to_string(cfg.epochs) + " epochs";
  if (last.expr_val_f1) msg += ", expr val F1 " + fixed3(*last.expr_val_f1);
  if (last.va_val_ccc) msg += ", VA val CCC " + fixed3(*last.va_val_ccc);
  if (last.au_val_f1) msg += ", AU val F1 " + fixed3(*last.au_val_f1);
  print_line(msg);
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalOptions {
  std::string manifest;
  std::string run;
  std::string scores;
  std::string profile;
  std::string out;
  std::vector<double> components;
  std::optional<std::uint64_t> seed;
};

void print_report(const EvalReport& r) {
  std::string line = "P_MTL = " + fixed3(r.p_mtl);
  if (r.partial) line += " (partial)";
  print_line(line);
  auto part = [](const char* name, const std::optional<double>& v) {
    return std::string(name) + " = " + (v ? fixed3(*v) : std::string("absent"));
  };
  print_line(part("P_VA", r.p_va) + "  " + part("P_EXPR", r.p_expr) + "  " +
             part("P_AU", r.p_au));
}

int cmd_eval(const EvalOptions& o) {
  if (!o.components.empty()) {
    if (o.components.size() != 3) {
      throw RangeError("--components takes P_VA P_EXPR P_AU");
    }
    EvalReport r = report_from_components(o.components[0], o.components[1],
                                          o.components[2]);
    r.seed = o.seed.value_or(0);
    if (!o.out.empty()) {
      make_out_dir(o.out);
      write_text_file(fs::path(o.out) / "metrics.json", report_to_json(r));
    }
    print_report(r);
    return 0;
  }
  if (o.manifest.empty()) throw RangeError("--manifest is required");
  if (o.run.empty() == o.scores.empty()) {
    throw RangeError("exactly one of --run and --scores is required");
  }
  const Dataset d = load_dataset(o.manifest);
  CalibrationProfile profile;
  if (!o.profile.empty()) profile = load_profile(o.profile);

  EvalReport report;
  if (!o.run.empty()) {
    const HeadBundle bundle = load_run(o.run);
    if (o.seed) {
      profile.seed = *o.seed;
    } else if (o.profile.empty()) {
      profile.seed = run_seed(o.run).value_or(0);
    }
    report = evaluate_mtl(bundle, d, profile);
  } else {
    if (o.seed) profile.seed = *o.seed;
    const ModelScores s = read_scores_csv(o.scores);
    check_ids(s, d, o.scores);
    report = evaluate_scores(s, d, profile);
  }

  if (!o.out.empty()) {
    const fs::path out(o.out);
    make_out_dir(out);
    write_text_file(out / "metrics.json", report_to_json(report));
    if (report.confusion) {
      write_text_file(out / "confusion.csv", confusion_to_csv(*report.confusion));
    }
  }
  print_report(report);
  return 0;
}

// ---------------------------------------------------------------------------

struct TuneOptions {
  std::string manifest;
  std::string run;
  std::string scores;
  std::string profile;
  std::string out;
  std::string split = "validation";
  double grid_step = kDefaultGridStep;
  std::uint64_t seed = 0;
  bool no_blend = false;
};

int cmd_tune(const TuneOptions& o) {
  if (o.run.empty() == o.scores.empty()) {
    throw RangeError("exactly one of --run and --scores is required");
  }
  const Dataset d = load_dataset(o.manifest);
  ModelScores s;
  if (!o.run.empty()) {
    s = compute_scores(load_run(o.run), d);
  } else {
    s = read_scores_csv(o.scores);
    check_ids(s, d, o.scores);
  }

  CalibrationProfile profile;
  if (!o.profile.empty()) profile = load_profile(o.profile);
  profile.grid_step = o.grid_step;
  profile.tuned_on = o.split;
  profile.seed = o.seed;

  const TaskView av = task_view(d, Task::kAu);
  const TaskView ev = task_view(d, Task::kExpr);
  const bool tune_blend = !o.no_blend && s.openface && ev.size() > 0;
  if (av.size() == 0 && !tune_blend) {
    throw RangeError(o.manifest + ": validation split has no AU labels to tune on");
  }

  if (av.size() > 0) {
    const BinaryMatrix truth = au_labels(d, av.indices);
    const Matrix scores = s.au.select_rows(av.indices);
    const double before = binary_f1_per_au(truth, scores, profile.au_thresholds).macro;
    const ThresholdSearchResult t = search_au_thresholds(scores, truth, o.grid_step);
    profile.au_thresholds = t.thresholds;
    const double after = binary_f1_per_au(truth, scores, profile.au_thresholds).macro;
    print_line("P_AU before = " + format_double(before) + " after = " +
               format_double(after));
  }
  if (tune_blend) {
    const std::vector<int> labels = expression_labels(d, ev.indices);
    const Matrix pre = s.expr.select_rows(ev.indices);
    const Matrix ft = s.openface->select_rows(ev.indices);
    const int classes = d.manifest.num_expr_classes;
    const double before =
        macro_f1(labels, decide(blend(profile.blend_weight, pre, ft)), classes).macro;
    const BlendSearchResult b = search_blend_weight(pre, ft, labels, o.grid_step);
    profile.blend_weight = b.weight;
    print_line("P_EXPR before = " + format_double(before) + " after = " +
               format_double(b.f1) + " (w = " + format_double(b.weight) + ")");
  }

  make_out_dir(o.out);
  save_profile(fs::path(o.out) / "profile.json", profile);
  return 0;
}

// ---------------------------------------------------------------------------

struct BlendOptions {
  std::string manifest;
  std::string pre;
  std::string ft;
  std::string out;
  double grid_step = kDefaultGridStep;
};

// Expression-score rows for the labeled records, looked up by id.
Matrix rows_for(const ModelScores& s, const Dataset& d, const TaskView& view,
                const std::string& what) {
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < s.ids.size(); ++i) pos.emplace(s.ids[i], i);
  std::vector<std::size_t> rows;
  for (std::size_t i : view.indices) {
    const auto it = pos.find(d.records[i].features.id);
    if (it == pos.end()) {
      throw DatasetError(what + ": no scores for id '" + d.records[i].features.id + "'");
    }
    rows.push_back(it->second);
  }
  return s.expr.select_rows(rows);
}

int cmd_blend(const BlendOptions& o) {
  const Dataset d = load_dataset(o.manifest);
  const TaskView ev = task_view(d, Task::kExpr);
  if (ev.size() == 0) throw RangeError(o.manifest + ": no expression labels");
  const Matrix pre = rows_for(read_scores_csv(o.pre), d, ev, o.pre);
  const Matrix ft = rows_for(read_scores_csv(o.ft), d, ev, o.ft);
  if (pre.cols() != static_cast<std::size_t>(d.manifest.num_expr_classes)) {
    throw ShapeError(o.pre + ": " + std::to_string(pre.cols()) +
                     " score columns, dataset has " +
                     std::to_string(d.manifest.num_expr_classes) + " classes");
  }
  const LsdReport r = evaluate_lsd(pre, ft, expression_labels(d, ev.indices), o.grid_step);

  const fs::path out(o.out);
  make_out_dir(out);
  write_text_file(out / "blend_report.json", lsd_report_to_json(r));
  write_text_file(out / "confusion_pretrained.csv", confusion_to_csv(r.pretrained_confusion));
  write_text_file(out / "confusion_blended.csv", confusion_to_csv(r.blended_confusion));
  print_line("w = " + format_double(r.weight) + "  F1 = " + fixed3(r.f1) +
             "  (pre-trained " + fixed3(r.pretrained_f1) + ", fine-tuned " +
             fixed3(r.finetuned_f1) + ")");
  return 0;
}

// ---------------------------------------------------------------------------

struct PredictOptions {
  std::string manifest;
  std::string run;
  std::string profile;
  std::string out;
};

int cmd_predict(const PredictOptions& o) {
  const Dataset d = load_dataset(o.manifest);
  CalibrationProfile profile;
  if (!o.profile.empty()) profile = load_profile(o.profile);
  const ModelScores s = compute_scores(load_run(o.run), d);
  const fs::path out(o.out);
  make_out_dir(out);
  write_text_file(out / "predictions.csv", predictions_to_csv(s, profile));
  write_text_file(out / "scores.csv", scores_to_csv(s, profile.blend_weight));
  print_line("wrote " + std::to_string(d.size()) + " predictions to " +
             (out / "predictions.csv").string());
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& manifest) {
  const Dataset d = load_dataset(manifest);
  const ValidationReport r = validate_dataset(d);
  for (const std::string& issue : r.issues) std::cerr << "mtaffect: issue: " << issue << '\n';
  if (!r.ok) throw DatasetError(manifest + ": " + std::to_string(r.issues.size()) + " issue(s)");
  print_line("ok: " + std::to_string(d.size()) + " records; labels expr " +
             std::to_string(r.counts.expr) + ", va " + std::to_string(r.counts.va) +
             ", au " + std::to_string(r.counts.au) + "; openface " +
             std::to_string(r.counts.openface));
  return 0;
}

// ---------------------------------------------------------------------------

struct SynthOptions {
  std::string out;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::uint64_t world_seed = 0;
  std::size_t feature_dim = kDefaultFeatureDim;
  int classes = 8;
  bool openface = false;
  double expr_rate = 1.0;
  double va_rate = 1.0;
  double au_rate = 1.0;
  std::string prefix = "r";
};

int cmd_synth(const SynthOptions& o) {
  SyntheticParams p;
  p.feature_dim = o.feature_dim;
  p.num_classes = o.classes;
  p.with_openface = o.openface;
  const SyntheticWorld world(p, o.world_seed);
  SampleOptions s;
  s.n = o.n;
  s.seed = o.seed;
  s.id_prefix = o.prefix;
  s.expr_rate = o.expr_rate;
  s.va_rate = o.va_rate;
  s.au_rate = o.au_rate;
  const fs::path manifest = save_dataset(world.sample(s), o.out);
  print_line("wrote " + manifest.string());
  return 0;
}

// CLI11 only reads config files attached to the top-level app, so a
// subcommand's --config is expanded here: the file's keys become options
// placed right after the subcommand name, ahead of the explicit flags.
// Options take the last value given, so flags win. Keys may sit at the top
// level of the file or under a [<subcommand>] section.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  const auto sub = std::find_if(args.begin(), args.end(),
                                [](const std::string& a) { return a.empty() || a[0] != '-'; });
  if (sub == args.end()) return args;
  const std::string sub_name = *sub;
  std::optional<std::string> config;
  std::vector<std::string> rest;
  for (auto it = sub + 1; it != args.end(); ++it) {
    if (*it == "--config" && it + 1 != args.end()) {
      config = *++it;
    } else if (it->rfind("--config=", 0) == 0) {
      config = it->substr(9);
    } else {
      rest.push_back(*it);
    }
  }
  if (!config) return args;

  // List options accumulate, so keys given on the command line are dropped
  // from the file rather than relying on the last value winning.
  std::set<std::string> explicit_names;
  for (const std::string& a : rest) {
    if (a.rfind("--", 0) == 0) explicit_names.insert(a.substr(2, a.find('=') - 2));
  }
  std::vector<std::string> out(args.begin(), sub + 1);
  for (const CLI::ConfigItem& item : CLI::ConfigTOML().from_file(*config)) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    if (explicit_names.count(item.name) > 0) continue;
    if (!item.parents.empty() &&
        !(item.parents.size() == 1 && item.parents[0] == sub_name)) {
      continue;
    }
    std::string value;
    for (const std::string& v : item.inputs) value += (value.empty() ? "" : ",") + v;
    out.push_back("--" + item.name + "=" + value);
  }
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Multi-task affect heads: training, calibration and evaluation", "mtaffect"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mtaffect 0.1.0");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::string config_unused;
  auto configurable = [&](CLI::App* sub) {
    sub->add_option("--config", config_unused, "TOML/INI file with option values");
  };

  TrainOptions train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train the task heads");
  configurable(train_cmd);
  train_cmd->add_option("--manifest", train.manifest, "Training manifest.json")->required();
  train_cmd->add_option("--val-manifest,--val", train.val_manifest,
                        "Validation manifest.json")->required();
  train_cmd->add_option("--out", train.out, "Run directory")->required();
  train_cmd->add_option("--protocol", train.protocol, "separate | simultaneous")
      ->capture_default_str();
  train_cmd->add_option("--optimizer", train.optimizer, "adam | adam_sam")
      ->capture_default_str();
  train_cmd->add_option("--tasks", train.tasks, "Heads to train (expr va au)")
      ->delimiter(',')
      ->capture_default_str();
  train_cmd->add_option("--seed", train.seed)->capture_default_str();
  train_cmd->add_option("--epochs", train.epochs)->capture_default_str();
  train_cmd->add_option("--batch-size", train.batch_size)->capture_default_str();
  train_cmd->add_option("--lr", train.lr, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--rho", train.rho, "SAM radius")->capture_default_str();
  train_cmd->add_flag("--openface", train.openface, "Also train the OpenFace MLP");

  EvalOptions eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a run or a scores file");
  configurable(eval_cmd);
  eval_cmd->add_option("--manifest", eval.manifest, "Evaluation manifest.json");
  eval_cmd->add_option("--run", eval.run, "Run directory from train");
  eval_cmd->add_option("--scores", eval.scores, "scores.csv instead of a run");
  eval_cmd->add_option("--profile", eval.profile, "Calibration profile.json");
  eval_cmd->add_option("--out", eval.out, "Directory for metrics.json");
  eval_cmd->add_option("--components", eval.components,
                       "Report from P_VA P_EXPR P_AU directly")
      ->expected(3)
      ->delimiter(',');
  eval_cmd->add_option("--seed", eval.seed, "Seed recorded in the report");

  TuneOptions tune;
  CLI::App* tune_cmd = app.add_subcommand("tune", "Tune AU thresholds and blend weight");
  configurable(tune_cmd);
  tune_cmd->add_option("--manifest,--val-manifest", tune.manifest,
                       "Tuning split manifest.json")->required();
  tune_cmd->add_option("--run", tune.run, "Run directory from train");
  tune_cmd->add_option("--scores", tune.scores, "scores.csv instead of a run");
  tune_cmd->add_option("--profile", tune.profile, "Starting profile.json");
  tune_cmd->add_option("--out", tune.out, "Directory for profile.json")->required();
  tune_cmd->add_option("--split", tune.split, "Name of the tuning split")
      ->capture_default_str();
  tune_cmd->add_option("--grid-step", tune.grid_step)->capture_default_str();
  tune_cmd->add_option("--seed", tune.seed, "Seed recorded in the profile")
      ->capture_default_str();
  tune_cmd->add_flag("--no-blend", tune.no_blend, "Keep the blend weight fixed");

  BlendOptions blend_opts;
  CLI::App* blend_cmd =
      app.add_subcommand("blend", "Blend two expression score files and evaluate");
  configurable(blend_cmd);
  blend_cmd->add_option("--manifest", blend_opts.manifest, "Labeled manifest.json")
      ->required();
  blend_cmd->add_option("--pre", blend_opts.pre, "Pre-trained model scores.csv")->required();
  blend_cmd->add_option("--ft", blend_opts.ft, "Fine-tuned model scores.csv")->required();
  blend_cmd->add_option("--out", blend_opts.out, "Output directory")->required();
  blend_cmd->add_option("--grid-step", blend_opts.grid_step)->capture_default_str();

  PredictOptions predict;
  CLI::App* predict_cmd = app.add_subcommand("predict", "Write calibrated predictions");
  configurable(predict_cmd);
  predict_cmd->add_option("--manifest", predict.manifest)->required();
  predict_cmd->add_option("--run", predict.run)->required();
  predict_cmd->add_option("--profile", predict.profile);
  predict_cmd->add_option("--out", predict.out)->required();

  std::string validate_manifest;
  CLI::App* validate_cmd = app.add_subcommand("validate", "Check a dataset");
  validate_cmd->add_option("--manifest", validate_manifest)->required();

  SynthOptions synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Write a synthetic dataset");
  configurable(synth_cmd);
  synth_cmd->add_option("--out", synth.out, "Dataset directory")->required();
  synth_cmd->add_option("--n", synth.n)->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Sample seed")->capture_default_str();
  synth_cmd->add_option("--world-seed", synth.world_seed,
                        "Seed of the generative parameters")->capture_default_str();
  synth_cmd->add_option("--feature-dim", synth.feature_dim)->capture_default_str();
  synth_cmd->add_option("--classes", synth.classes)->capture_default_str();
  synth_cmd->add_flag("--openface", synth.openface);
  synth_cmd->add_option("--expr-rate", synth.expr_rate)->capture_default_str();
  synth_cmd->add_option("--va-rate", synth.va_rate)->capture_default_str();
  synth_cmd->add_option("--au-rate", synth.au_rate)->capture_default_str();
  synth_cmd->add_option("--prefix", synth.prefix)->capture_default_str();

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() != 0) {
      std::cerr << "mtaffect: error [usage]: " << e.what() << '\n';
      return 2;
    }
    return app.exit(e);
  }

  if (*train_cmd) return cmd_train(train);
  if (*eval_cmd) return cmd_eval(eval);
  if (*tune_cmd) return cmd_tune(tune);
  if (*blend_cmd) return cmd_blend(blend_opts);
  if (*predict_cmd) return cmd_predict(predict);
  if (*validate_cmd) return cmd_validate(validate_manifest);
  if (*synth_cmd) return cmd_synth(synth);
  return 2;
}

}  // namespace
}  // namespace mtaffect

int main(int argc, char** argv) {
  try {
    return mtaffect::run_cli(argc, argv);
  } catch (const mtaffect::Error& e) {
    std::cerr << "mtaffect: error [" << e.category() << "]: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "mtaffect: error [internal]: " << e.what() << '\n';
  }
  return 1;
}
