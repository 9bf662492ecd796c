// Copyright 2026 The gom-l2o Authors.
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

#include "goml2o/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "goml2o/common.hpp"
#include "goml2o/l2o.hpp"
#include "goml2o/rng.hpp"
#include "goml2o/solvers.hpp"

namespace goml2o {

namespace fs = std::filesystem;

std::string to_string(Trigger t) {
  switch (t) {
    case Trigger::kNone: return "none";
    case Trigger::kShiftS0: return "shift_s0";
    default: return "translate_t";
  }
}

Trigger trigger_from_string(const std::string& s) {
  if (s == "none") return Trigger::kNone;
  if (s == "shift_s0") return Trigger::kShiftS0;
  if (s == "translate_t") return Trigger::kTranslateT;
  throw UsageError("unknown trigger: " + s);
}

ExperimentConfig ExperimentConfig::from_file(const std::string& command,
                                             const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  ExperimentConfig cfg;
  cfg.command = command;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    // trim
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config " + path + ":" + std::to_string(lineno) +
                       ": expected key=value");
    }
    cfg.values[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return cfg;
}

void ExperimentConfig::override_value(const std::string& key, const std::string& value) {
  values[key] = value;
}

std::string ExperimentConfig::get(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw UsageError("config: missing required key '" + key + "'");
  return it->second;
}

std::string ExperimentConfig::get_or(const std::string& key, const std::string& fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

std::uint64_t ExperimentConfig::get_u64_or(const std::string& key, std::uint64_t fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : std::stoull(it->second);
}

double ExperimentConfig::get_double_or(const std::string& key, double fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : std::stod(it->second);
}

std::string ExperimentConfig::provenance_header() const {
  std::ostringstream os;
  os << "# " << kToolName << " " << kToolVersion << "\n";
  os << "# command=" << command << "\n";
  for (const auto& [k, v] : values) os << "# " << k << "=" << v << "\n";
  return os.str();
}

namespace {

void guard_overwrite(const std::string& path, bool force) {
  if (!force && fs::exists(path)) {
    throw UsageError("refusing to overwrite " + path + " (pass --force)");
  }
}

void ensure_parent_dir(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::string format_value_tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return std::string(buf);
}

void write_curve_csv(const std::string& path, const ExperimentConfig& cfg, const Vec& curve) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot open output file: " + path);
  out << cfg.provenance_header();
  out << "k,mean_normalized_objective\n";
  for (std::size_t k = 0; k < curve.size(); ++k) {
    out << k << "," << format_double(curve[k]) << "\n";
  }
}

}  // namespace

void save_dataset_manifest(const std::string& path, const ExperimentConfig& cfg,
                           const std::vector<DatasetRecord>& records, bool force) {
  guard_overwrite(path, force);
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot open dataset manifest for writing: " + path);
  out << cfg.provenance_header();
  for (const auto& rec : records) out << dataset_record_line(rec) << "\n";
}

std::vector<DatasetRecord> load_dataset_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open dataset manifest: " + path);
  std::vector<DatasetRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    records.push_back(parse_dataset_record(line));
  }
  if (records.empty()) throw UsageError("dataset manifest is empty: " + path);
  return records;
}

void run_gen(const ExperimentConfig& cfg) {
  const ProblemKind kind = problem_kind_from_string(cfg.get("kind"));
  const std::size_t n = std::stoull(cfg.get("n"));
  const std::size_t m = std::stoull(cfg.get("m"));
  const std::size_t count = std::stoull(cfg.get("count"));
  const std::uint64_t seed = cfg.get_u64_or("seed", 0);
  const std::string path = cfg.get("dataset");
  if (n < 1 || m < 1 || count < 1) throw UsageError("gen: n, m, count must be >= 1");

  std::vector<DatasetRecord> records;
  records.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    records.push_back({kind, n, m, 0.1, Rng::derive_seed(seed, i)});
  }
  save_dataset_manifest(path, cfg, records, cfg.force);
  std::cout << cfg.provenance_header();
  std::cout << "wrote " << records.size() << " records to " << path << "\n";
}

namespace {

std::vector<ProblemInstance> instantiate_all(const std::vector<DatasetRecord>& records,
                                             std::size_t limit) {
  std::vector<ProblemInstance> out;
  const std::size_t count = limit == 0 ? records.size() : std::min(limit, records.size());
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(instantiate(records[i]));
  return out;
}

L2OArch arch_from_config(const ExperimentConfig& cfg, ProblemKind kind) {
  L2OArch arch;
  arch.hidden_size = static_cast<std::size_t>(cfg.get_u64_or("hidden", 20));
  arch.activation = activation_from_string(cfg.get_or(
      "activation", kind == ProblemKind::kLasso ? "sigmoid" : "softplus"));
  arch.gradmap = gradmap_from_string(cfg.get_or("gradmap", "lhnor"));
  arch.q_shrink = q_shrink_from_string(cfg.get_or("q_shrink", "none"));
  return arch;
}

}  // namespace

void run_train(const ExperimentConfig& cfg) {
  const std::string dataset_path = cfg.get("dataset");
  const std::string checkpoint_path = cfg.get("checkpoint");
  const std::string log_path = cfg.get_or("train_log", "train_log.csv");
  guard_overwrite(checkpoint_path, cfg.force);
  guard_overwrite(log_path, cfg.force);

  const std::vector<DatasetRecord> records = load_dataset_manifest(dataset_path);
  const std::vector<ProblemInstance> dataset =
      instantiate_all(records, cfg.get_u64_or("train_count", 0));

  TrainConfig tc;
  tc.total_steps_per_problem = cfg.get_u64_or("total_steps", 100);
  tc.bp_every = cfg.get_u64_or("bp_every", 20);
  tc.epochs = cfg.get_u64_or("epochs", 1);
  tc.lr = cfg.get_double_or("lr", 0.01);
  tc.lr_decay_per_epoch = cfg.get_double_or("lr_decay", 0.1);
  tc.batch_size = cfg.get_u64_or("batch", 128);
  tc.loss = loss_kind_from_string(cfg.get_or("loss", "mean"));
  tc.grad_clip_norm = cfg.get_double_or("clip", 1.0);
  tc.eval_every = cfg.get_u64_or("eval_every", 20);
  tc.x0_scale = cfg.get_double_or("x0_scale", 1.0);
  tc.adam_beta1 = cfg.get_double_or("adam_beta1", 0.9);
  tc.adam_beta2 = cfg.get_double_or("adam_beta2", 0.999);
  tc.decay_phases_per_epoch = cfg.get_u64_or("decay_phases", 1);
  tc.seed = cfg.get_u64_or("seed", 0);

  const DatasetRecord& proto = records.front();
  std::vector<ProblemInstance> val_set;
  const std::size_t val_count = cfg.get_u64_or("val_count", 0);
  for (std::size_t i = 0; i < val_count; ++i) {
    val_set.push_back(generate_instance(proto.kind, proto.n, proto.m,
                                        Rng::derive_seed(tc.seed ^ 0x76616c5f5345545aULL, i)));
  }

  const L2OArch arch = arch_from_config(cfg, proto.kind);
  const L2OParameterBundle initial =
      L2OParameterBundle::init(arch, Rng::derive_seed(tc.seed, 0x57454947));

  std::cout << cfg.provenance_header();
  const TrainResult result = train(dataset, tc, initial, val_set);

  ensure_parent_dir(checkpoint_path);
  result.bundle.save(checkpoint_path);
  ensure_parent_dir(log_path);
  std::ofstream log(log_path, std::ios::binary);
  if (!log) throw UsageError("cannot open training log for writing: " + log_path);
  log << cfg.provenance_header();
  log << "epoch,batch,segment,loss,val_metric_at_100,wall_ns\n";
  for (const auto& row : result.log) {
    log << row.epoch << "," << row.batch << "," << row.segment << ","
        << format_double(row.loss) << ",";
    if (!std::isnan(row.val_metric_at_end)) log << format_double(row.val_metric_at_end);
    log << "," << row.wall_ns << "\n";
  }
  std::cout << "wrote checkpoint to " << checkpoint_path << " and log to " << log_path << "\n";
}

void run_eval(const ExperimentConfig& cfg) {
  const std::string dataset_path = cfg.get("dataset");
  const std::size_t k_steps = std::stoull(cfg.get("K"));
  if (k_steps < 1) throw UsageError("eval: K must be >= 1");
  const std::uint64_t seed = cfg.get_u64_or("seed", 0);
  const std::string out_dir = cfg.get_or("out", ".");
  const Trigger trigger = trigger_from_string(cfg.get_or("trigger", "none"));
  std::vector<double> trigger_values;
  for (const std::string& tok : split_csv(cfg.get_or("trigger_values", ""))) {
    trigger_values.push_back(std::stod(tok));
  }
  if (trigger_values.empty()) {
    // Documented defaults: shift magnitudes for trigger 1, translation
    // magnitudes for trigger 2.
    if (trigger == Trigger::kShiftS0) {
      trigger_values = {1.0, -1.0, 2.0, -2.0, 5.0, -5.0, 10.0, -10.0};
    } else if (trigger == Trigger::kTranslateT) {
      trigger_values = {10.0, -10.0, 20.0, -20.0, 50.0, -50.0, 100.0, -100.0};
    }
  }
  const std::vector<std::string> solvers =
      split_csv(cfg.get_or("solvers", "ista,fista,adam,adamhd"));
  if (solvers.empty()) throw UsageError("eval: empty solver list");

  const std::vector<DatasetRecord> records = load_dataset_manifest(dataset_path);
  const std::vector<ProblemInstance> instances =
      instantiate_all(records, cfg.get_u64_or("eval_count", 0));
  const std::size_t n = instances.front().dim();

  L2OParameterBundle bundle;
  bool have_bundle = false;
  for (const std::string& s : solvers) {
    if (s == "l2o") {
      bundle = L2OParameterBundle::load(cfg.get("checkpoint"));
      have_bundle = true;
    }
  }
  (void)have_bundle;

  auto curve_for = [&](const std::string& solver, const std::vector<LabeledProblem>& labeled,
                       const Vec* shift) {
    if (solver == "l2o") return evaluate_bundle(bundle, labeled, k_steps, shift);
    return evaluate_solver(solver, labeled, k_steps, shift);
  };

  fs::create_directories(out_dir);
  if (trigger == Trigger::kNone) {
    const auto labeled = label_problems(instances);
    for (const std::string& solver : solvers) {
      const Vec curve = curve_for(solver, labeled, nullptr);
      write_curve_csv(out_dir + "/curve_" + solver + ".csv", cfg, curve);
    }
  } else if (trigger == Trigger::kShiftS0) {
    const auto labeled = label_problems(instances);
    const Vec u = Rng::derive(seed, 0x53304449u).unit_vector(n);
    for (const std::string& solver : solvers) {
      for (double v : trigger_values) {
        const Vec s0 = scaled(u, v);
        const Vec curve = curve_for(solver, labeled, &s0);
        write_curve_csv(out_dir + "/curve_" + solver + "_s0_" + format_value_tag(v) + ".csv",
                        cfg, curve);
      }
    }
  } else {
    for (double v : trigger_values) {
      const double per_coord = v / std::sqrt(static_cast<double>(n));
      std::vector<ProblemInstance> shifted;
      shifted.reserve(instances.size());
      for (const auto& p : instances) shifted.push_back(p.with_translation(Vec(n, per_coord)));
      const auto labeled = label_problems(shifted);
      for (const std::string& solver : solvers) {
        const Vec curve = curve_for(solver, labeled, nullptr);
        write_curve_csv(out_dir + "/curve_" + solver + "_t_" + format_value_tag(v) + ".csv",
                        cfg, curve);
      }
    }
  }
  std::cout << cfg.provenance_header();
  std::cout << "eval curves written to " << out_dir << "\n";
}

bool run_verify(const ExperimentConfig& cfg) {
  TheorySuiteConfig sc;
  sc.seed = cfg.get_u64_or("seed", 0);
  if (cfg.has("trials")) {
    const std::size_t t = std::stoull(cfg.get("trials"));
    sc.mvt_trials = t;
    sc.lemma1_trials = t;
    sc.corollary1_instances = t;
    sc.theorem1_scenarios = t;
    sc.theorem2_scenarios = t;
    sc.composite_trials = t;
    sc.history_samples = t;
  }
  sc.mvt_trials = cfg.get_u64_or("trials_mvt", sc.mvt_trials);
  sc.lemma1_trials = cfg.get_u64_or("trials_lemma1", sc.lemma1_trials);
  sc.corollary1_instances = cfg.get_u64_or("trials_corollary1", sc.corollary1_instances);
  sc.theorem1_scenarios = cfg.get_u64_or("trials_theorem1", sc.theorem1_scenarios);
  sc.theorem2_scenarios = cfg.get_u64_or("trials_theorem2", sc.theorem2_scenarios);
  sc.composite_trials = cfg.get_u64_or("trials_composite", sc.composite_trials);
  sc.history_samples = cfg.get_u64_or("trials_history", sc.history_samples);

  const bool empty_suite =
      sc.mvt_trials == 0 && sc.lemma1_trials == 0 && sc.corollary1_instances == 0 &&
      sc.theorem1_scenarios == 0 && sc.theorem2_scenarios == 0 && sc.composite_trials == 0 &&
      sc.history_samples == 0;

  const std::string report_path = cfg.get_or("report", "report.csv");
  ensure_parent_dir(report_path);
  std::ofstream out(report_path, std::ios::binary);
  if (!out) throw UsageError("cannot open report for writing: " + report_path);
  out << cfg.provenance_header();
  out << "name,trials,violations,worst_margin,tolerance\n";

  bool any_violations = false;
  if (!empty_suite) {
    for (const TheoryReport& rep : run_theory_suite(sc)) {
      out << rep.csv_row() << "\n";
      std::cout << rep.check_name << ": " << (rep.violations == 0 ? "ok" : "VIOLATED")
                << " (trials=" << rep.trials << ", worst_margin="
                << format_double(rep.trials == 0 ? 0.0 : rep.worst_margin) << ")\n";
      if (rep.violations > 0) any_violations = true;
    }
  }
  std::cout << cfg.provenance_header();
  std::cout << "report written to " << report_path << "\n";
  return any_violations;
}

}  // namespace goml2o
