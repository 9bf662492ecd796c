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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "goml2o/cli.hpp"
#include "goml2o/common.hpp"

using namespace goml2o;
namespace fs = std::filesystem;

namespace {

const fs::path kScratch = "cli_test_scratch";

struct ScratchDir {
  ScratchDir() {
    fs::remove_all(kScratch);
    fs::create_directories(kScratch);
  }
  ~ScratchDir() { fs::remove_all(kScratch); }
};

std::string write_config(const std::string& name, const std::string& body) {
  const fs::path path = kScratch / name;
  std::ofstream out(path);
  out << body;
  return path.string();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("config parsing: comments, trimming, overrides, errors") {
  ScratchDir scratch;
  const std::string path = write_config("c.cfg",
                                        "# a comment\n"
                                        "kind=lasso\n"
                                        "  n=10   # trailing comment\n"
                                        "\n"
                                        "seed=5\n");
  ExperimentConfig cfg = ExperimentConfig::from_file("gen", path);
  CHECK(cfg.get("kind") == "lasso");
  CHECK(cfg.get("n") == "10");
  CHECK(cfg.get_u64_or("seed", 0) == 5);
  cfg.override_value("seed", "9");
  CHECK(cfg.get_u64_or("seed", 0) == 9);
  CHECK(cfg.get_or("missing", "dflt") == "dflt");
  CHECK_THROWS_AS((void)cfg.get("missing"), UsageError);

  const std::string bad = write_config("bad.cfg", "no_equals_here\n");
  CHECK_THROWS_AS((void)ExperimentConfig::from_file("gen", bad), UsageError);
  CHECK_THROWS_AS((void)ExperimentConfig::from_file("gen", "does_not_exist.cfg"), UsageError);
}

TEST_CASE("gen writes a manifest and respects the overwrite guard") {
  ScratchDir scratch;
  const std::string ds = (kScratch / "data.txt").string();
  const std::string cfg_path = write_config(
      "gen.cfg", "kind=lasso\nn=6\nm=4\ncount=8\nseed=3\ndataset=" + ds + "\n");
  ExperimentConfig cfg = ExperimentConfig::from_file("gen", cfg_path);
  run_gen(cfg);
  const auto records = load_dataset_manifest(ds);
  CHECK(records.size() == 8);
  CHECK(records[0].n == 6);
  CHECK(records[0].m == 4);
  CHECK(records[0].lambda == 0.1);

  // provenance header present
  const std::string text = slurp(ds);
  CHECK(text.rfind("# gom-l2o", 0) == 0);
  CHECK(text.find("# command=gen") != std::string::npos);

  CHECK_THROWS_AS(run_gen(cfg), UsageError);  // no --force
  cfg.force = true;
  run_gen(cfg);  // allowed now
}

TEST_CASE("train: end-to-end tiny run, then eval curves") {
  ScratchDir scratch;
  const std::string ds = (kScratch / "data.txt").string();
  {
    ExperimentConfig g = ExperimentConfig::from_file(
        "gen",
        write_config("g.cfg", "kind=lasso\nn=6\nm=4\ncount=6\nseed=3\ndataset=" + ds + "\n"));
    run_gen(g);
  }
  const std::string ckpt = (kScratch / "model.ckpt").string();
  const std::string log = (kScratch / "train_log.csv").string();
  {
    ExperimentConfig t = ExperimentConfig::from_file(
        "train", write_config("t.cfg", "dataset=" + ds + "\ncheckpoint=" + ckpt +
                                           "\ntrain_log=" + log +
                                           "\nepochs=1\nbatch=3\ntotal_steps=20\nbp_every=10\n"
                                           "hidden=6\nval_count=2\neval_every=2\nseed=11\n"));
    run_train(t);
  }
  CHECK(fs::exists(ckpt));
  const std::string log_text = slurp(log);
  CHECK(log_text.find("epoch,batch,segment,loss,val_metric_at_100,wall_ns") !=
        std::string::npos);

  // training on an empty dataset is a usage error
  {
    const std::string empty_ds = (kScratch / "empty.txt").string();
    std::ofstream(empty_ds) << "# nothing\n";
    ExperimentConfig t2 = ExperimentConfig::from_file(
        "train", write_config("t2.cfg", "dataset=" + empty_ds + "\ncheckpoint=" +
                                            (kScratch / "x.ckpt").string() + "\n"));
    CHECK_THROWS_AS(run_train(t2), UsageError);
  }

  // eval: trigger none with l2o and ista
  const std::string out1 = (kScratch / "curves1").string();
  const std::string out2 = (kScratch / "curves2").string();
  auto eval_cfg = [&](const std::string& out_dir, const std::string& extra) {
    return ExperimentConfig::from_file(
        "eval", write_config("e_" + std::to_string(std::hash<std::string>{}(out_dir + extra) % 997) + ".cfg",
                             "dataset=" + ds + "\ncheckpoint=" + ckpt + "\nK=25\n" +
                                 "solvers=ista,l2o\nout=" + out_dir + "\nseed=4\n" + extra));
  };
  run_eval(eval_cfg(out1, ""));
  CHECK(fs::exists(fs::path(out1) / "curve_ista.csv"));
  CHECK(fs::exists(fs::path(out1) / "curve_l2o.csv"));
  const std::string curve_text = slurp(fs::path(out1) / "curve_ista.csv");
  CHECK(curve_text.find("k,mean_normalized_objective") != std::string::npos);
  // K+1 data rows
  std::size_t rows = 0;
  for (char c : curve_text) rows += (c == '\n');
  CHECK(rows >= 26);

  // byte-identical reruns (same seed, same config contents)
  run_eval(eval_cfg(out2, ""));
  const std::string a = slurp(fs::path(out1) / "curve_l2o.csv");
  const std::string b = slurp(fs::path(out2) / "curve_l2o.csv");
  // outputs differ only in the out= line of the provenance header
  auto strip_out_line = [](const std::string& s) {
    std::istringstream is(s);
    std::string line, kept;
    while (std::getline(is, line)) {
      if (line.rfind("# out=", 0) == 0) continue;
      kept += line;
      kept += '\n';
    }
    return kept;
  };
  CHECK(strip_out_line(a) == strip_out_line(b));

  // trigger shift_s0 with value 0 matches trigger none bitwise
  const std::string out3 = (kScratch / "curves3").string();
  run_eval(eval_cfg(out3, "trigger=shift_s0\ntrigger_values=0\n"));
  const std::string shifted = slurp(fs::path(out3) / "curve_l2o_s0_0.csv");
  auto data_rows = [](const std::string& s) {
    std::istringstream is(s);
    std::string line, kept;
    while (std::getline(is, line)) {
      if (!line.empty() && line[0] != '#') {
        kept += line;
        kept += '\n';
      }
    }
    return kept;
  };
  CHECK(data_rows(shifted) == data_rows(a));

  // trigger translate_t with 8 values produces 8 curve files per solver
  const std::string out4 = (kScratch / "curves4").string();
  ExperimentConfig e4 = ExperimentConfig::from_file(
      "eval", write_config("e4.cfg", "dataset=" + ds + "\nK=10\nsolvers=ista\nout=" + out4 +
                                         "\nseed=4\ntrigger=translate_t\n"
                                         "trigger_values=10,-10,20,-20,50,-50,100,-100\n"
                                         "eval_count=2\n"));
  run_eval(e4);
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& entry : fs::directory_iterator(out4)) ++files;
  CHECK(files == 8);
  CHECK(fs::exists(fs::path(out4) / "curve_ista_t_10.csv"));
  CHECK(fs::exists(fs::path(out4) / "curve_ista_t_-100.csv"));

  // omitted trigger values fall back to the documented defaults (8 shifts)
  ExperimentConfig e5 = ExperimentConfig::from_file(
      "eval", write_config("e5.cfg", "dataset=" + ds + "\nK=5\nsolvers=ista\nout=" +
                                         (kScratch / "c5").string() +
                                         "\ntrigger=shift_s0\neval_count=1\n"));
  run_eval(e5);
  std::size_t shift_files = 0;
  for ([[maybe_unused]] const auto& entry : fs::directory_iterator(kScratch / "c5")) {
    ++shift_files;
  }
  CHECK(shift_files == 8);
  CHECK(fs::exists(kScratch / "c5" / "curve_ista_s0_-5.csv"));
}

#ifdef GOML2O_BIN
TEST_CASE("binary exit codes: 0 success, 1 usage error") {
  ScratchDir scratch;
  auto run = [](const std::string& args) {
    const int status = std::system((std::string(GOML2O_BIN) + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
  };
  // missing config file -> usage error
  CHECK(run("gen --config nonexistent.cfg") == 1);
  // verify with an empty suite succeeds
  const std::string vcfg = write_config(
      "v0.cfg", "trials=0\nreport=" + (kScratch / "r.csv").string() + "\n");
  CHECK(run("verify --config " + vcfg) == 0);
  // unknown subcommand -> parse error
  CHECK(run("frobnicate --config x") != 0);
}
#endif

TEST_CASE("verify: report rows, empty suite, determinism") {
  ScratchDir scratch;
  const std::string rep1 = (kScratch / "r1.csv").string();
  const std::string rep2 = (kScratch / "r2.csv").string();
  auto cfg_for = [&](const std::string& path, const std::string& trials) {
    return ExperimentConfig::from_file(
        "verify", write_config("v_" + std::to_string(std::hash<std::string>{}(path + trials) % 997) + ".cfg",
                               "seed=15\nreport=" + path + "\n" + trials));
  };
  const bool violations = run_verify(cfg_for(rep1, "trials=5\n"));
  CHECK_FALSE(violations);
  std::istringstream is(slurp(rep1));
  std::string line;
  std::size_t data_rows = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line == "name,trials,violations,worst_margin,tolerance") header_seen = true;
    if (!line.empty() && line[0] != '#' && line.find(',') != std::string::npos &&
        line != "name,trials,violations,worst_margin,tolerance") {
      ++data_rows;
    }
  }
  CHECK(header_seen);
  CHECK(data_rows == 7);

  // empty suite: header only, no rows, success
  const std::string rep0 = (kScratch / "r0.csv").string();
  CHECK_FALSE(run_verify(cfg_for(rep0, "trials=0\n")));
  std::istringstream is0(slurp(rep0));
  std::size_t rows0 = 0;
  while (std::getline(is0, line)) {
    if (!line.empty() && line[0] != '#' &&
        line != "name,trials,violations,worst_margin,tolerance") {
      ++rows0;
    }
  }
  CHECK(rows0 == 0);

  // identical seeds -> byte-identical report bodies
  run_verify(cfg_for(rep2, "trials=5\n"));
  auto strip_report_line = [](const std::string& s) {
    std::istringstream iss(s);
    std::string l, kept;
    while (std::getline(iss, l)) {
      if (l.rfind("# report=", 0) == 0) continue;
      kept += l;
      kept += '\n';
    }
    return kept;
  };
  CHECK(strip_report_line(slurp(rep1)) == strip_report_line(slurp(rep2)));
}
