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

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "goml2o/cli.hpp"
#include "goml2o/common.hpp"

int main(int argc, char** argv) {
  CLI::App app{"GO-Math-L2O toolkit: dataset generation, training, evaluation, and "
               "numerical theory verification"};
  app.require_subcommand(1);

  std::string config_path;
  std::string seed_override;
  std::string out_override;
  bool force = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key=value config file")->required();
    sub->add_option("--seed", seed_override, "override the config seed");
    sub->add_option("--out", out_override, "override the output directory");
    sub->add_flag("--force", force, "allow overwriting existing outputs");
  };

  CLI::App* gen = app.add_subcommand("gen", "generate a dataset manifest");
  CLI::App* train = app.add_subcommand("train", "train an optimizer checkpoint");
  CLI::App* eval = app.add_subcommand("eval", "write convergence-curve CSVs");
  CLI::App* verify = app.add_subcommand("verify", "run the theory verification suite");
  add_common(gen);
  add_common(train);
  add_common(eval);
  add_common(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const std::string command = app.get_subcommands().front()->get_name();
    goml2o::ExperimentConfig cfg = goml2o::ExperimentConfig::from_file(command, config_path);
    if (!seed_override.empty()) cfg.override_value("seed", seed_override);
    if (!out_override.empty()) cfg.override_value("out", out_override);
    cfg.force = force;

    if (command == "gen") {
      goml2o::run_gen(cfg);
    } else if (command == "train") {
      goml2o::run_train(cfg);
    } else if (command == "eval") {
      goml2o::run_eval(cfg);
    } else if (command == "verify") {
      if (goml2o::run_verify(cfg)) return 3;
    }
    return 0;
  } catch (const goml2o::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const goml2o::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
