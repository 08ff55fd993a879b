// Copyright 2026 The mclt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line entry point: `mclt run` and `mclt validate`.

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mclt/error.hpp"
#include "mclt/runner.hpp"
#include "mclt/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Markov chain coupling and CLT experiments"};
  app.set_version_flag("--version", std::string("mclt ") + mclt::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out_dir = "out";

  auto* run = app.add_subcommand("run", "run one experiment and write results.csv and manifest.yaml");
  run->add_option("--config", config_path, "YAML experiment config")->required()->check(CLI::ExistingFile);
  auto* seed_opt = run->add_option("--seed", seed, "master seed, overrides experiment.seed");
  auto* workers_opt = run->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "output directory")->capture_default_str();

  auto* validate = app.add_subcommand("validate", "check a config and print the resolved constants");
  validate->add_option("--config", config_path, "YAML experiment config")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    const mclt::RunConfig cfg = mclt::load_config(config_path);
    if (*validate) {
      bool ok = true;
      std::cout << mclt::validation_report(cfg, ok);
      return ok ? 0 : mclt::exit_status(mclt::ErrorCode::precondition);
    }
    mclt::RunOptions opts;
    opts.out_dir = out_dir;
    if (*seed_opt) opts.seed = seed;
    if (*workers_opt) opts.workers = workers;
    const auto result = mclt::run_experiment(cfg, opts);
    std::cout << result.summary << "\n";
    return result.pass ? 0 : 1;
  } catch (const mclt::Error& e) {
    std::cerr << "error [" << mclt::to_string(e.code()) << "]: " << e.what() << "\n";
    return mclt::exit_status(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << "\n";
    return mclt::exit_status(mclt::ErrorCode::internal);
  }
}
