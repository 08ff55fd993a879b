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

#ifndef MCLT_RUNNER_HPP
#define MCLT_RUNNER_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mclt/error.hpp"
#include "mclt/gene_model.hpp"

namespace mclt {

enum class ExperimentKind { simulate, couple_decay, verify_b, verify_a, ergodicity, clt, donsker, mw };
enum class KernelKind { gene, finite, identity, ar1 };

std::string to_string(ExperimentKind kind);
std::string to_string(KernelKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::simulate;
  KernelKind kernel = KernelKind::gene;
  std::optional<std::uint64_t> seed;
  std::size_t n = 100;
  std::size_t replicas = 1000;
  std::size_t burn_in = 50;
  std::size_t aux_burn_in = 1000;
  std::size_t aux_steps = 0;
  std::size_t batch_len = 0;
  bool stationary_start = true;
  double threshold = 0.0;
  int workers = 1;
};

struct FiniteKernelConfig {
  std::vector<std::vector<double>> matrix;
  std::vector<std::vector<double>> distance;  // empty: discrete metric
  std::vector<double> values;                 // observable g(k); empty: g(k) = k
};

struct Ar1Config {
  double coefficient = 0.5;
  double noise_sd = 1.0;
};

struct InitialConfig {
  double y = 1.0;
  int i = 1;
  double partner_y = 5.0;
  int partner_i = 1;
  int state = 0;
  int partner_state = 1;
  double x = 0.0;
  double partner_x = 1.0;
};

struct ObservableConfig {
  std::string kind = "atan";  // atan | clipped | regime | value
  double clip = 10.0;
  double scale = 1.0;
  std::optional<double> center;  // replaces the estimated invariant mean
};

struct ChecksConfig {
  std::size_t grid_points = 20;
  double y_max = 10.0;
  std::size_t pairs = 50;
  std::size_t steps = 30;
  std::size_t sample_size = 100000;
  std::size_t stationary_burn_in = 200;
  double bin_width = 0.05;
  std::vector<std::size_t> n_list{50, 100, 200};
  double min_r_squared = 0.95;
  std::optional<double> expected_rate;
  double rate_tolerance = 0.05;
  std::string expect = "plateau";  // plateau | growth
  std::size_t drift_replicas = 20000;
};

struct ConditionsConfig {
  double gamma = 0.8;
  double c_gamma = 20.0;
  std::size_t horizon = 200;
  std::size_t replicas = 2000;
  std::size_t hitting_replicas = 500;
};

struct RunConfig {
  ExperimentConfig experiment;
  std::optional<GeneModelConfig> gene;
  std::optional<FiniteKernelConfig> finite;
  Ar1Config ar1;
  InitialConfig initial;
  ObservableConfig observable;
  ChecksConfig checks;
  ConditionsConfig conditions;
};

/// Parses and checks a YAML config. Every schema violation is collected and
/// reported at once in an invalid_config error, with line numbers.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// The resolved config, defaults included, as YAML.
std::string resolved_yaml(const RunConfig& cfg);

struct RunOptions {
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

struct RunResult {
  bool pass = false;
  std::string summary;  // "PASS key=value ..." or "FAIL ..."
  std::string table;    // CSV contents written to results.csv
};

/// Runs one experiment, writes results.csv and manifest.yaml into the output
/// directory and returns the verdict. Errors propagate as mclt::Error.
RunResult run_experiment(RunConfig cfg, const RunOptions& opts);

/// Same run without touching the file system.
RunResult execute(const RunConfig& cfg);

/// Text report for `validate`: resolved constants and precondition checks.
/// `ok` is false when a precondition needed by the experiment fails.
std::string validation_report(const RunConfig& cfg, bool& ok);

/// Exit status for an error code; 0 is success and 1 a failed check.
int exit_status(ErrorCode code) noexcept;

}  // namespace mclt

#endif  // MCLT_RUNNER_HPP
