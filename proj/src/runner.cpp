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

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "mclt/clt_harness.hpp"
#include "mclt/coupling.hpp"
#include "mclt/ergodicity.hpp"
#include "mclt/runner.hpp"
#include "mclt/version.hpp"

namespace mclt {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

template <class State>
struct Model {
  Kernel<State> kernel;
  std::optional<CoupledKernel<State>> coupling;
  std::function<double(const State&)> g;
  State x0;
  State partner;
  std::string state_header;
  std::function<std::string(const State&)> format;
  std::function<State(const State&)> project;
  // invariant law on a grid, when known exactly
  std::vector<State> exact_grid;
  std::vector<double> exact_weights;
};

std::function<double(double)> real_observable(const ObservableConfig& o) {
  const double c = o.clip, s = o.scale;
  if (o.kind == "atan") return [c, s](double x) { return s * std::atan(std::clamp(x, -c, c)); };
  if (o.kind == "clipped") return [c, s](double x) { return s * std::clamp(x, -c, c); };
  return [s](double x) { return s * x; };
}

Model<ModelState> gene_model(const RunConfig& cfg) {
  const auto& gc = *cfg.gene;
  Model<ModelState> m{model_kernel(gc), model_coupling(gc), {}, {cfg.initial.y, cfg.initial.i},
                      {cfg.initial.partner_y, cfg.initial.partner_i}, "y,i", {}, {}, {}, {}};
  const auto& o = cfg.observable;
  if (o.kind == "regime") {
    const double s = o.scale;
    m.g = [s](const ModelState& x) { return x.i == 1 ? s : 0.0; };
  } else {
    auto f = real_observable(o);
    m.g = [f](const ModelState& x) { return f(x.y); };
  }
  m.format = [](const ModelState& x) { return num(x.y) + "," + std::to_string(x.i); };
  const double width = cfg.checks.bin_width;
  m.project = [width](const ModelState& x) { return bin_state(x, width); };
  return m;
}

Model<int> finite_model(const RunConfig& cfg) {
  const auto& fc = *cfg.finite;
  FiniteKernel fk = fc.distance.empty() ? FiniteKernel(fc.matrix) : FiniteKernel(fc.matrix, fc.distance);
  Model<int> m{fk.kernel(), FiniteCoupling::maximal(fk).coupled_kernel(), {}, cfg.initial.state,
               cfg.initial.partner_state, "state", {}, {}, {}, {}};
  std::vector<double> values = fc.values;
  if (values.empty()) {
    for (std::size_t k = 0; k < fc.matrix.size(); ++k) values.push_back(static_cast<double>(k));
  }
  const double s = cfg.observable.scale;
  m.g = [values, s](const int& x) { return s * values[static_cast<std::size_t>(x)]; };
  m.format = [](const int& x) { return std::to_string(x); };
  m.project = [](const int& x) { return x; };
  try {
    m.exact_weights = stationary_distribution(fk);
    for (std::size_t k = 0; k < fk.size(); ++k) m.exact_grid.push_back(static_cast<int>(k));
  } catch (const Error&) {
    m.exact_weights.clear();
  }
  return m;
}

Model<double> real_model(const RunConfig& cfg) {
  const bool ar1 = cfg.experiment.kernel == KernelKind::ar1;
  const double phi = cfg.ar1.coefficient, sd = cfg.ar1.noise_sd;
  Kernel<double> kernel = ar1 ? Kernel<double>([phi, sd](const double& x, Rng& rng) { return phi * x + sd * rng.normal(); },
                                               real_line())
                              : identity_kernel(real_line());
  // Synchronous coupling: both copies share the noise.
  auto step = [ar1, phi, sd](const double& x, const double& y, Rng& rng) {
    const double e = ar1 ? sd * rng.normal() : 0.0;
    return CoupledOutcome<double>{ar1 ? phi * x + e : x, ar1 ? phi * y + e : y, true};
  };
  Model<double> m{kernel, CoupledKernel<double>::joint(kernel, step), real_observable(cfg.observable),
                  cfg.initial.x, cfg.initial.partner_x, "x", {}, {}, {}, {}};
  m.format = [](const double& x) { return num(x); };
  const double width = cfg.checks.bin_width;
  m.project = [width](const double& x) { return (std::floor(x / width) + 0.5) * width; };
  return m;
}

CltOptions clt_options(const RunConfig& cfg, std::optional<double> center) {
  const auto& e = cfg.experiment;
  CltOptions o;
  o.n = e.n;
  o.replicas = e.replicas;
  o.stationary_start = e.stationary_start;
  o.burn_in = e.burn_in;
  o.aux_burn_in = e.aux_burn_in;
  o.aux_steps = e.aux_steps;
  o.batch_len = e.batch_len;
  o.threshold = e.threshold;
  o.center = center;
  o.seed = *e.seed;
  o.workers = e.workers;
  return o;
}

void require_clt_mode(const RunConfig& cfg) {
  if (cfg.experiment.kernel != KernelKind::gene) return;
  const auto k = model_constants(*cfg.gene);
  if (!k.clt_pass || !(k.a > 0.0 && k.a < 1.0)) {
    throw Error(ErrorCode::precondition, "gene model violates L^2 L_w' + 2 alpha / lambda < 1 (value " +
                                             short_num(k.clt_condition) + "); CLT-mode runs need it");
  }
}

template <class State>
RunResult run_model(const RunConfig& cfg, Model<State>& m) {
  const auto& e = cfg.experiment;
  const std::uint64_t seed = *e.seed;
  std::ostringstream csv;
  RunResult res;
  std::ostringstream sum;

  switch (e.kind) {
    case ExperimentKind::simulate: {
      const auto traj = simulate_chain(m.kernel, m.x0, e.n, derive_seed(seed, stream::replica, 0));
      csv << "step," << m.state_header << ",g\n";
      for (std::size_t k = 0; k < traj.states.size(); ++k) {
        csv << k << "," << m.format(traj.states[k]) << "," << num(m.g(traj.states[k])) << "\n";
      }
      res.pass = true;
      sum << "steps=" << e.n;
      break;
    }
    case ExperimentKind::couple_decay: {
      const auto curve = decay_curve(*m.coupling, m.g, m.x0, m.partner, e.n, e.replicas, seed, e.workers);
      csv << "step,mean,stderr,usable\n";
      for (std::size_t k = 0; k < curve.steps.size(); ++k) {
        csv << k << "," << num(curve.steps[k].mean) << "," << num(curve.steps[k].stderr_) << ","
            << int(curve.usable[k]) << "\n";
      }
      if (curve.fit) {
        res.pass = curve.fit->rate > 0.0 && curve.fit->rate < 1.0 && curve.fit->r_squared >= cfg.checks.min_r_squared;
        sum << "q_hat=" << short_num(curve.fit->rate) << " c_fit=" << short_num(curve.fit->amplitude)
            << " r2=" << short_num(curve.fit->r_squared) << " points=" << curve.fit->points;
      } else {
        sum << "fit=none usable_points<3";
      }
      break;
    }
    case ExperimentKind::ergodicity: {
      ErgodicityOptions o;
      o.steps = cfg.checks.steps;
      o.sample_size = cfg.checks.sample_size;
      o.stationary_burn_in = cfg.checks.stationary_burn_in;
      o.seed = seed;
      o.workers = e.workers;
      const State x0 = m.x0;
      const auto curve = ergodicity_curve<State>(
          m.kernel, [x0](Rng&) { return x0; }, m.x0, m.project, o);
      csv << "step,distance,usable\n";
      for (std::size_t k = 0; k < curve.distance.size(); ++k) {
        csv << k << "," << num(curve.distance[k]) << "," << int(curve.usable[k]) << "\n";
      }
      sum << "noise_floor=" << short_num(curve.noise_floor) << " decreasing=" << (curve.decreasing ? 1 : 0);
      if (curve.fit) {
        res.pass = curve.decreasing && curve.fit->r_squared >= cfg.checks.min_r_squared && curve.fit->rate < 1.0;
        if (cfg.checks.expected_rate) {
          res.pass = res.pass && std::abs(curve.fit->rate - *cfg.checks.expected_rate) <= cfg.checks.rate_tolerance;
        }
        sum << " rate=" << short_num(curve.fit->rate) << " r2=" << short_num(curve.fit->r_squared)
            << " points=" << curve.fit->points;
      } else {
        sum << " fit=none";
      }
      break;
    }
    case ExperimentKind::clt: {
      require_clt_mode(cfg);
      const auto rep = clt_test(m.kernel, m.g, m.x0, clt_options(cfg, cfg.observable.center));
      const double sigma = std::sqrt(rep.sigma2);
      csv << "replica,s_n,standardized\n";
      for (std::size_t r = 0; r < rep.sums.size(); ++r) {
        csv << r << "," << num(rep.sums[r]) << "," << num(rep.sums[r] / sigma) << "\n";
      }
      res.pass = rep.pass;
      sum << "ks=" << short_num(rep.ks) << " sigma2=" << short_num(rep.sigma2)
          << " threshold=" << short_num(rep.threshold) << " center=" << short_num(rep.center);
      break;
    }
    case ExperimentKind::donsker: {
      require_clt_mode(cfg);
      const auto rep = donsker_test(m.kernel, m.g, m.x0, clt_options(cfg, cfg.observable.center));
      csv << "replica,endpoint,running_max,bridge\n";
      for (std::size_t r = 0; r < rep.features.size(); ++r) {
        const auto& f = rep.features[r];
        csv << r << "," << num(f.endpoint) << "," << num(f.running_max) << "," << num(f.bridge) << "\n";
      }
      res.pass = rep.pass;
      sum << "ks=" << short_num(rep.ks_max) << " sigma2=" << short_num(rep.sigma2)
          << " threshold=" << short_num(rep.threshold) << " ks_endpoint=" << short_num(rep.ks_endpoint);
      break;
    }
    case ExperimentKind::mw: {
      require_clt_mode(cfg);
      std::vector<State> grid = m.exact_grid;
      std::vector<double> weights = m.exact_weights;
      std::optional<double> center = cfg.observable.center;
      if (grid.empty()) {
        const std::size_t count = std::max<std::size_t>(1, cfg.checks.grid_points);
        for (std::size_t k = 0; k < count; ++k) {
          Rng rng(derive_seed(seed, stream::center, k));
          grid.push_back(advance(m.kernel, m.x0, cfg.checks.stationary_burn_in, rng));
        }
        weights.assign(count, 1.0 / static_cast<double>(count));
      }
      if (!center) {
        if (!m.exact_weights.empty()) {
          double c = 0.0;
          for (std::size_t k = 0; k < grid.size(); ++k) c += weights[k] * m.g(grid[k]);
          center = c;
        } else {
          const std::size_t steps = e.aux_steps ? e.aux_steps : default_aux_steps(cfg.checks.n_list.back());
          center = estimate_center(m.kernel, m.g, m.x0, e.aux_burn_in, steps, derive_seed(seed, stream::auxiliary),
                                   e.batch_len)
                       .center;
        }
      }
      MwOptions o;
      o.invariant_weights = !cfg.observable.center.has_value();
      o.n_list = cfg.checks.n_list;
      o.replicas = e.replicas;
      o.seed = seed;
      o.workers = e.workers;
      const auto rep = mw_diagnostic(m.kernel, m.g, *center, grid, weights, o);
      csv << "n,root,root_stderr,mean_square\n";
      for (const auto& p : rep.points) {
        csv << p.n << "," << num(p.root) << "," << num(p.root_stderr) << "," << num(p.mean_square) << "\n";
      }
      res.pass = cfg.checks.expect == "growth" ? rep.growth : !rep.growth;
      sum << "slope=" << short_num(rep.slope) << " p=" << short_num(rep.growth_p_value)
          << " growth=" << (rep.growth ? 1 : 0) << " expect=" << cfg.checks.expect
          << " high_variance=" << rep.high_variance;
      break;
    }
    case ExperimentKind::verify_a:
    case ExperimentKind::verify_b:
      throw Error(ErrorCode::invalid_config, to_string(e.kind) + " needs kernel gene");
  }
  res.table = csv.str();
  res.summary = std::string(res.pass ? "PASS " : "FAIL ") + sum.str();
  return res;
}

RunResult run_verify_a(const RunConfig& cfg) {
  const auto rep = check_A_conditions(*cfg.gene, std::max<std::size_t>(2, cfg.checks.grid_points * 10));
  std::ostringstream csv;
  csv << "condition,value,bound,pass\n";
  for (const auto& l : rep.lines) csv << l.name << "," << num(l.value) << "," << num(l.bound) << "," << int(l.pass) << "\n";
  RunResult res;
  res.pass = rep.all_pass;
  res.table = csv.str();
  const auto& k = rep.constants;
  std::ostringstream sum;
  sum << (res.pass ? "PASS" : "FAIL") << " clt_condition=" << short_num(k.clt_condition)
      << " balance=" << short_num(k.balance) << " a=" << short_num(k.a) << " b=" << short_num(k.b);
  for (const auto& l : rep.lines) {
    if (!l.pass) sum << " failed=" << l.name;
  }
  res.summary = sum.str();
  return res;
}

RunResult run_verify_b(const RunConfig& cfg) {
  const auto& gc = *cfg.gene;
  const auto& e = cfg.experiment;
  const std::uint64_t seed = *e.seed;
  const auto k = model_constants(gc);
  if (!(k.a > 0.0 && k.a < 1.0) || !(k.delta > 0.0 && k.delta < 1.0)) {
    throw Error(ErrorCode::precondition, "verify-B needs a and delta in (0, 1); got a=" + short_num(k.a) +
                                             " delta=" + short_num(k.delta));
  }
  const auto kernel = model_kernel(gc);
  const auto ck = model_coupling(gc);
  const int regimes = static_cast<int>(gc.regimes());

  std::vector<ModelState> grid;
  const std::size_t points = std::max<std::size_t>(2, cfg.checks.grid_points);
  for (std::size_t g = 0; g < points; ++g) {
    grid.push_back({cfg.checks.y_max * static_cast<double>(g) / static_cast<double>(points - 1),
                    1 + static_cast<int>(g) % regimes});
  }
  const double ref = gc.reference;
  const LyapunovFn<ModelState> v = [ref](const ModelState& s) { return std::abs(s.y - ref); };
  const auto drift = check_drift(kernel, v, grid, k.a, k.b, true, cfg.checks.drift_replicas,
                                 derive_seed(seed, stream::grid), e.workers);

  auto params = model_coupling_params(gc, k, cfg.conditions.gamma, cfg.conditions.c_gamma);
  params.replicas = cfg.conditions.replicas;
  params.hitting_replicas = cfg.conditions.hitting_replicas;
  params.horizon = cfg.conditions.horizon;
  const auto pairs = sample_state_pairs(gc, cfg.checks.pairs, cfg.checks.y_max, false, seed);
  const auto rep = check_coupling_conditions(ck, params, pairs, derive_seed(seed, stream::condition), e.workers);

  std::ostringstream csv;
  csv << "check,index,value,stderr,bound,pass\n";
  for (std::size_t g = 0; g < drift.points.size(); ++g) {
    const auto& p = drift.points[g];
    csv << "drift," << g << "," << num(p.estimate.mean) << "," << num(p.estimate.stderr_) << "," << num(p.bound) << ","
        << int(p.pass) << "\n";
  }
  for (std::size_t p = 0; p < rep.pairs.size(); ++p) {
    const auto& c = rep.pairs[p];
    if (!c.in_f) continue;
    csv << "contraction," << p << "," << num(c.contraction.mean) << "," << num(c.contraction.stderr_) << ","
        << num(c.contraction_bound) << "," << int(c.contraction_pass) << "\n";
    csv << "near_mass," << p << "," << num(c.near_mass.mean) << "," << num(c.near_mass.stderr_) << ",0,"
        << int(c.near_mass.mean - 3.0 * c.near_mass.stderr_ > 0.0) << "\n";
    csv << "deficit," << p << "," << num(c.deficit.mean) << "," << num(c.deficit.stderr_) << ","
        << num(c.deficit_bound) << "," << int(c.deficit_pass) << "\n";
  }
  for (const auto& h : rep.hitting) {
    csv << "hitting," << h.pair_index << "," << num(h.moment.estimate.mean) << "," << num(h.moment.estimate.stderr_)
        << "," << num(params.c_gamma) << "," << int(h.pass) << "\n";
  }
  RunResult res;
  res.pass = drift.all_pass && rep.all_pass;
  res.table = csv.str();
  std::ostringstream sum;
  sum << (res.pass ? "PASS" : "FAIL") << " drift=" << (drift.all_pass ? 1 : 0)
      << " contraction=" << (rep.contraction_pass ? 1 : 0) << " near_mass_min=" << short_num(rep.near_mass_min)
      << " deficit=" << (rep.deficit_pass ? 1 : 0) << " hitting=" << (rep.hitting_pass ? 1 : 0)
      << " coverage=" << rep.hitting_coverage << "/" << pairs.size() << " gamma0=" << short_num(rep.gamma0);
  res.summary = sum.str();
  return res;
}

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

}  // namespace

RunResult execute(const RunConfig& cfg) {
  require(cfg.experiment.seed.has_value(), "experiment.seed: a master seed is required", ErrorCode::invalid_config);
  switch (cfg.experiment.kind) {
    case ExperimentKind::verify_a: return run_verify_a(cfg);
    case ExperimentKind::verify_b: return run_verify_b(cfg);
    default: break;
  }
  switch (cfg.experiment.kernel) {
    case KernelKind::gene: {
      auto m = gene_model(cfg);
      return run_model(cfg, m);
    }
    case KernelKind::finite: {
      auto m = finite_model(cfg);
      return run_model(cfg, m);
    }
    case KernelKind::identity:
    case KernelKind::ar1: {
      auto m = real_model(cfg);
      return run_model(cfg, m);
    }
  }
  throw Error(ErrorCode::internal, "unhandled kernel kind");
}

RunResult run_experiment(RunConfig cfg, const RunOptions& opts) {
  if (opts.seed) cfg.experiment.seed = opts.seed;
  if (opts.workers) cfg.experiment.workers = *opts.workers;
  require(cfg.experiment.workers >= 1, "--workers must be >= 1", ErrorCode::invalid_config);
  const auto t0 = std::chrono::steady_clock::now();
  RunResult res = execute(cfg);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  namespace fs = std::filesystem;
  fs::create_directories(opts.out_dir);
  const fs::path table = fs::path(opts.out_dir) / "results.csv";
  const fs::path manifest = fs::path(opts.out_dir) / "manifest.yaml";
  {
    std::ofstream out(table, std::ios::binary);
    out << res.table;
    if (!out) throw Error(ErrorCode::internal, "cannot write " + table.string());
  }
  YAML::Emitter y;
  y.SetDoublePrecision(17);
  y << YAML::BeginMap;
  y << YAML::Key << "tool" << YAML::Value << "mclt";
  y << YAML::Key << "version" << YAML::Value << kVersion;
  y << YAML::Key << "master_seed" << YAML::Value << *cfg.experiment.seed;
  y << YAML::Key << "seed_derivation" << YAML::Value
    << "splitmix64 of (master, stream tag, index); tags replica=1 auxiliary=2 stationary=3 coupling=4 "
       "condition=5 grid=6 center=7";
  y << YAML::Key << "workers" << YAML::Value << cfg.experiment.workers;
  y << YAML::Key << "results" << YAML::Value << table.filename().string();
  y << YAML::Key << "summary" << YAML::Value << res.summary;
  y << YAML::Key << "pass" << YAML::Value << res.pass;
  y << YAML::Key << "wall_time_seconds" << YAML::Value << wall;
  y << YAML::Key << "timestamp" << YAML::Value << timestamp();
  y << YAML::Key << "config" << YAML::Value << YAML::Load(resolved_yaml(cfg));
  y << YAML::EndMap;
  std::ofstream mout(manifest, std::ios::binary);
  mout << y.c_str() << "\n";
  if (!mout) throw Error(ErrorCode::internal, "cannot write " + manifest.string());
  return res;
}

std::string validation_report(const RunConfig& cfg, bool& ok) {
  std::ostringstream os;
  ok = true;
  os << "config valid: kind=" << to_string(cfg.experiment.kind) << " kernel=" << to_string(cfg.experiment.kernel)
     << "\n";
  if (!cfg.experiment.seed) os << "note: no experiment.seed; pass --seed to run\n";
  if (cfg.experiment.kernel == KernelKind::gene) {
    const auto k = model_constants(*cfg.gene);
    os << "L = " << num(k.L) << "\n"
       << "alpha = " << num(k.alpha) << "\n"
       << "L_w' = " << num(k.Lw_prime) << "\n"
       << "L_pi = " << num(k.L_pi) << "\n"
       << "L_p = " << num(k.L_p) << "\n"
       << "d_pi = " << num(k.d_pi) << "\n"
       << "d_p = " << num(k.d_p) << "\n"
       << "a = " << num(k.a) << "\n"
       << "b = " << num(k.b) << "\n"
       << "delta = " << num(k.delta) << "\n"
       << "c_beta = " << num(k.c_beta) << "\n"
       << "balance: L L_w + alpha/lambda = " << num(k.balance) << (k.balance_pass ? " < 1 ok" : " >= 1 FAIL") << "\n"
       << "clt_condition: L^2 L_w' + 2 alpha/lambda = " << num(k.clt_condition)
       << (k.clt_pass ? " < 1 ok" : " >= 1 FAIL") << "\n";
    const auto kind = cfg.experiment.kind;
    const bool needs_clt = kind == ExperimentKind::clt || kind == ExperimentKind::donsker ||
                           kind == ExperimentKind::mw || kind == ExperimentKind::verify_b;
    if (needs_clt && !k.clt_pass) {
      ok = false;
      os << "precondition failed: " << to_string(kind) << " needs the clt condition\n";
    }
  }
  return os.str();
}

int exit_status(ErrorCode code) noexcept { return static_cast<int>(code); }

}  // namespace mclt
