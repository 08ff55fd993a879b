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

#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <yaml-cpp/yaml.h>

#include "mclt/runner.hpp"

namespace mclt {

namespace {

std::string at_line(const YAML::Node& node) {
  if (!node.IsDefined()) return std::string();
  const auto mark = node.Mark();
  return mark.is_null() ? std::string() : "line " + std::to_string(mark.line + 1) + ": ";
}

class Section {
 public:
  Section(const YAML::Node& root, const std::string& name, std::set<std::string> allowed,
          std::vector<std::string>& errors)
      : name_(name), errors_(errors) {
    const YAML::Node found = root[name];
    if (!found.IsDefined()) return;
    node_.reset(found);
    if (!node_.IsMap()) {
      error(node_, "", "section must be a mapping");
      node_.reset(YAML::Node(YAML::NodeType::Undefined));
      return;
    }
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) error(kv.first, key, "unknown key");
    }
  }

  bool present() const { return node_.IsDefined(); }
  bool has(const std::string& key) const { return present() && node_[key].IsDefined(); }

  template <class T>
  void get(const std::string& key, T& out, bool required = false) {
    if (!has(key)) {
      if (required) errors_.push_back(at_line(node_) + name_ + "." + key + ": required field is missing");
      return;
    }
    const YAML::Node v = std::as_const(node_)[key];
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      error(v, key, "expected " + type_name<T>());
    }
  }

  template <class T>
  void get(const std::string& key, std::optional<T>& out) {
    if (!has(key)) return;
    T value{};
    get(key, value);
    out = value;
  }

  void error(const YAML::Node& at, const std::string& key, const std::string& msg) {
    errors_.push_back(at_line(at) + name_ + (key.empty() ? "" : "." + key) + ": " + msg);
  }
  void error(const std::string& key, const std::string& msg) { error(std::as_const(node_)[key], key, msg); }

 private:
  template <class T>
  static std::string type_name() {
    if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_same_v<T, std::string>) return "a string";
    else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) return "a nonnegative integer";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else return "a list of numbers";
  }

  std::string name_;
  std::vector<std::string>& errors_;
  YAML::Node node_{YAML::NodeType::Undefined};
};

std::optional<ExperimentKind> parse_kind(const std::string& s) {
  for (auto k : {ExperimentKind::simulate, ExperimentKind::couple_decay, ExperimentKind::verify_b,
                 ExperimentKind::verify_a, ExperimentKind::ergodicity, ExperimentKind::clt,
                 ExperimentKind::donsker, ExperimentKind::mw}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<KernelKind> parse_kernel(const std::string& s) {
  for (auto k : {KernelKind::gene, KernelKind::finite, KernelKind::identity, KernelKind::ar1}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

void check_semantics(const RunConfig& cfg, std::vector<std::string>& errs) {
  const auto& e = cfg.experiment;
  const auto kind = e.kind;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) errs.push_back(msg);
  };
  need(e.workers >= 1, "experiment.workers: must be >= 1");
  need(e.replicas >= 1, "experiment.replicas: must be >= 1");
  if (e.kernel == KernelKind::gene) need(cfg.gene.has_value(), "gene_model: section is required for kernel gene");
  if (e.kernel == KernelKind::finite) {
    need(cfg.finite.has_value(), "finite_kernel: section is required for kernel finite");
  }
  if (kind == ExperimentKind::verify_a || kind == ExperimentKind::verify_b) {
    need(e.kernel == KernelKind::gene, "experiment.kernel: " + to_string(kind) + " needs kernel gene");
  }
  if (kind == ExperimentKind::clt || kind == ExperimentKind::donsker || kind == ExperimentKind::mw ||
      kind == ExperimentKind::simulate) {
    need(e.n >= 1, "experiment.n: must be >= 1");
  }
  if (kind == ExperimentKind::couple_decay) need(e.replicas >= 100, "experiment.replicas: couple-decay needs >= 100");
  if (kind == ExperimentKind::mw) {
    need(!cfg.checks.n_list.empty(), "checks.n_list: must not be empty");
    need(cfg.checks.expect == "plateau" || cfg.checks.expect == "growth",
         "checks.expect: must be plateau or growth");
  }
  need(cfg.checks.bin_width > 0.0, "checks.bin_width: must be positive");
  need(cfg.checks.y_max > 0.0, "checks.y_max: must be positive");
  need(cfg.conditions.gamma > 0.0 && cfg.conditions.gamma < 1.0, "conditions.gamma: must lie in (0, 1)");
  const auto& obs = cfg.observable.kind;
  if (e.kernel == KernelKind::gene) {
    need(obs == "atan" || obs == "clipped" || obs == "regime", "observable.kind: gene supports atan, clipped, regime");
    if (cfg.gene) {
      const int n = static_cast<int>(cfg.gene->regimes());
      need(cfg.initial.y >= 0.0 && cfg.initial.partner_y >= 0.0, "initial: amounts must be nonnegative");
      need(cfg.initial.i >= 1 && cfg.initial.i <= n && cfg.initial.partner_i >= 1 && cfg.initial.partner_i <= n,
           "initial: regime indices must lie in 1.." + std::to_string(n));
    }
  } else if (e.kernel == KernelKind::finite) {
    need(obs == "value", "observable.kind: finite supports value");
    if (cfg.finite) {
      const int n = static_cast<int>(cfg.finite->matrix.size());
      need(cfg.initial.state >= 0 && cfg.initial.state < n && cfg.initial.partner_state >= 0 &&
               cfg.initial.partner_state < n,
           "initial: states must lie in 0.." + std::to_string(n - 1));
      need(cfg.finite->values.empty() || cfg.finite->values.size() == cfg.finite->matrix.size(),
           "finite_kernel.values: needs one value per state");
    }
  } else {
    need(obs == "atan" || obs == "clipped" || obs == "value", "observable.kind: real kernels support atan, clipped, value");
  }
  need(cfg.observable.clip > 0.0, "observable.clip: must be positive");
  need(cfg.observable.scale != 0.0, "observable.scale: must be nonzero");
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::couple_decay: return "couple-decay";
    case ExperimentKind::verify_b: return "verify-B";
    case ExperimentKind::verify_a: return "verify-A";
    case ExperimentKind::ergodicity: return "ergodicity";
    case ExperimentKind::clt: return "clt";
    case ExperimentKind::donsker: return "donsker";
    case ExperimentKind::mw: return "mw";
  }
  return "unknown";
}

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::gene: return "gene";
    case KernelKind::finite: return "finite";
    case KernelKind::identity: return "identity";
    case KernelKind::ar1: return "ar1";
  }
  return "unknown";
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& ex) {
    throw Error(ErrorCode::invalid_config, source + ": line " + std::to_string(ex.mark.line + 1) + ": " + ex.msg);
  }
  if (!root.IsMap()) throw Error(ErrorCode::invalid_config, source + ": top level must be a mapping");

  std::vector<std::string> errs;
  std::vector<std::string> range_errs;
  const std::set<std::string> sections{"experiment", "gene_model", "finite_kernel", "ar1",
                                       "initial",    "observable", "checks",        "conditions"};
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (!sections.count(key)) errs.push_back(at_line(kv.first) + key + ": unknown section");
  }

  RunConfig cfg;
  Section ex(root, "experiment",
             {"kind", "kernel", "seed", "n", "replicas", "burn_in", "aux_burn_in", "aux_steps", "batch_len", "start",
              "threshold", "workers"},
             errs);
  if (!ex.present()) errs.push_back("experiment: section is required");
  std::string kind, kernel, start = "stationary";
  ex.get("kind", kind, ex.present());
  ex.get("kernel", kernel, ex.present());
  if (ex.has("kind")) {
    if (auto k = parse_kind(kind)) cfg.experiment.kind = *k;
    else ex.error("kind", "unknown experiment kind '" + kind + "'");
  }
  if (ex.has("kernel")) {
    if (auto k = parse_kernel(kernel)) cfg.experiment.kernel = *k;
    else ex.error("kernel", "unknown kernel '" + kernel + "'");
  }
  ex.get("seed", cfg.experiment.seed);
  ex.get("n", cfg.experiment.n);
  ex.get("replicas", cfg.experiment.replicas);
  ex.get("burn_in", cfg.experiment.burn_in);
  ex.get("aux_burn_in", cfg.experiment.aux_burn_in);
  ex.get("aux_steps", cfg.experiment.aux_steps);
  ex.get("batch_len", cfg.experiment.batch_len);
  ex.get("start", start);
  if (start != "stationary" && start != "fixed") ex.error("start", "must be stationary or fixed");
  cfg.experiment.stationary_start = start == "stationary";
  ex.get("threshold", cfg.experiment.threshold);
  ex.get("workers", cfg.experiment.workers);

  Section gm(root, "gene_model",
             {"lambda", "decay_rates", "burst_rate_base", "burst_rate_gain", "switch_base", "switch_gain", "epsilon",
              "epsilon_max", "metric_weight", "reference", "allow_nonpositive_decay"},
             errs);
  if (gm.present()) {
    GeneModelConfig g;
    gm.get("lambda", g.lambda, true);
    gm.get("decay_rates", g.decay_rates, true);
    gm.get("burst_rate_base", g.burst_rate_base, true);
    gm.get("burst_rate_gain", g.burst_rate_gain);
    gm.get("switch_base", g.switch_base);
    gm.get("switch_gain", g.switch_gain);
    gm.get("epsilon", g.epsilon);
    g.epsilon_max = g.epsilon;
    gm.get("epsilon_max", g.epsilon_max);
    gm.get("metric_weight", g.metric_weight);
    gm.get("reference", g.reference);
    gm.get("allow_nonpositive_decay", g.allow_nonpositive_decay);
    for (const auto& msg : validation_errors(g)) range_errs.push_back("gene_model." + msg);
    cfg.gene = g;
  }

  Section fk(root, "finite_kernel", {"matrix", "distance", "values"}, errs);
  if (fk.present()) {
    FiniteKernelConfig f;
    fk.get("matrix", f.matrix, true);
    fk.get("distance", f.distance);
    fk.get("values", f.values);
    try {
      if (!f.matrix.empty()) {
        if (f.distance.empty()) FiniteKernel{f.matrix};
        else FiniteKernel(f.matrix, f.distance);
      }
    } catch (const Error& e) {
      errs.push_back("finite_kernel: " + std::string(e.what()));
    }
    cfg.finite = f;
  }

  Section ar(root, "ar1", {"coefficient", "noise_sd"}, errs);
  ar.get("coefficient", cfg.ar1.coefficient);
  ar.get("noise_sd", cfg.ar1.noise_sd);
  if (!(cfg.ar1.noise_sd >= 0.0)) ar.error("noise_sd", "must be nonnegative");

  Section in(root, "initial", {"y", "i", "partner_y", "partner_i", "state", "partner_state", "x", "partner_x"}, errs);
  in.get("y", cfg.initial.y);
  in.get("i", cfg.initial.i);
  in.get("partner_y", cfg.initial.partner_y);
  in.get("partner_i", cfg.initial.partner_i);
  in.get("state", cfg.initial.state);
  in.get("partner_state", cfg.initial.partner_state);
  in.get("x", cfg.initial.x);
  in.get("partner_x", cfg.initial.partner_x);

  Section ob(root, "observable", {"kind", "clip", "scale", "center"}, errs);
  if (cfg.experiment.kernel == KernelKind::finite) cfg.observable.kind = "value";
  ob.get("kind", cfg.observable.kind);
  ob.get("clip", cfg.observable.clip);
  ob.get("scale", cfg.observable.scale);
  ob.get("center", cfg.observable.center);

  Section ck(root, "checks",
             {"grid_points", "y_max", "pairs", "steps", "sample_size", "stationary_burn_in", "bin_width", "n_list",
              "min_r_squared", "expected_rate", "rate_tolerance", "expect", "drift_replicas"},
             errs);
  ck.get("grid_points", cfg.checks.grid_points);
  ck.get("y_max", cfg.checks.y_max);
  ck.get("pairs", cfg.checks.pairs);
  ck.get("steps", cfg.checks.steps);
  ck.get("sample_size", cfg.checks.sample_size);
  ck.get("stationary_burn_in", cfg.checks.stationary_burn_in);
  ck.get("bin_width", cfg.checks.bin_width);
  ck.get("n_list", cfg.checks.n_list);
  ck.get("min_r_squared", cfg.checks.min_r_squared);
  ck.get("expected_rate", cfg.checks.expected_rate);
  ck.get("rate_tolerance", cfg.checks.rate_tolerance);
  ck.get("expect", cfg.checks.expect);
  ck.get("drift_replicas", cfg.checks.drift_replicas);

  Section co(root, "conditions", {"gamma", "c_gamma", "horizon", "replicas", "hitting_replicas"}, errs);
  co.get("gamma", cfg.conditions.gamma);
  co.get("c_gamma", cfg.conditions.c_gamma);
  co.get("horizon", cfg.conditions.horizon);
  co.get("replicas", cfg.conditions.replicas);
  co.get("hitting_replicas", cfg.conditions.hitting_replicas);

  if (errs.empty() && range_errs.empty()) check_semantics(cfg, errs);
  // Out-of-range model parameters alone are precondition failures; any
  // structural problem makes the whole report an invalid_config error.
  const ErrorCode code = errs.empty() ? ErrorCode::precondition : ErrorCode::invalid_config;
  errs.insert(errs.end(), range_errs.begin(), range_errs.end());
  if (!errs.empty()) {
    std::ostringstream os;
    os << source << ": " << errs.size() << " problem" << (errs.size() == 1 ? "" : "s") << " in config";
    for (const auto& e : errs) os << "\n  " << e;
    throw Error(code, os.str());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::invalid_config, "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string resolved_yaml(const RunConfig& cfg) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  const auto& e = cfg.experiment;
  out << YAML::Key << "experiment" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << to_string(e.kind);
  out << YAML::Key << "kernel" << YAML::Value << to_string(e.kernel);
  if (e.seed) out << YAML::Key << "seed" << YAML::Value << *e.seed;
  out << YAML::Key << "n" << YAML::Value << e.n;
  out << YAML::Key << "replicas" << YAML::Value << e.replicas;
  out << YAML::Key << "burn_in" << YAML::Value << e.burn_in;
  out << YAML::Key << "aux_burn_in" << YAML::Value << e.aux_burn_in;
  out << YAML::Key << "aux_steps" << YAML::Value << e.aux_steps;
  out << YAML::Key << "batch_len" << YAML::Value << e.batch_len;
  out << YAML::Key << "start" << YAML::Value << (e.stationary_start ? "stationary" : "fixed");
  out << YAML::Key << "threshold" << YAML::Value << e.threshold;
  out << YAML::EndMap;
  if (cfg.gene) {
    const auto& g = *cfg.gene;
    out << YAML::Key << "gene_model" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "lambda" << YAML::Value << g.lambda;
    out << YAML::Key << "decay_rates" << YAML::Value << YAML::Flow << g.decay_rates;
    out << YAML::Key << "burst_rate_base" << YAML::Value << g.burst_rate_base;
    out << YAML::Key << "burst_rate_gain" << YAML::Value << g.burst_rate_gain;
    out << YAML::Key << "switch_base" << YAML::Value << g.switch_base;
    out << YAML::Key << "switch_gain" << YAML::Value << g.switch_gain;
    out << YAML::Key << "epsilon" << YAML::Value << g.epsilon;
    out << YAML::Key << "epsilon_max" << YAML::Value << g.epsilon_max;
    out << YAML::Key << "metric_weight" << YAML::Value << g.metric_weight;
    out << YAML::Key << "reference" << YAML::Value << g.reference;
    out << YAML::Key << "allow_nonpositive_decay" << YAML::Value << g.allow_nonpositive_decay;
    out << YAML::EndMap;
  }
  if (cfg.finite) {
    out << YAML::Key << "finite_kernel" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "matrix" << YAML::Value << YAML::BeginSeq;
    for (const auto& row : cfg.finite->matrix) out << YAML::Flow << row;
    out << YAML::EndSeq;
    if (!cfg.finite->distance.empty()) {
      out << YAML::Key << "distance" << YAML::Value << YAML::BeginSeq;
      for (const auto& row : cfg.finite->distance) out << YAML::Flow << row;
      out << YAML::EndSeq;
    }
    if (!cfg.finite->values.empty()) out << YAML::Key << "values" << YAML::Value << YAML::Flow << cfg.finite->values;
    out << YAML::EndMap;
  }
  if (e.kernel == KernelKind::ar1) {
    out << YAML::Key << "ar1" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "coefficient" << YAML::Value << cfg.ar1.coefficient;
    out << YAML::Key << "noise_sd" << YAML::Value << cfg.ar1.noise_sd;
    out << YAML::EndMap;
  }
  const auto& in = cfg.initial;
  out << YAML::Key << "initial" << YAML::Value << YAML::BeginMap;
  if (e.kernel == KernelKind::gene) {
    out << YAML::Key << "y" << YAML::Value << in.y << YAML::Key << "i" << YAML::Value << in.i;
    out << YAML::Key << "partner_y" << YAML::Value << in.partner_y << YAML::Key << "partner_i" << YAML::Value
        << in.partner_i;
  } else if (e.kernel == KernelKind::finite) {
    out << YAML::Key << "state" << YAML::Value << in.state << YAML::Key << "partner_state" << YAML::Value
        << in.partner_state;
  } else {
    out << YAML::Key << "x" << YAML::Value << in.x << YAML::Key << "partner_x" << YAML::Value << in.partner_x;
  }
  out << YAML::EndMap;
  out << YAML::Key << "observable" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << cfg.observable.kind;
  out << YAML::Key << "clip" << YAML::Value << cfg.observable.clip;
  out << YAML::Key << "scale" << YAML::Value << cfg.observable.scale;
  if (cfg.observable.center) out << YAML::Key << "center" << YAML::Value << *cfg.observable.center;
  out << YAML::EndMap;
  const auto& c = cfg.checks;
  out << YAML::Key << "checks" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "grid_points" << YAML::Value << c.grid_points;
  out << YAML::Key << "y_max" << YAML::Value << c.y_max;
  out << YAML::Key << "pairs" << YAML::Value << c.pairs;
  out << YAML::Key << "steps" << YAML::Value << c.steps;
  out << YAML::Key << "sample_size" << YAML::Value << c.sample_size;
  out << YAML::Key << "stationary_burn_in" << YAML::Value << c.stationary_burn_in;
  out << YAML::Key << "bin_width" << YAML::Value << c.bin_width;
  out << YAML::Key << "n_list" << YAML::Value << YAML::Flow << c.n_list;
  out << YAML::Key << "min_r_squared" << YAML::Value << c.min_r_squared;
  if (c.expected_rate) out << YAML::Key << "expected_rate" << YAML::Value << *c.expected_rate;
  out << YAML::Key << "rate_tolerance" << YAML::Value << c.rate_tolerance;
  out << YAML::Key << "expect" << YAML::Value << c.expect;
  out << YAML::Key << "drift_replicas" << YAML::Value << c.drift_replicas;
  out << YAML::EndMap;
  const auto& k = cfg.conditions;
  out << YAML::Key << "conditions" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "gamma" << YAML::Value << k.gamma;
  out << YAML::Key << "c_gamma" << YAML::Value << k.c_gamma;
  out << YAML::Key << "horizon" << YAML::Value << k.horizon;
  out << YAML::Key << "replicas" << YAML::Value << k.replicas;
  out << YAML::Key << "hitting_replicas" << YAML::Value << k.hitting_replicas;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return out.c_str();
}

}  // namespace mclt
