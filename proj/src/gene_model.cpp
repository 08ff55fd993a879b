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

#include "mclt/gene_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "mclt/error.hpp"

namespace mclt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double max_rate(const GeneModelConfig& cfg) { return cfg.burst_rate_base + cfg.burst_rate_gain; }

double grid_amount(std::size_t g, std::size_t points, double y_max) {
  return std::expm1(std::log1p(y_max) * static_cast<double>(g) / static_cast<double>(points - 1));
}

void require_regime(const GeneModelConfig& cfg, int i) {
  require(i >= 1 && static_cast<std::size_t>(i) <= cfg.regimes(), "gene model: regime index out of range");
}

// Sum over j of min(row1_j, row2_j) for the rows of regimes i1, i2 at
// switching probabilities k1, k2.
double row_overlap(std::size_t n, bool same, double k1, double k2) {
  if (n == 1) return 1.0;
  if (same) return 1.0 - std::abs(k1 - k2);
  const double m = static_cast<double>(n - 1);
  return std::min(1.0 - k1, k2 / m) + std::min(k1 / m, 1.0 - k2) +
         static_cast<double>(n - 2) * std::min(k1, k2) / m;
}

// Draw from the maximal coupling of Exp(rate1) and Exp(rate2).
struct BurstPair {
  double first;
  double second;
  bool coupled;
};

BurstPair couple_bursts(double rate1, double rate2, Rng& rng) {
  const double t1 = rng.exponential(rate1);
  if (rate1 == rate2) return {t1, t1, true};
  auto density = [](double rate, double t) { return rate * std::exp(-rate * t); };
  if (rng.uniform() * density(rate1, t1) <= density(rate2, t1)) return {t1, t1, true};
  for (;;) {
    const double t2 = rng.exponential(rate2);
    const double p2 = density(rate2, t2);
    if (rng.uniform() * p2 > density(rate1, t2)) return {t1, t2, false};
  }
}

// Row i of pi(y) by inversion: stay with probability 1 - kappa, otherwise
// move to one of the other regimes uniformly.
int draw_regime(const GeneModelConfig& cfg, int i, double y, Rng& rng) {
  const std::size_t n = cfg.regimes();
  if (n == 1) return 1;
  const double k = switch_probability(cfg, y);
  const double u = rng.uniform();
  if (u < 1.0 - k) return i;
  const double share = k / static_cast<double>(n - 1);
  auto slot = static_cast<std::size_t>((u - (1.0 - k)) / share);
  slot = std::min(slot, n - 2);
  const int j = static_cast<int>(slot) + 1;
  return j >= i ? j + 1 : j;
}

}  // namespace

std::vector<std::string> validation_errors(const GeneModelConfig& cfg) {
  std::vector<std::string> errs;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) errs.push_back(msg);
  };
  check(std::isfinite(cfg.lambda) && cfg.lambda > 0.0, "lambda: jump intensity must be positive");
  check(!cfg.decay_rates.empty(), "decay_rates must list at least one rate");
  for (std::size_t k = 0; k < cfg.decay_rates.size(); ++k) {
    const double r = cfg.decay_rates[k];
    if (!std::isfinite(r)) {
      errs.push_back("decay_rates[" + std::to_string(k) + "] is not finite");
    } else if (r <= 0.0 && !cfg.allow_nonpositive_decay) {
      errs.push_back("decay_rates[" + std::to_string(k) + "] must be positive");
    }
  }
  check(std::isfinite(cfg.burst_rate_base) && cfg.burst_rate_base > 0.0, "burst_rate_base must be positive");
  check(std::isfinite(cfg.burst_rate_gain) && cfg.burst_rate_gain >= 0.0, "burst_rate_gain must be nonnegative");
  check(cfg.switch_base >= 0.0, "switch_base must be nonnegative");
  check(cfg.switch_gain >= 0.0, "switch_gain must be nonnegative");
  check(cfg.switch_base + cfg.switch_gain <= 1.0, "switch_base + switch_gain must not exceed 1");
  check(cfg.epsilon_max >= 0.0 && std::isfinite(cfg.epsilon_max), "epsilon_max must be finite and nonnegative");
  check(cfg.epsilon >= 0.0 && cfg.epsilon <= cfg.epsilon_max, "epsilon must lie in [0, epsilon_max]");
  check(cfg.metric_weight > 0.0 && std::isfinite(cfg.metric_weight), "metric_weight must be positive");
  check(cfg.reference >= 0.0 && std::isfinite(cfg.reference), "reference must be a finite nonnegative amount");
  return errs;
}

void validate(const GeneModelConfig& cfg) {
  const auto errs = validation_errors(cfg);
  if (errs.empty()) return;
  std::ostringstream os;
  os << "invalid gene model config:";
  for (const auto& e : errs) os << "\n  - " << e;
  throw Error(ErrorCode::precondition, os.str());
}

double semiflow(const GeneModelConfig& cfg, int i, double t, double y) {
  require_regime(cfg, i);
  require(t >= 0.0 && y >= 0.0, "semiflow: t and y must be nonnegative");
  return y * std::exp(-cfg.decay_rates[static_cast<std::size_t>(i - 1)] * t);
}

double burst_rate(const GeneModelConfig& cfg, double y) {
  return cfg.burst_rate_base + cfg.burst_rate_gain / (1.0 + y);
}

double switch_probability(const GeneModelConfig& cfg, double y) {
  return cfg.switch_base + cfg.switch_gain * y / (1.0 + y);
}

std::vector<double> switch_row(const GeneModelConfig& cfg, int i, double y) {
  require_regime(cfg, i);
  const std::size_t n = cfg.regimes();
  if (n == 1) return {1.0};
  const double k = switch_probability(cfg, y);
  std::vector<double> row(n, k / static_cast<double>(n - 1));
  row[static_cast<std::size_t>(i - 1)] = 1.0 - k;
  return row;
}

JumpResult post_jump_step(const GeneModelConfig& cfg, const ModelState& state, Rng& rng,
                          std::optional<double> forced_dt) {
  require(state.y >= 0.0, "post_jump_step: amount must be nonnegative");
  JumpResult out;
  out.jump.dt = forced_dt ? *forced_dt : rng.exponential(cfg.lambda);
  const double mid = semiflow(cfg, state.i, out.jump.dt, state.y);
  out.jump.theta = rng.exponential(burst_rate(cfg, mid));
  out.jump.h = cfg.epsilon > 0.0 ? cfg.epsilon * rng.uniform() : 0.0;
  out.state.y = mid + out.jump.theta + out.jump.h;
  out.jump.j = draw_regime(cfg, state.i, out.state.y, rng);
  out.state.i = out.jump.j;
  return out;
}

JumpResult post_jump_step(const GeneModelConfig& cfg, const ModelState& state, std::uint64_t seed) {
  Rng rng(seed);
  return post_jump_step(cfg, state, rng);
}

double lyapunov_V(const GeneModelConfig& cfg, const ModelState& state) {
  return std::abs(state.y - cfg.reference);
}

MetricSpace<ModelState> model_space(const GeneModelConfig& cfg) {
  const double weight = cfg.metric_weight;
  return {[weight](const ModelState& a, const ModelState& b) {
            return std::abs(a.y - b.y) + (a.i == b.i ? 0.0 : weight);
          },
          "|y1 - y2| + c [i != j]"};
}

Kernel<ModelState> model_kernel(const GeneModelConfig& cfg) {
  validate(cfg);
  auto shared = std::make_shared<const GeneModelConfig>(cfg);
  return Kernel<ModelState>(
      [shared](const ModelState& s, Rng& rng) { return post_jump_step(*shared, s, rng).state; },
      model_space(cfg));
}

CoupledKernel<ModelState> model_coupling(const GeneModelConfig& cfg) {
  validate(cfg);
  auto c = std::make_shared<const GeneModelConfig>(cfg);
  auto step = [c](const ModelState& x, const ModelState& y, Rng& rng) {
    const double dt = rng.exponential(c->lambda);
    const double h = c->epsilon > 0.0 ? c->epsilon * rng.uniform() : 0.0;
    const double m1 = semiflow(*c, x.i, dt, x.y);
    const double m2 = semiflow(*c, y.i, dt, y.y);
    const BurstPair burst = couple_bursts(burst_rate(*c, m1), burst_rate(*c, m2), rng);
    CoupledOutcome<ModelState> out;
    out.u.y = m1 + burst.first + h;
    out.v.y = m2 + burst.second + h;

    const auto r1 = switch_row(*c, x.i, out.u.y);
    const auto r2 = switch_row(*c, y.i, out.v.y);
    const std::size_t n = r1.size();
    std::vector<double> common(n), rest1(n), rest2(n);
    double overlap = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      common[k] = std::min(r1[k], r2[k]);
      rest1[k] = r1[k] - common[k];
      rest2[k] = r2[k] - common[k];
      overlap += common[k];
    }
    bool same_switch = false;
    if (rng.uniform() < overlap) {
      const auto j = static_cast<int>(rng.categorical(common, overlap)) + 1;
      out.u.i = out.v.i = j;
      same_switch = true;
    } else {
      out.u.i = static_cast<int>(rng.categorical(rest1, 1.0 - overlap)) + 1;
      out.v.i = static_cast<int>(rng.categorical(rest2, 1.0 - overlap)) + 1;
    }
    out.fired = burst.coupled && same_switch;
    return out;
  };
  return CoupledKernel<ModelState>::joint(model_kernel(cfg), step);
}

bool same_regime(const ModelState& x, const ModelState& y) { return x.i == y.i; }

ModelState bin_state(const ModelState& s, double width) {
  require(width > 0.0, "bin_state: width must be positive");
  return {(std::floor(s.y / width) + 0.5) * width, s.i};
}

// ---------------------------------------------------------------------------

double exponential_overlap(double rate1, double rate2) {
  require(rate1 > 0.0 && rate2 > 0.0, "exponential_overlap: rates must be positive");
  const double lo = std::min(rate1, rate2), hi = std::max(rate1, rate2);
  if (lo == hi) return 1.0;
  const double cross = std::log(hi / lo) / (hi - lo);
  return 1.0 - std::exp(-lo * cross) + std::exp(-hi * cross);
}

double exponential_l1(double rate1, double rate2) { return 2.0 * (1.0 - exponential_overlap(rate1, rate2)); }

namespace {

// e^{-lambda t} (c^2 + 2 c / rate + 2 / rate^2) with c = S_i(t, y-bar) - y-bar.
double a1_integrand(const GeneModelConfig& cfg, double r, double t, double rate) {
  const double c = cfg.reference * (std::exp(-r * t) - 1.0);
  const double value = std::exp(-cfg.lambda * t) * (c * c + 2.0 * c / rate + 2.0 / (rate * rate));
  return std::isfinite(value) ? value : 0.0;
}

bool a1_diverges(const GeneModelConfig& cfg, double r) {
  return cfg.reference > 0.0 && -2.0 * r >= cfg.lambda;
}

}  // namespace

double a1_integral(const GeneModelConfig& cfg, int i, double y) {
  require_regime(cfg, i);
  require(y >= 0.0, "a1_integral: y must be nonnegative");
  const double r = cfg.decay_rates[static_cast<std::size_t>(i - 1)];
  if (a1_diverges(cfg, r)) return kInf;
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [&](double t) { return a1_integrand(cfg, r, t, burst_rate(cfg, y * std::exp(-r * t))); };
  return integrator.integrate(f);
}

double a1_tail(const GeneModelConfig& cfg, int i) {
  require_regime(cfg, i);
  const double r = cfg.decay_rates[static_cast<std::size_t>(i - 1)];
  if (a1_diverges(cfg, r)) return kInf;
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate([&](double t) { return a1_integrand(cfg, r, t, cfg.burst_rate_base); });
}

ModelConstants model_constants(const GeneModelConfig& cfg, std::size_t grid_points, double y_max) {
  validate(cfg);
  require(grid_points >= 2 && y_max > 0.0, "model_constants: need a grid of at least two points");
  ModelConstants k;
  const std::size_t n = cfg.regimes();
  const double lambda = cfg.lambda;

  k.L = 1.0;
  k.alpha = -*std::min_element(cfg.decay_rates.begin(), cfg.decay_rates.end());
  k.Lw_prime = 1.0;
  k.Lw = 1.0;
  k.L_pi = n == 1 ? 0.0 : 2.0 * cfg.switch_gain;
  k.L_p = 2.0 * cfg.burst_rate_gain / (std::exp(1.0) * max_rate(cfg));

  const double k_lo = cfg.switch_base, k_hi = cfg.switch_base + cfg.switch_gain;
  k.d_pi = 1.0;
  for (double k1 : {k_lo, k_hi}) {
    for (double k2 : {k_lo, k_hi}) {
      k.d_pi = std::min(k.d_pi, row_overlap(n, true, k1, k2));
      if (n > 1) k.d_pi = std::min(k.d_pi, row_overlap(n, false, k1, k2));
    }
  }
  k.d_p = exponential_overlap(cfg.burst_rate_base, max_rate(cfg));

  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t g = 0; g < grid_points; ++g) {
      const double y = grid_amount(g, grid_points, y_max);
      k.a1_grid_sup = std::max(k.a1_grid_sup, a1_integral(cfg, static_cast<int>(i), y));
    }
    k.a1_tail_sup = std::max(k.a1_tail_sup, a1_tail(cfg, static_cast<int>(i)));
  }

  const double sup = std::max(k.a1_grid_sup, k.a1_tail_sup);
  k.a = lambda > 2.0 * k.alpha ? std::sqrt(lambda * k.Lw_prime * k.L * k.L / (lambda - 2.0 * k.alpha)) : kInf;
  k.b = std::sqrt(lambda * sup) + cfg.epsilon_max;
  k.delta = lambda > k.alpha ? lambda * k.L * k.Lw / (lambda - k.alpha) : kInf;
  k.beta = 1.0;
  k.c_beta = 0.5 * (k.L_p + k.L_pi);
  k.balance = k.L * k.Lw + k.alpha / lambda;
  k.clt_condition = k.L * k.L * k.Lw_prime + 2.0 * k.alpha / lambda;
  k.balance_pass = k.balance < 1.0;
  k.clt_pass = k.clt_condition < 1.0;
  return k;
}

AConditionReport check_A_conditions(const GeneModelConfig& cfg, std::size_t grid_points) {
  AConditionReport rep;
  rep.constants = model_constants(cfg, grid_points);
  const ModelConstants& k = rep.constants;
  const std::size_t n = cfg.regimes();
  constexpr double kGridMax = 50.0;
  constexpr double kSlack = 1e-9;

  std::vector<double> ys(grid_points);
  for (std::size_t g = 0; g < grid_points; ++g) ys[g] = grid_amount(g, grid_points, kGridMax);
  for (std::size_t p = 0; p < grid_points; ++p) {
    for (std::size_t q = p + 1; q < grid_points; ++q) {
      const double dy = ys[q] - ys[p];
      const double b1 = burst_rate(cfg, ys[p]), b2 = burst_rate(cfg, ys[q]);
      rep.lp_grid = std::max(rep.lp_grid, exponential_l1(b1, b2) / dy);
      rep.dp_grid = std::min(rep.dp_grid, exponential_overlap(b1, b2));
      for (std::size_t i1 = 1; i1 <= n; ++i1) {
        const auto r1 = switch_row(cfg, static_cast<int>(i1), ys[p]);
        const auto r1q = switch_row(cfg, static_cast<int>(i1), ys[q]);
        double l1 = 0.0;
        for (std::size_t j = 0; j < n; ++j) l1 += std::abs(r1[j] - r1q[j]);
        rep.lpi_grid = std::max(rep.lpi_grid, l1 / dy);
        for (std::size_t i2 = 1; i2 <= n; ++i2) {
          const auto r2 = switch_row(cfg, static_cast<int>(i2), ys[q]);
          double ov = 0.0;
          for (std::size_t j = 0; j < n; ++j) ov += std::min(r1[j], r2[j]);
          rep.dpi_grid = std::min(rep.dpi_grid, ov);
        }
      }
    }
  }

  auto line = [&](std::string name, double value, double bound, bool pass, std::string detail) {
    rep.lines.push_back({std::move(name), value, bound, pass, std::move(detail)});
  };
  const double a1 = std::max(k.a1_grid_sup, k.a1_tail_sup);
  line("A1'", a1, kInf, std::isfinite(a1), "sup over grid and tail of the second burst moment integral");
  line("A2", k.alpha, cfg.lambda, k.alpha < cfg.lambda, "L = 1, alpha = -min r_i < lambda");
  line("A3'", k.Lw_prime, kInf, true, "w_theta(y) = y + theta, so L_w' = 1");
  line("A4.pi", rep.lpi_grid, k.L_pi, rep.lpi_grid <= k.L_pi * (1.0 + kSlack) + kSlack,
       "grid slope of switching rows against L_pi");
  line("A4.p", rep.lp_grid, k.L_p, rep.lp_grid <= k.L_p * (1.0 + kSlack) + kSlack,
       "grid slope of burst densities against L_p");
  line("A5.pi", k.d_pi, 0.0, k.d_pi > 0.0 && rep.dpi_grid >= k.d_pi - kSlack, "row overlap bound d_pi");
  line("A5.p", k.d_p, 0.0, k.d_p > 0.0 && rep.dp_grid >= k.d_p - kSlack, "burst overlap bound d_p");
  line("balance", k.balance, 1.0, k.balance_pass, "L L_w + alpha / lambda < 1");
  line("clt", k.clt_condition, 1.0, k.clt_pass, "L^2 L_w' + 2 alpha / lambda < 1");
  rep.all_pass = std::all_of(rep.lines.begin(), rep.lines.end(), [](const ConditionLine& l) { return l.pass; });
  return rep;
}

std::vector<std::pair<ModelState, ModelState>> sample_state_pairs(const GeneModelConfig& cfg,
                                                                  std::size_t count, double y_max,
                                                                  bool same_index, std::uint64_t seed) {
  require(y_max > 0.0, "sample_state_pairs: y_max must be positive");
  Rng rng(derive_seed(seed, stream::grid));
  const auto n = static_cast<int>(cfg.regimes());
  auto regime = [&] { return 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n)); };
  std::vector<std::pair<ModelState, ModelState>> pairs;
  pairs.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    ModelState x{y_max * rng.uniform(), regime()};
    ModelState y{y_max * rng.uniform(), same_index ? x.i : regime()};
    pairs.emplace_back(x, y);
  }
  return pairs;
}

CouplingConditionParams<ModelState> model_coupling_params(const GeneModelConfig& cfg, const ModelConstants& k,
                                                          double gamma, double c_gamma) {
  CouplingConditionParams<ModelState> p;
  p.in_f = same_regime;
  p.delta = k.delta;
  p.beta = k.beta;
  p.c_beta = k.c_beta;
  const double ref = cfg.reference;
  p.lyapunov = [ref](const ModelState& s) { return std::abs(s.y - ref); };
  p.a = k.a;
  p.b = k.b;
  p.big_gamma = 8.0 * k.b / (1.0 - k.a);
  p.gamma = gamma;
  p.c_gamma = c_gamma;
  return p;
}

}  // namespace mclt
