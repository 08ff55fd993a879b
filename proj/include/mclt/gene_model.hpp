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

#ifndef MCLT_GENE_MODEL_HPP
#define MCLT_GENE_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mclt/core_kernels.hpp"
#include "mclt/coupling.hpp"
#include "mclt/rng.hpp"

namespace mclt {

/// Post-jump chain of a gene-expression model on X = [0, inf) x {1..N}.
///
/// Between jumps the protein amount decays, S_i(t, y) = y exp(-r_i t).
/// Jumps arrive at rate lambda and add a burst theta ~ Exp(beta(y)) with
/// beta(y) = beta0 + beta1 / (1 + y), plus noise h ~ U[0, eps]. The new
/// regime j is drawn from row i of pi(y') with
///
///   pi_ii(y) = 1 - kappa(y),  pi_ij(y) = kappa(y) / (N - 1),
///   kappa(y) = kappa0 + kappa1 y / (1 + y).
struct GeneModelConfig {
  double lambda = 1.0;
  std::vector<double> decay_rates;  // r_i; N = decay_rates.size()
  double burst_rate_base = 1.0;     // beta0 > 0
  double burst_rate_gain = 0.0;     // beta1 >= 0
  double switch_base = 0.0;         // kappa0
  double switch_gain = 0.0;         // kappa1; kappa0 + kappa1 <= 1
  double epsilon = 0.0;
  double epsilon_max = 0.0;  // eps*
  double metric_weight = 1.0;  // c~
  double reference = 0.0;      // y-bar
  // Accept r_i <= 0, giving alpha >= 0. Only for constructing violations.
  bool allow_nonpositive_decay = false;

  std::size_t regimes() const noexcept { return decay_rates.size(); }
};

/// Every problem with the config, empty when valid.
std::vector<std::string> validation_errors(const GeneModelConfig& cfg);

/// Throws a precondition error listing every problem.
void validate(const GeneModelConfig& cfg);

struct ModelState {
  double y = 0.0;
  int i = 1;  // 1-based regime index

  friend bool operator==(const ModelState&, const ModelState&) = default;
};

struct JumpRecord {
  double dt = 0.0;
  double theta = 0.0;
  double h = 0.0;
  int j = 1;
};

struct JumpResult {
  ModelState state;
  JumpRecord jump;
};

double semiflow(const GeneModelConfig& cfg, int i, double t, double y);
double burst_rate(const GeneModelConfig& cfg, double y);
double switch_probability(const GeneModelConfig& cfg, double y);  // kappa(y)
/// Row i of pi(y), entry j - 1 for regime j.
std::vector<double> switch_row(const GeneModelConfig& cfg, int i, double y);

/// One jump of the chain. `forced_dt` replaces the exponential holding time.
JumpResult post_jump_step(const GeneModelConfig& cfg, const ModelState& state, Rng& rng,
                          std::optional<double> forced_dt = std::nullopt);
JumpResult post_jump_step(const GeneModelConfig& cfg, const ModelState& state, std::uint64_t seed);

double lyapunov_V(const GeneModelConfig& cfg, const ModelState& state);

MetricSpace<ModelState> model_space(const GeneModelConfig& cfg);
Kernel<ModelState> model_kernel(const GeneModelConfig& cfg);

/// Shared (dt, h); maximal coupling of the burst laws at the two decayed
/// amounts; maximal coupling of the switching rows at the two new amounts.
/// The flag is set when both bursts and both regimes coincide.
CoupledKernel<ModelState> model_coupling(const GeneModelConfig& cfg);

/// F = pairs in the same regime.
bool same_regime(const ModelState& x, const ModelState& y);

/// Rounds y to the centre of its bin of the given width.
ModelState bin_state(const ModelState& s, double width);

// ---------------------------------------------------------------------------
// Constants and condition checks.

/// integral of min(p1, p2) for Exp(rate1), Exp(rate2).
double exponential_overlap(double rate1, double rate2);

/// integral of |p1 - p2| for Exp(rate1), Exp(rate2).
double exponential_l1(double rate1, double rate2);

/// integral_0^inf e^{-lambda t} E|w_theta(S_i(t, y-bar)) - y-bar|^2 dt with
/// theta ~ Exp(beta(S_i(t, y))). +inf when it diverges.
double a1_integral(const GeneModelConfig& cfg, int i, double y);

/// Its limit as y -> inf, where beta(S_i(t, y)) -> beta0.
double a1_tail(const GeneModelConfig& cfg, int i);

struct ModelConstants {
  double L = 1.0;
  double alpha = 0.0;
  double Lw_prime = 1.0;
  double Lw = 1.0;
  double L_pi = 0.0;
  double L_p = 0.0;
  double d_pi = 1.0;
  double d_p = 1.0;
  double a1_grid_sup = 0.0;
  double a1_tail_sup = 0.0;
  double a = 0.0;  // drift constants of U V^2 <= (a V + b)^2
  double b = 0.0;
  double delta = 0.0;   // contraction of the coupling on F
  double beta = 1.0;    // exponent in 1 - Q mass <= c_beta rho^beta
  double c_beta = 0.0;
  double balance = 0.0;        // L L_w + alpha / lambda
  double clt_condition = 0.0;  // L^2 L_w' + 2 alpha / lambda
  bool balance_pass = false;
  bool clt_pass = false;
};

/// Closed forms for this instance; the (A1)' supremum is taken over a
/// log-spaced y-grid of `grid_points` points on [0, y_max] and the tail limit.
ModelConstants model_constants(const GeneModelConfig& cfg, std::size_t grid_points = 200,
                               double y_max = 1e3);

struct ConditionLine {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
  std::string detail;
};

struct AConditionReport {
  ModelConstants constants;
  std::vector<ConditionLine> lines;
  double lp_grid = 0.0;   // largest L1 slope of the burst law seen on the grid
  double lpi_grid = 0.0;  // largest L1 slope of a switching row seen on the grid
  double dp_grid = 1.0;   // smallest burst overlap seen on the grid
  double dpi_grid = 1.0;  // smallest row overlap seen on the grid
  bool all_pass = false;
};

/// Report on (A1)'-(A5) and both balance inequalities. The grid checks
/// evaluate the closed-form overlaps and slopes on `grid_points` amounts.
AConditionReport check_A_conditions(const GeneModelConfig& cfg, std::size_t grid_points = 200);

/// Random pairs with amounts uniform on [0, y_max] and regimes uniform;
/// with `same_index` both members share the regime.
std::vector<std::pair<ModelState, ModelState>> sample_state_pairs(const GeneModelConfig& cfg,
                                                                  std::size_t count, double y_max,
                                                                  bool same_index, std::uint64_t seed);

/// Coupling-condition parameters implied by the constants.
CouplingConditionParams<ModelState> model_coupling_params(const GeneModelConfig& cfg,
                                                          const ModelConstants& k, double gamma = 0.8,
                                                          double c_gamma = 20.0);

}  // namespace mclt

#endif  // MCLT_GENE_MODEL_HPP
