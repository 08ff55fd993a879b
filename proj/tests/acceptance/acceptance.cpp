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

// Acceptance run: one verdict line per criterion, exit status 0 iff all pass.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "dense_simplex.hpp"
#include "matrix_oracles.hpp"
#include "mclt/clt_harness.hpp"
#include "mclt/coupling.hpp"
#include "mclt/ergodicity.hpp"
#include "mclt/gene_model.hpp"
#include "mclt/metrics_stats.hpp"
#include "mclt/runner.hpp"

namespace {

using namespace mclt;
using Rational = boost::rational<long long>;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

GeneModelConfig default_gene() {
  GeneModelConfig c;
  c.lambda = 1.0;
  c.decay_rates = {1.0, 2.0};
  c.burst_rate_base = 1.0;
  c.burst_rate_gain = 0.5;
  c.switch_base = 0.2;
  c.switch_gain = 0.3;
  c.epsilon = 0.1;
  c.epsilon_max = 0.1;
  return c;
}

double gene_g(const ModelState& s) { return std::atan(std::min(s.y, 10.0)); }

// ---------------------------------------------------------------------------

Verdict coupling_marginals() {
  const std::vector<std::vector<std::vector<Rational>>> kernels{
      {{Rational(7, 10), Rational(3, 10)}, {Rational(2, 5), Rational(3, 5)}},
      {{Rational(1, 2), Rational(1, 3), Rational(1, 6)},
       {Rational(1, 5), Rational(3, 5), Rational(1, 5)},
       {Rational(1, 4), Rational(1, 4), Rational(1, 2)}},
      {{Rational(1, 2), Rational(1, 4), Rational(1, 8), Rational(1, 8)},
       {Rational(0), Rational(1, 3), Rational(1, 3), Rational(1, 3)},
       {Rational(1, 10), Rational(2, 10), Rational(3, 10), Rational(4, 10)},
       {Rational(1, 4), Rational(1, 4), Rational(1, 4), Rational(1, 4)}}};
  bool exact = true;
  double worst = 0.0;
  for (const auto& pi : kernels) {
    const std::size_t n = pi.size();
    // half the maximal diagonal coupling plus a quarter of the product law
    std::vector<Rational> q(n * n * n * n, Rational(0));
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t u = 0; u < n; ++u) {
          for (std::size_t v = 0; v < n; ++v) {
            Rational& e = q[((x * n + y) * n + u) * n + v];
            e = pi[x][u] * pi[y][v] / 4;
            if (u == v) e += std::min(pi[x][u], pi[y][u]) / 2;
          }
        }
      }
    }
    if (!dominated_by(pi, q)) return {false, "constructed Q is not dominated"};
    const auto c = coupled_transition(pi, q);
    FiniteKernel::Matrix pd(n, std::vector<double>(n));
    std::vector<double> qd(q.size());
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t u = 0; u < n; ++u) pd[x][u] = boost::rational_cast<double>(pi[x][u]);
    }
    for (std::size_t k = 0; k < q.size(); ++k) qd[k] = boost::rational_cast<double>(q[k]);
    const auto cd = FiniteCoupling(FiniteKernel(pd), qd).coupled_matrix();
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t u = 0; u < n; ++u) {
          Rational first(0), second(0);
          double first_d = 0.0, second_d = 0.0;
          for (std::size_t v = 0; v < n; ++v) {
            first += c[x * n + y][u * n + v];
            second += c[x * n + y][v * n + u];
            first_d += cd[x * n + y][u * n + v];
            second_d += cd[x * n + y][v * n + u];
          }
          exact = exact && first == pi[x][u] && second == pi[y][u];
          worst = std::max({worst, std::abs(first_d - pd[x][u]), std::abs(second_d - pd[y][u])});
        }
      }
    }
  }
  return {exact && worst < 1e-12,
          std::string("2/3/4-state rational marginals ") + (exact ? "exact" : "MISMATCH") +
              ", double max error " + fmt("%.2e", worst)};
}

Verdict fortet_mourier_oracle() {
  Rng rng(2026);
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t k = 2 + static_cast<std::size_t>(rng.uniform() * 9);
    std::vector<std::array<double, 2>> pts(k);
    for (auto& p : pts) p = {4.0 * rng.uniform(), 4.0 * rng.uniform()};
    auto dist = [&](std::size_t i, std::size_t j) { return std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]); };
    std::vector<double> a(k), b(k), w(k);
    double sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      a[i] = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
      b[i] = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
      sa += a[i];
      sb += b[i];
    }
    if (sa == 0.0) a[0] = sa = 1.0;
    if (sb == 0.0) b[k - 1] = sb = 1.0;
    for (std::size_t i = 0; i < k; ++i) w[i] = a[i] / sa - b[i] / sb;
    const auto res = fortet_mourier_signed(w, dist);
    worst = std::max(worst, std::abs(res.distance - oracle::bounded_lipschitz_lp(w, dist)));
  }
  bool dirac_exact = true;
  for (int t = 0; t < 200; ++t) {
    const double x = 5.0 * rng.uniform(), y = 5.0 * rng.uniform();
    const double d = fortet_mourier(EmpiricalMeasure<double>::dirac(x), EmpiricalMeasure<double>::dirac(y), real_line())
                         .distance;
    dirac_exact = dirac_exact && d == std::min(std::abs(x - y), 2.0);
  }
  return {worst < 1e-7 && dirac_exact, "100 random LPs max |error| " + fmt("%.2e", worst) + ", dirac pairs " +
                                           (dirac_exact ? "exact" : "NOT exact")};
}

Verdict ergodicity() {
  const FiniteKernel two({{0.95, 0.05}, {0.1, 0.9}});
  ErgodicityOptions o;
  o.steps = 30;
  o.seed = 31;
  const auto c2 = ergodicity_curve<int>(two.kernel(), [](Rng&) { return 0; }, 0, [](const int& s) { return s; }, o);
  const double lambda2 = 0.85;
  const bool two_ok = c2.fit && std::abs(c2.fit->rate - lambda2) <= 0.05;

  const auto cfg = default_gene();
  ErgodicityOptions g;
  g.steps = 25;
  g.seed = 11;
  const auto cg = ergodicity_curve<ModelState>(
      model_kernel(cfg), [](Rng&) { return ModelState{8.0, 2}; }, ModelState{8.0, 2},
      [](const ModelState& s) { return bin_state(s, 0.05); }, g);
  const bool gene_ok = cg.decreasing && cg.fit && cg.fit->r_squared >= 0.95;
  std::string d = "2-state rate " + (c2.fit ? fmt("%.4f", c2.fit->rate) : std::string("none")) + " vs 0.85";
  d += "; gene decreasing=" + std::to_string(cg.decreasing) +
       " r2=" + (cg.fit ? fmt("%.4f", cg.fit->r_squared) : std::string("none")) +
       " rate=" + (cg.fit ? fmt("%.4f", cg.fit->rate) : std::string("none")) +
       " points=" + (cg.fit ? std::to_string(cg.fit->points) : std::string("0"));
  return {two_ok && gene_ok, d};
}

Verdict coupling_decay() {
  const auto cfg = default_gene();
  const auto curve = decay_curve(model_coupling(cfg), gene_g, ModelState{0.5, 1}, ModelState{6.0, 2}, 20, 20000, 5);
  const bool gene_ok = curve.fit && curve.fit->rate > 0.0 && curve.fit->rate < 1.0 && curve.fit->r_squared >= 0.95;

  const FiniteKernel pi({{0.5, 0.3, 0.2}, {0.1, 0.8, 0.1}, {0.25, 0.25, 0.5}});
  const auto fc = FiniteCoupling::maximal(pi);
  const std::vector<double> g{0.0, 1.0, -0.5};
  const std::size_t steps = 15;
  const auto fcurve = decay_curve(fc.coupled_kernel(), [&](const int& s) { return g[s]; }, 0, 2, steps, 20000, 6);
  const auto cm = oracle::to_eigen(fc.coupled_matrix());
  oracle::Vector diff(9);
  for (int u = 0; u < 3; ++u) {
    for (int v = 0; v < 3; ++v) diff(u * 3 + v) = std::abs(g[u] - g[v]);
  }
  std::size_t inside = 0;
  oracle::Matrix power = oracle::Matrix::Identity(9, 9);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double exact = (power * diff)(2);
    const auto& e = fcurve.steps[k];
    if (std::abs(e.mean - exact) <= 3.0 * e.stderr_ + 1e-12) ++inside;
    power = power * cm;
  }
  std::string d = "gene q_hat=" + (curve.fit ? fmt("%.4f", curve.fit->rate) : std::string("none")) +
                  " r2=" + (curve.fit ? fmt("%.4f", curve.fit->r_squared) : std::string("none")) + "; finite " +
                  std::to_string(inside) + "/" + std::to_string(steps + 1) + " steps within 3 stderr of exact";
  return {gene_ok && inside == steps + 1, d};
}

Verdict drift() {
  const auto cfg = default_gene();
  const auto k = model_constants(cfg);
  std::vector<ModelState> grid;
  for (int g = 0; g < 20; ++g) grid.push_back({10.0 * g / 19.0, 1 + g % 2});
  const auto rep = check_drift<ModelState>(model_kernel(cfg), [&](const ModelState& s) { return lyapunov_V(cfg, s); },
                                           grid, k.a, k.b, true, 20000, 7);
  double worst = 0.0;
  for (const auto& p : rep.points) worst = std::max(worst, p.estimate.mean / p.bound);
  return {rep.all_pass && rep.points.size() == 20,
          std::to_string(20 - rep.failures) + "/20 grid points pass, a=" + fmt("%.4f", k.a) + " b=" + fmt("%.4f", k.b) +
              ", largest estimate/bound " + fmt("%.3f", worst)};
}

struct Reference {
  double center = 0.0;
  double sigma2 = 0.0;
  double sigma2_stderr = 0.0;
};

// One long stationary run shared by the CLT and Donsker criteria.
const Reference& gene_reference() {
  static const Reference ref = [] {
    const auto est = estimate_center(model_kernel(default_gene()), gene_g, ModelState{1.0, 1}, 1000, 100000000,
                                     derive_seed(99, stream::auxiliary));
    return Reference{est.center, est.variance.sigma2, est.variance.stderr_};
  }();
  return ref;
}

Verdict clt() {
  const auto& ref = gene_reference();
  const auto kernel = model_kernel(default_gene());
  int stationary_pass = 0, fixed_pass = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (bool stationary : {true, false}) {
      CltOptions o;
      o.n = 2000;
      o.replicas = 4000;
      o.stationary_start = stationary;
      o.center = ref.center;
      o.sigma2 = ref.sigma2;
      o.seed = seed;
      const auto rep = clt_test(kernel, gene_g, ModelState{1.0, 1}, o);
      (stationary ? stationary_pass : fixed_pass) += rep.pass ? 1 : 0;
      worst = std::max(worst, rep.ks);
    }
  }

  const FiniteKernel two({{0.7, 0.3}, {0.4, 0.6}});
  const double exact = oracle::asymptotic_variance(oracle::to_eigen(two.matrix()), oracle::Vector::LinSpaced(2, 0, 1));
  CltOptions o;
  o.n = 2000;
  o.replicas = 4000;
  o.seed = 7;
  o.aux_steps = 10000000;
  o.batch_len = 1000;
  const auto rep2 = clt_test(two.kernel(), [](const int& s) { return 1.0 * s; }, 0, o);
  const bool sigma_ok = std::abs(rep2.sigma2 - exact) <= 3.0 * rep2.sigma2_stderr;

  std::string d = "stationary " + std::to_string(stationary_pass) + "/20, fixed " + std::to_string(fixed_pass) +
                  "/20 below " + fmt("%.4f", ks_critical_1pct(4000)) + " (largest ks " + fmt("%.4f", worst) +
                  "); gene sigma2=" + fmt("%.4f", ref.sigma2) + "; 2-state sigma2 " + fmt("%.4f", rep2.sigma2) +
                  " +- " + fmt("%.4f", rep2.sigma2_stderr) + " vs exact " + fmt("%.4f", exact);
  return {stationary_pass >= 18 && fixed_pass >= 18 && sigma_ok, d};
}

Verdict donsker() {
  const auto& ref = gene_reference();
  const auto kernel = model_kernel(default_gene());
  CltOptions o;
  o.n = 10000;
  o.replicas = 4000;
  o.center = ref.center;
  o.sigma2 = ref.sigma2;
  o.seed = 3;
  const auto rep = donsker_test(kernel, gene_g, ModelState{1.0, 1}, o);
  bool bit_exact = true;
  for (std::size_t r = 0; r < 200; ++r) {
    Rng rng(derive_seed(o.seed, stream::replica, r));
    const auto start = advance(kernel, ModelState{1.0, 1}, o.burn_in, rng);
    const auto traj = simulate_chain(kernel, start, o.n, derive_seed(o.seed, stream::stationary, r));
    bit_exact = bit_exact && rep.features[r].endpoint == partial_sum(traj, gene_g, ref.center);
  }
  return {rep.pass && bit_exact, "sup ks=" + fmt("%.4f", rep.ks_max) + " vs " + fmt("%.4f", rep.threshold) +
                                     ", endpoint ks=" + fmt("%.4f", rep.ks_endpoint) + ", B_n(1) = s_n on 200 paths " +
                                     (bit_exact ? "bit-exact" : "MISMATCH")};
}

Verdict maxwell_woodroofe() {
  const FiniteKernel two({{0.7, 0.3}, {0.4, 0.6}});
  const auto p = oracle::to_eigen(two.matrix());
  const auto pi = oracle::stationary(p);
  const oracle::Vector g = oracle::Vector::LinSpaced(2, 0, 1);
  const oracle::Vector gbar = g.array() - pi.dot(g);
  const oracle::Vector lim = oracle::resolvent_limit(p, gbar);
  const double exact = std::sqrt(pi.dot(lim.cwiseProduct(lim)));
  MwOptions o;
  o.n_list = {50, 100, 200};
  o.replicas = 4000;
  o.seed = 23;
  const auto rep = mw_diagnostic(two.kernel(), [](const int& s) { return 1.0 * s; }, pi.dot(g), {0, 1},
                                 {pi(0), pi(1)}, o);
  bool plateau = !rep.growth;
  std::string d = "2-state exact " + fmt("%.4f", exact) + ":";
  for (const auto& pt : rep.points) {
    plateau = plateau && std::abs(pt.root - exact) <= 3.0 * pt.root_stderr;
    d += " n=" + std::to_string(pt.n) + " " + fmt("%.4f", pt.root) + "+-" + fmt("%.4f", pt.root_stderr);
  }
  const auto id = mw_diagnostic(identity_kernel(real_line()), [](const double& x) { return x; }, 0.0, {-1.0, 1.0},
                                {0.5, 0.5}, o);
  d += "; identity slope " + fmt("%.3f", id.slope) + " p=" + fmt("%.2g", id.growth_p_value);
  return {plateau && id.growth, d};
}

Verdict a_conditions() {
  const auto rep = check_A_conditions(default_gene());
  const auto& k = rep.constants;
  const bool closed = k.L == 1.0 && k.alpha == -1.0 && k.Lw_prime == 1.0;
  auto broken = default_gene();
  broken.decay_rates = {-0.5, 2.0};
  broken.allow_nonpositive_decay = true;
  const auto bad = check_A_conditions(broken);
  bool flagged = false;
  std::string failed;
  for (const auto& line : bad.lines) {
    if (!line.pass) {
      failed += (failed.empty() ? "" : ",") + line.name;
      if (line.name == "clt") flagged = true;
    }
  }
  std::string d = "default " + std::string(rep.all_pass ? "passes all" : "FAILS") + " (L=" + fmt("%g", k.L) +
                  " alpha=" + fmt("%g", k.alpha) + " L_w'=" + fmt("%g", k.Lw_prime) + " clt=" +
                  fmt("%g", k.clt_condition) + "); broken alpha=0.5 fails [" + failed + "]";
  return {rep.all_pass && closed && flagged && !bad.all_pass && !bad.constants.clt_pass, d};
}

Verdict reproducibility() {
  namespace fs = std::filesystem;
  std::vector<fs::path> configs;
  for (const auto& entry : fs::directory_iterator(fs::path(MCLT_SOURCE_DIR) / "configs")) {
    if (entry.path().extension() == ".yaml") configs.push_back(entry.path());
  }
  std::sort(configs.begin(), configs.end());
  std::size_t same = 0;
  std::string differing;
  for (const auto& path : configs) {
    auto cfg = load_config(path.string());
    cfg.experiment.workers = 1;
    const auto serial = execute(cfg).table;
    cfg.experiment.workers = 3;
    const auto threaded = execute(cfg).table;
    if (serial == threaded) {
      ++same;
    } else {
      differing += " " + path.stem().string();
    }
  }
  return {same == configs.size() && !configs.empty(),
          std::to_string(same) + "/" + std::to_string(configs.size()) +
              " shipped configs give byte-identical tables with 1 and 3 workers" + differing};
}

}  // namespace

int main(int argc, char** argv) {
  // optional arguments select criteria by number
  std::vector<int> only;
  for (int a = 1; a < argc; ++a) only.push_back(std::atoi(argv[a]));
  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "coupling marginals", 1.0, coupling_marginals},
      {2, "Fortet-Mourier solver", 10.0, fortet_mourier_oracle},
      {3, "exponential ergodicity", 120.0, ergodicity},
      {4, "coupling decay", 120.0, coupling_decay},
      {5, "drift", 60.0, drift},
      {6, "CLT", 600.0, clt},
      {7, "Donsker", 600.0, donsker},
      {8, "Maxwell-Woodroofe plateau", 120.0, maxwell_woodroofe},
      {9, "condition reports", 30.0, a_conditions},
      {10, "reproducibility", 0.0, reproducibility},
  };
  int failures = 0;
  std::size_t ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.limit_seconds <= 0.0 || secs < c.limit_seconds;
    const bool pass = v.pass && in_time;
    if (!pass) ++failures;
    std::printf("criterion %2d %-26s %s  %s [%.1f s%s]\n", c.id, c.name, pass ? "PASS" : "FAIL", v.detail.c_str(), secs,
                in_time ? "" : ", over the time limit");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, ran);
  return failures == 0 ? 0 : 1;
}
