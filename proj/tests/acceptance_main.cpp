// Acceptance suite: one pass/fail line per criterion, exit code = #failures.
// Criteria run against the synthetic base preset at the table-default grid
// and solver settings; the sweep uses a documented smaller grid (see README).
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "greenprocure/dual_opt.hpp"
#include "greenprocure/math_util.hpp"
#include "greenprocure/reference.hpp"
#include "greenprocure/rng.hpp"
#include "greenprocure/scenario.hpp"
#include "greenprocure/sde.hpp"

using namespace greenprocure;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

GridSpec base_grid(const ScenarioInputs& s, int nx) {
  GridSpec g;
  g.n_a = g.n_r = g.n_chi = nx;
  g.n_t = 0;
  g.horizon = s.horizon_hours;
  return g;
}

// Monte Carlo estimate of the relaxed-problem cost along optimally controlled
// paths: left-rule quadrature of the running cost plus the terminal battery
// value. The multiplier term uses the roundoff-robust violation test.
MeanStderr mc_policy_value(const CostToGoField& field, const ScenarioInputs& s,
                           std::size_t paths, std::size_t steps, uint64_t seed) {
  const PolicyFn policy = [&](double t, const StateVector& x) {
    return field_policy(field, t, x, s).ctrl;
  };
  const PathEnsemble ens = simulate_controlled_paths(policy, paths, steps, seed, s, true);
  const double dt = ens.times[1] - ens.times[0];
  std::vector<double> costs(paths, 0.0);
  for (std::size_t m = 0; m < paths; ++m) {
    double acc = 0.0;
    for (std::size_t n = 0; n < steps; ++n) {
      const double t = ens.times[n];
      const StateVector& x = ens.states[m][n];
      const ControlVector& c = ens.controls[m][n];
      const double n_u = traffic_count(t, s.traffic);
      const double xi = s.fading.xi_from_chi(x.chi);
      const double phi = outage_proportion(c.p_tx, xi, s.user_dist, s.model);
      const bool viol = qos_violated(c.p_tx, xi, s.user_dist, s.model, s.qos.phi_th);
      const double lambda = field.multiplier.eval(t);
      const double rc =
          s.model.w * (s.prices.k_b.eval(t) * c.p_f - s.prices.k_s.eval(t) * c.p_s -
                       s.prices.k_net.eval(t) * n_u * (1.0 - phi)) +
          (1.0 - s.model.w) *
              (s.model.c1_emission * c.p_f + s.model.c2_emission * c.p_f * c.p_f) +
          lambda * ((viol ? 1.0 : 0.0) - s.qos.epsilon);
      acc += rc * dt;
    }
    acc += terminal_cost(ens.states[m][steps].a, s.model);
    costs[m] = acc;
  }
  return mean_stderr(costs);
}

struct ScenarioRun {
  DualOutcome outcome;
  EnergyBalanceStats energy;
};

ScenarioRun run_scenario(const std::string& kind, const SolverSettings& settings, int nx,
                         uint64_t seed) {
  const ScenarioInputs s = synthetic_scenario(kind);
  const GridSpec g = base_grid(s, nx);
  ScenarioRun run;
  run.outcome = optimize_dual(settings, g, s, seed);
  const PolicyFn policy = [&](double t, const StateVector& x) {
    return field_policy(run.outcome.field, t, x, s).ctrl;
  };
  const PathEnsemble ens = simulate_controlled_paths(
      policy, static_cast<std::size_t>(settings.m_sg),
      static_cast<std::size_t>(settings.n_bar_t), stream_key(seed, 0xE6E), s, true);
  run.energy = energy_balance_stats(ens, s, 24.0);
  return run;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

}  // namespace

int main() {
  const uint64_t seed = 1;
  const ScenarioInputs base = synthetic_scenario("base");
  const SolverSettings table_defaults;  // TOL=0.1, eps via scenario, Table-4 values
  const double tol_eps = table_defaults.tol * base.qos.epsilon;

  // ---- criterion 4: CFL reproduction ---------------------------------------
  {
    const GridSpec g = base_grid(base, 10);
    const CflReport rep = check_cfl(g, base);
    const bool pass = rep.min_nt >= 400 && rep.min_nt <= 1600;
    report(4, pass,
           fmt("CFL min_nt = %.0f for N1=N2=N3=10 over the two-day horizon "
               "(target 800 per day within one refinement: [400,1600])",
               static_cast<double>(rep.min_nt)));
  }

  // ---- criterion 5: Hamiltonian oracle equivalence -------------------------
  {
    const double t0 = now_s();
    RngStream rng(909, 0xCE11);
    int bad = 0;
    double worst = 0.0;
    const int cells = 1000;
    for (int i = 0; i < cells; ++i) {
      const double t = rng.uniform() * base.horizon_hours;
      const StateVector x{rng.uniform(), rng.uniform(), rng.uniform()};
      const double scale = base.model.p_k * base.model.a_max;
      const double dp = scale * (2.0 * rng.uniform() - 1.5);
      const double dm = scale * (2.0 * rng.uniform() - 1.5);
      const double lam = rng.uniform() < 0.25 ? 0.0 : std::pow(10.0, 3.0 * rng.uniform());
      const HamiltonianResult fast = hamiltonian_minimize(t, x, dp, dm, lam, base);
      const HamiltonianResult oracle = hamiltonian_oracle(t, x, dp, dm, lam, base, 50);
      const double gap = fast.value - oracle.value;
      const double allowed = 1e-6 * (1.0 + std::fabs(oracle.value));
      worst = std::max(worst, gap - allowed);
      if (gap > allowed) ++bad;
    }
    const double elapsed = now_s() - t0;
    const bool pass = bad == 0 && elapsed <= 120.0;
    report(5, pass,
           fmt("analytic vs 50^3 grid-search oracle on %.0f random cells: %.0f over "
               "tolerance, worst excess %.3g, %.1f s (budget 120 s)",
               static_cast<double>(cells), static_cast<double>(bad), worst, elapsed));
  }

  // ---- criterion 6: invariant distribution ---------------------------------
  {
    const auto xs = simulate_fading_unscaled(10000, 2048, base.horizon_hours, 2026, base.fading);
    const double floor = base.fading.xi_floor;
    const double d =
        ks_statistic(xs, [&](double v) { return gamma_p(3.0, std::max(0.0, v - floor)); });
    const double crit = ks_critical(xs.size(), 0.01);
    report(6, d < crit,
           fmt("KS statistic %.5f vs 1%% critical %.5f (1e4 uncontrolled fading paths, T=48h, "
               "shifted-gamma(3,1) oracle)",
               d, crit));
  }

  // ---- criterion 7: first-order PDE convergence ----------------------------
  {
    ScenarioInputs smooth = base;
    smooth.prices.k_net = Curve::constant(0.0);  // manufactured smooth objective
    const MultiplierFunction zero = MultiplierFunction::zero(smooth.horizon_hours);
    const int nts[3] = {672, 1344, 2688};
    const int nxs[3] = {4, 8, 16};
    std::vector<CostToGoField> fields;
    for (int k = 0; k < 3; ++k) {
      GridSpec g = base_grid(smooth, nxs[k]);
      g.n_t = nts[k];
      SolveOptions opts;
      opts.store_values = false;
      fields.push_back(solve_hjb(zero, g, smooth, opts));
    }
    const auto diff_coarse_fine = [&](const CostToGoField& fc, const CostToGoField& ff) {
      double worst = 0.0;
      const GridSpec& gc = fc.grid;
      for (int i = 0; i <= gc.n_a; ++i)
        for (int j = 0; j <= gc.n_r; ++j)
          for (int k = 0; k <= gc.n_chi; ++k) {
            const double vc = fc.slice0[gc.node_index(i, j, k)];
            const double vf = ff.slice0[ff.grid.node_index(2 * i, 2 * j, 2 * k)];
            worst = std::max(worst, std::fabs(vc - vf));
          }
      return worst;
    };
    const double e1 = diff_coarse_fine(fields[0], fields[1]);
    const double e2 = diff_coarse_fine(fields[1], fields[2]);
    const double ratio = e1 / e2;
    const bool pass = ratio >= 1.7 && ratio <= 2.3;
    report(7, pass,
           fmt("successive-difference ratio %.3f (||u_h-u_h/2||=%.4f, ||u_h/2-u_h/4||=%.4f); "
               "first-order target [1.7, 2.3]",
               ratio, e1, e2));
  }

  // ---- criteria 1-3, 8: base dual run at table defaults --------------------
  {
    const GridSpec g = base_grid(base, 10);
    const double t0 = now_s();
    const ReferenceSolve unc = solve_unconstrained(g, base, seed, 1000);
    const DualOutcome dual = optimize_dual(table_defaults, g, base, seed);
    const ReferenceSolve as = solve_as_constrained(g, base, seed, 1000);
    const double elapsed = now_s() - t0;

    // criterion 1: ordering, gap, ratio, runtime
    {
      const double tol =
          3.0 * (unc.stderr_ + dual.dual_stderr + as.stderr_) + 1e-9;
      const bool ordering = unc.theta <= dual.dual_value + tol && dual.dual_value <= as.theta + tol;
      const bool gap_small =
          dual.dual_value - unc.theta <= 0.05 * std::fabs(unc.theta) + tol;
      const bool ratio_big = dual.dual_value < 0.0 && as.theta >= 0.5 * dual.dual_value;
      const bool in_time = elapsed <= 1800.0;
      report(1, ordering && gap_small && ratio_big && in_time,
             fmt("theta_unc=%.2f <= theta_dual=%.2f <= theta_as=%.2f; relaxation gap %.2f%% "
                 "(<=5%%); a.s. profit at most half the dual profit; ",
                 unc.theta, dual.dual_value, as.theta,
                 100.0 * (dual.dual_value - unc.theta) / std::fabs(unc.theta)) +
                 fmt("runtime %.0f s (budget 1800 s)", elapsed));
    }
    // criterion 2: stopping tolerance and refinement depth
    {
      const bool pass = dual.tolerance_reached && dual.final_norm <= tol_eps + 1e-15 &&
                        dual.final_level <= 16;
      report(2, pass,
             fmt("normalized subgradient norm %.5f <= TOL*eps = %.3f at level %.0f "
                 "(<= 8 within one refinement)",
                 dual.final_norm, tol_eps, static_cast<double>(dual.final_level)));
    }
    // criterion 3: per-subinterval chance-constraint control
    {
      SolverSettings st = table_defaults;
      const SubgradientEstimate est = estimate_subgradient(
          dual.field, dual.multiplier, st, stream_key(seed, 0xC3), base);
      bool pass = true;
      double worst_excess = -1e300;
      for (std::size_t i = 0; i < est.components.size(); ++i) {
        const double span = dual.multiplier.subinterval_length(i);
        const double allowed = tol_eps * span + 3.0 * est.stderr_[i];
        worst_excess = std::max(worst_excess, std::fabs(est.components[i]) - allowed);
        if (std::fabs(est.components[i]) > allowed) pass = false;
      }
      report(3, pass,
             fmt("per-subinterval |integrated violation| within TOL*eps*delta + 3*stderr "
                 "(worst margin %.4f h, level %.0f, M=1000 paths)",
                 -worst_excess, static_cast<double>(dual.multiplier.level())));
    }
    // criterion 8: policy-evaluation consistency
    {
      const MeanStderr mc = mc_policy_value(dual.field, base, 1000, 256, stream_key(seed, 0x8));
      // first-order grid budget via a Richardson half-grid comparison
      GridSpec g20 = base_grid(base, 20);
      SolveOptions opts;
      opts.store_values = false;
      const CostToGoField fine = solve_hjb(dual.multiplier, g20, base, opts);
      const DualValue dv20 =
          dual_value(fine, base.initial_charge, base, 4000, stream_key(seed, 0xA11CE));
      const DualValue dv10 =
          dual_value(dual.field, base.initial_charge, base, 4000, stream_key(seed, 0xA11CE));
      const double budget = 2.0 * std::fabs(dv10.theta - dv20.theta);
      const double gap = std::fabs(dual.dual_value - mc.mean);
      const double allowed = 3.0 * (mc.stderr_ + dual.dual_stderr) + budget;
      report(8, gap <= allowed,
             fmt("|dual %.2f - path MC %.2f| = %.2f <= 3*stderr + first-order budget %.2f "
                 "(Richardson vs half grid)",
                 dual.dual_value, mc.mean, gap, allowed));
    }

    // ---- criterion 9: scenario energy orderings ----------------------------
    {
      const PolicyFn policy = [&](double t, const StateVector& x) {
        return field_policy(dual.field, t, x, base).ctrl;
      };
      const PathEnsemble base_ens = simulate_controlled_paths(
          policy, 1000, static_cast<std::size_t>(table_defaults.n_bar_t),
          stream_key(seed, 0xE6E), base, true);
      const EnergyBalanceStats base_energy = energy_balance_stats(base_ens, base, 24.0);

      // desk-scale optimizer budget for the four comparison runs; the
      // orderings are properties of the resulting policies, not of the
      // optimizer iteration counts
      SolverSettings scen = table_defaults;
      scen.n_lmbm_iter = 12;
      scen.max_iter = 25;
      const ScenarioRun a = run_scenario("scenario_a", scen, 10, seed);
      const ScenarioRun b = run_scenario("scenario_b", scen, 10, seed);
      const ScenarioRun c = run_scenario("scenario_c", scen, 10, seed);
      const ScenarioRun e = run_scenario("scenario_e", scen, 10, seed);

      const auto strictly_above = [](double x, double sx, double y, double sy) {
        return x > y + 3.0 * (sx + sy);
      };
      const bool pass_a = strictly_above(a.energy.mean.bought, a.energy.stderr_.bought,
                                         base_energy.mean.bought, base_energy.stderr_.bought);
      const bool pass_c = strictly_above(c.energy.mean.sold, c.energy.stderr_.sold,
                                         base_energy.mean.sold, base_energy.stderr_.sold);
      const bool pass_e = strictly_above(base_energy.mean.consumed, base_energy.stderr_.consumed,
                                         e.energy.mean.consumed, e.energy.stderr_.consumed);
      const bool pass_b = strictly_above(b.energy.mean.consumed, b.energy.stderr_.consumed,
                                         base_energy.mean.consumed, base_energy.stderr_.consumed);
      report(9, pass_a && pass_b && pass_c && pass_e,
             fmt("bought A %.0f > base %.0f; ", a.energy.mean.bought, base_energy.mean.bought) +
                 fmt("sold C %.0f > base %.0f; ", c.energy.mean.sold, base_energy.mean.sold) +
                 fmt("consumed E %.0f < base %.0f; ", e.energy.mean.consumed,
                     base_energy.mean.consumed) +
                 fmt("consumed B %.0f > base %.0f (all with 3-sigma margins, Wh over day 1)",
                     b.energy.mean.consumed, base_energy.mean.consumed));
    }
  }

  // ---- criterion 10: randomized robustness sweep ----------------------------
  {
    const double t0 = now_s();
    const int runs = 50;
    int at_tolerance = 0, failures = 0;
    for (int run = 0; run < runs; ++run) {
      const uint64_t run_seed = stream_key(seed, 0x53EE9, run);
      try {
        const ScenarioInputs s = synthetic_scenario("randomized", run_seed);
        const GridSpec g = base_grid(s, 6);  // documented desk-scale sweep grid
        const DualOutcome out = optimize_dual(table_defaults, g, s, run_seed);
        if (out.tolerance_reached) ++at_tolerance;
        std::printf("  sweep run %2d: dual=%10.2f norm=%.5f level=%d %s\n", run,
                    out.dual_value, out.final_norm, out.final_level,
                    out.tolerance_reached ? "ok" : "NOT-AT-TOLERANCE");
        std::fflush(stdout);
      } catch (const std::exception& ex) {
        ++failures;
        std::printf("  sweep run %2d: unhandled failure: %s\n", run, ex.what());
      }
    }
    const double elapsed = now_s() - t0;
    const bool pass = at_tolerance == runs && failures == 0 && elapsed <= 8.0 * 3600.0;
    report(10, pass,
           fmt("%.0f/%.0f randomized runs reached the tolerance, %.0f unhandled failures, "
               "%.0f s total (budget 8 h, grid 6^3 documented)",
               static_cast<double>(at_tolerance), static_cast<double>(runs),
               static_cast<double>(failures), elapsed));
  }

  std::printf("acceptance: %d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
