#include "greenprocure/reference.hpp"

#include <cmath>

#include "greenprocure/math_util.hpp"
#include "greenprocure/rng.hpp"

namespace greenprocure {

namespace {
enum : uint64_t { kTagInitSamples = 0xA11CE };
}

ReferenceSolve solve_unconstrained(const GridSpec& grid, const ScenarioInputs& inputs,
                                   uint64_t seed, std::size_t n_init_samples) {
  ReferenceSolve out;
  SolveOptions opts;
  opts.store_values = false;
  out.field = solve_hjb(MultiplierFunction::zero(inputs.horizon_hours), grid, inputs, opts);
  const DualValue dv = dual_value(out.field, inputs.initial_charge, inputs, n_init_samples,
                                  stream_key(seed, kTagInitSamples));
  out.theta = dv.theta;
  out.stderr_ = dv.stderr_;
  return out;
}

ReferenceSolve solve_as_constrained(const GridSpec& grid, const ScenarioInputs& inputs,
                                    uint64_t seed, std::size_t n_init_samples) {
  ReferenceSolve out;
  SolveOptions opts;
  opts.store_values = false;
  out.field = solve_hjb_as_constrained(grid, inputs, opts);
  const DualValue dv = dual_value(out.field, inputs.initial_charge, inputs, n_init_samples,
                                  stream_key(seed, kTagInitSamples));
  out.theta = dv.theta;
  out.stderr_ = dv.stderr_;
  return out;
}

EnergyBalanceStats energy_balance_stats(const PathEnsemble& ensemble,
                                        const ScenarioInputs& inputs, double t_end) {
  if (ensemble.controls.empty())
    throw std::invalid_argument("energy_balance: ensemble lacks controls");
  const std::size_t n_times = ensemble.times.size();
  const std::size_t paths = ensemble.path_count();
  std::vector<double> consumed(paths, 0.0), battery(paths, 0.0), bought(paths, 0.0),
      sold(paths, 0.0);
  std::vector<double> n_users(n_times);
  for (std::size_t n = 0; n < n_times; ++n)
    n_users[n] = traffic_count(ensemble.times[n], inputs.traffic);
  for (std::size_t m = 0; m < paths; ++m) {
    for (std::size_t n = 0; n + 1 < n_times; ++n) {
      const double t0 = ensemble.times[n];
      const double t1 = std::min(ensemble.times[n + 1], t_end);
      if (t1 <= t0) break;
      const double h = t1 - t0;
      const ControlVector& c0 = ensemble.controls[m][n];
      const ControlVector& c1 = ensemble.controls[m][n + 1];
      const double cons0 = inputs.model.c_scal * n_users[n] * c0.p_tx + inputs.model.c_offset;
      const double cons1 =
          inputs.model.c_scal * n_users[n + 1] * c1.p_tx + inputs.model.c_offset;
      consumed[m] += 0.5 * h * (cons0 + cons1);
      battery[m] += 0.5 * h * (c0.p_a + c1.p_a);
      bought[m] += 0.5 * h * (c0.p_f + c1.p_f);
      sold[m] += 0.5 * h * (c0.p_s + c1.p_s);
    }
  }
  EnergyBalanceStats out;
  const MeanStderr mc = mean_stderr(consumed), mb = mean_stderr(battery),
                   mf = mean_stderr(bought), ms = mean_stderr(sold);
  out.mean = {mc.mean, mb.mean, mf.mean, ms.mean};
  out.stderr_ = {mc.stderr_, mb.stderr_, mf.stderr_, ms.stderr_};
  return out;
}

EnergyBalance energy_balance(const PathEnsemble& ensemble, const ScenarioInputs& inputs,
                             double t_end) {
  return energy_balance_stats(ensemble, inputs, t_end).mean;
}

ReferenceReport compare_references(const ScenarioInputs& inputs, const GridSpec& grid,
                                   uint64_t seed, const SolverSettings& settings) {
  ReferenceReport rep;
  const ReferenceSolve unc = solve_unconstrained(grid, inputs, seed,
                                                 static_cast<std::size_t>(settings.n_init_samples));
  rep.theta_unconstrained = unc.theta;
  rep.stderr_unconstrained = unc.stderr_;

  const DualOutcome dual = optimize_dual(settings, grid, inputs, seed);
  rep.theta_dual = dual.dual_value;
  rep.stderr_dual = dual.dual_stderr;
  rep.dual_level = dual.final_level;
  rep.dual_tolerance_reached = dual.tolerance_reached;

  try {
    const ReferenceSolve as = solve_as_constrained(
        grid, inputs, seed, static_cast<std::size_t>(settings.n_init_samples));
    rep.theta_as = as.theta;
    rep.stderr_as = as.stderr_;
  } catch (const InfeasibleAsConstraint& e) {
    rep.as_feasible = false;
    rep.as_error = e.what();
  }

  rep.ordering_tolerance =
      3.0 * (rep.stderr_unconstrained + rep.stderr_dual + rep.stderr_as) + 1e-9;
  rep.ordering_ok = rep.theta_unconstrained <= rep.theta_dual + rep.ordering_tolerance &&
                    (!rep.as_feasible || rep.theta_dual <= rep.theta_as + rep.ordering_tolerance);
  return rep;
}

}  // namespace greenprocure
