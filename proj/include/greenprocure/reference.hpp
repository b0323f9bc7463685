#pragma once

#include "greenprocure/dual_opt.hpp"
#include "greenprocure/hjb.hpp"
#include "greenprocure/sde.hpp"

namespace greenprocure {

struct ReferenceSolve {
  CostToGoField field;
  double theta = 0.0;
  double stderr_ = 0.0;
};

// Problem with no QoS constraint: the zero multiplier.
ReferenceSolve solve_unconstrained(const GridSpec& grid, const ScenarioInputs& inputs,
                                   uint64_t seed, std::size_t n_init_samples = 1000);

// Problem with the a.s. QoS constraint: P_tx eliminated by the inverse outage
// map; throws InfeasibleAsConstraint when some fading level cannot meet it.
ReferenceSolve solve_as_constrained(const GridSpec& grid, const ScenarioInputs& inputs,
                                    uint64_t seed, std::size_t n_init_samples = 1000);

// Expected energy balance over [0, t_end] from a controlled ensemble:
// trapezoidal integral of the mean curves, in Wh.
struct EnergyBalance {
  double consumed = 0.0;
  double battery = 0.0;
  double bought = 0.0;
  double sold = 0.0;
};
EnergyBalance energy_balance(const PathEnsemble& ensemble, const ScenarioInputs& inputs,
                             double t_end);

// Per-path trapezoids reduced to mean and standard error per component.
struct EnergyBalanceStats {
  EnergyBalance mean;
  EnergyBalance stderr_;
};
EnergyBalanceStats energy_balance_stats(const PathEnsemble& ensemble,
                                        const ScenarioInputs& inputs, double t_end);

struct ReferenceReport {
  double theta_unconstrained = 0.0, stderr_unconstrained = 0.0;
  double theta_dual = 0.0, stderr_dual = 0.0;
  double theta_as = 0.0, stderr_as = 0.0;
  bool as_feasible = true;
  std::string as_error;
  bool ordering_ok = false;
  double ordering_tolerance = 0.0;
  int dual_level = 0;
  bool dual_tolerance_reached = false;
};

ReferenceReport compare_references(const ScenarioInputs& inputs, const GridSpec& grid,
                                   uint64_t seed, const SolverSettings& settings);

}  // namespace greenprocure
