#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "greenprocure/hamiltonian.hpp"
#include "greenprocure/model.hpp"
#include "greenprocure/multiplier.hpp"

namespace greenprocure {

struct GridSpec {
  int n_t = 0;  // 0 = derive from the CFL condition
  int n_a = 10;
  int n_r = 10;
  int n_chi = 10;
  double chi_bar = 0.0;  // informational; taken from FadingParams
  double horizon = 48.0;

  double dt() const { return horizon / n_t; }
  double da() const { return 1.0 / n_a; }
  double dr() const { return 1.0 / n_r; }
  double dchi() const { return 1.0 / n_chi; }
  std::size_t nodes() const {
    return static_cast<std::size_t>(n_a + 1) * (n_r + 1) * (n_chi + 1);
  }
  std::size_t node_index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * (n_r + 1) + j) * (n_chi + 1) + k;
  }
};

struct CflReport {
  bool ok = false;
  double max_lhs = 0.0;  // CFL left side at the grid's n_t
  int min_nt = 0;        // smallest n_t satisfying the condition
};

CflReport check_cfl(const GridSpec& grid, const ScenarioInputs& inputs);

// Grid-sampled cost-to-go with stored upwind battery-direction derivatives.
struct CostToGoField {
  GridSpec grid;
  MultiplierFunction multiplier;
  std::vector<std::vector<double>> values;   // [time slice][node]; empty unless stored
  std::vector<std::vector<double>> d_plus;   // forward battery derivative per slice
  std::vector<std::vector<double>> d_minus;  // backward battery derivative per slice
  std::vector<double> slice0;                // values at t=0 (always kept)
  bool as_constrained = false;
  long boundary_drift_clamps = 0;

  bool has_values() const { return !values.empty(); }
};

struct SolveOptions {
  bool store_values = true;
  int threads = 0;  // 0 = auto (GREENPROCURE_THREADS or hardware)
};

CostToGoField solve_hjb(const MultiplierFunction& multiplier, const GridSpec& grid,
                        const ScenarioInputs& inputs, const SolveOptions& options = {});

// Problem-5 variant: P_tx eliminated by the inverse outage map.
CostToGoField solve_hjb_as_constrained(const GridSpec& grid, const ScenarioInputs& inputs,
                                       const SolveOptions& options = {});

double interpolate_value(const CostToGoField& field, double t, const StateVector& x);

struct BatteryDerivs {
  double d_plus = 0.0;
  double d_minus = 0.0;
};
BatteryDerivs interpolate_battery_derivs(const CostToGoField& field, double t,
                                         const StateVector& x);

struct DualValue {
  double theta = 0.0;
  double stderr_ = 0.0;
};
// Monte Carlo average of the t=0 cost-to-go over the random initial state.
DualValue dual_value(const CostToGoField& field, double a0, const ScenarioInputs& inputs,
                     std::size_t n_init_samples, uint64_t seed);

// Optimal control at an arbitrary point, from interpolated derivatives.
HamiltonianResult field_policy(const CostToGoField& field, double t, const StateVector& x,
                               const ScenarioInputs& inputs);

// Export: CSV or little-endian binary dump with a grid metadata header.
void export_field_csv(const CostToGoField& field, const std::string& path);
void export_field_binary(const CostToGoField& field, const std::string& path);

}  // namespace greenprocure
