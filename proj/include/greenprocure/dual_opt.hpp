#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "greenprocure/hjb.hpp"
#include "greenprocure/multiplier.hpp"
#include "greenprocure/sde.hpp"

namespace greenprocure {

struct SolverSettings {
  double tol = 0.1;        // TOL
  double tol_init = 1.0;   // TOL_init
  int max_iter = 50;       // SSM iterations per level
  int n_bar_iter = 10;     // constant-step SSM phase
  int n_lmbm_iter = 50;    // bundle iterations
  double beta_f = 5.0;     // initialization growth factor
  double c_ssm = 0.0;      // 0 = auto: 0.05 * (||start|| + 1)
  int m_sg = 1000;         // Monte Carlo paths per subgradient
  int n_bar_t = 64;        // simulation steps over [0,T]
  int ell_max = 64;        // refinement cap (paper loops while ell < n_bar_t)
  int n_init_samples = 1000;
  int init_max_steps = 40;  // safeguard on the geometric search
};

struct SubgradientEstimate {
  std::vector<double> components;  // integrated violation per subinterval (hours)
  std::vector<double> stderr_;
  int m_paths = 0;
  int n_quad = 0;

  // RMS of the per-subinterval time averages; dimensionless stopping norm
  double normalized_norm(const MultiplierFunction& mult) const;
  double euclidean_norm() const;
};

SubgradientEstimate estimate_subgradient(const CostToGoField& field,
                                         const MultiplierFunction& multiplier,
                                         const SolverSettings& settings, uint64_t seed,
                                         const ScenarioInputs& inputs);

// Quadrature core shared with tests: accumulates (1{violation} - epsilon) dt
// per subinterval along externally supplied paths/controls.
SubgradientEstimate subgradient_from_ensemble(const PathEnsemble& ensemble,
                                              const MultiplierFunction& multiplier,
                                              int n_quad_per_interval,
                                              const ScenarioInputs& inputs);

struct DualIterate {
  int level = 0;
  int iter = 0;
  std::string phase;  // init | lmbm | ssm
  std::vector<double> amplitudes;
  double dual_value = 0.0;
  double dual_stderr = 0.0;
  double subgrad_norm = 0.0;  // normalized
  double seconds = 0.0;
  bool accepted = false;
};

struct DualTrace {
  std::vector<DualIterate> records;
  const DualIterate* best() const;
};

struct DualOutcome {
  CostToGoField field;
  MultiplierFunction multiplier;
  DualTrace trace;
  double dual_value = 0.0;
  double dual_stderr = 0.0;
  double final_norm = 0.0;
  bool tolerance_reached = false;
  int final_level = 1;
};

double initialize_amplitude(const SolverSettings& settings, const GridSpec& grid,
                            const ScenarioInputs& inputs, uint64_t seed, DualTrace* trace);

double bundle_polish(double start, const SolverSettings& settings, const GridSpec& grid,
                     const ScenarioInputs& inputs, uint64_t seed, DualTrace* trace);

struct SsmResult {
  std::vector<double> best_amplitudes;
  double best_value = 0.0;
  double best_stderr = 0.0;
  double final_norm = 0.0;
  bool accepted = false;
  CostToGoField best_field;
};
SsmResult ssm_optimize(const std::vector<double>& start, const MultiplierFunction& shape,
                       const SolverSettings& settings, const GridSpec& grid,
                       const ScenarioInputs& inputs, uint64_t seed, DualTrace* trace);

DualOutcome optimize_dual(const SolverSettings& settings, const GridSpec& grid,
                          const ScenarioInputs& inputs, uint64_t seed);

}  // namespace greenprocure
