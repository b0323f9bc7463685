#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "greenprocure/model.hpp"
#include "greenprocure/rng.hpp"

namespace greenprocure {

using PolicyFn = std::function<ControlVector(double t, const StateVector&)>;

struct PathEnsemble {
  std::vector<double> times;                           // shared grid, 0..T
  std::vector<std::vector<StateVector>> states;        // [path][time]
  std::vector<std::vector<ControlVector>> controls;    // optional, same layout
  uint64_t seed = 0;

  std::size_t path_count() const { return states.size(); }
};

// time-varying mean reversion rate; keeps the renewable process inside [0,1]
double theta_of_t(double t, const RenewableParams& params);

// Scaled drift F(t,x,ctrl): battery, renewable, fading components (1/hour).
std::array<double, 3> drift_vector(double t, const StateVector& x, const ControlVector& ctrl,
                                   const ScenarioInputs& inputs);

// G entries: half the squared diffusion per component (PDE convention); the
// SDE noise scale per component is sqrt(2 G_i).
std::array<double, 3> diffusion_vector(double t, const StateVector& x, const ScenarioInputs& inputs);

StateVector em_step(double t, const StateVector& x, const ControlVector& ctrl, double dt,
                    const std::array<double, 3>& noise, const ScenarioInputs& inputs);

PathEnsemble simulate_controlled_paths(const PolicyFn& policy, std::size_t m_paths,
                                       std::size_t n_steps, uint64_t seed,
                                       const ScenarioInputs& inputs, bool store_controls = false);

// Bridge interpolation between stored grid points. Noise per query comes from
// a caller-provided stream so consecutive queries on one interval form a
// consistent bridge walk. Variance convention: diffusion frozen at the left
// grid endpoint.
StateVector brownian_bridge_point(const std::vector<double>& times,
                                  const std::vector<StateVector>& path, double t_query,
                                  RngStream& noise, const ScenarioInputs& inputs);

StateVector sample_initial_state(double a0, uint64_t seed, uint64_t path_index,
                                 const ScenarioInputs& inputs);

// Uncontrolled fading process on its native domain [xi_floor, inf), used for
// invariant-distribution checks; returns terminal samples of xi.
std::vector<double> simulate_fading_unscaled(std::size_t m_paths, std::size_t n_steps,
                                             double t_final, uint64_t seed,
                                             const FadingParams& fading);

// Same process, full curves: result[n][m] = xi of path m at step n.
std::vector<std::vector<double>> simulate_fading_paths_unscaled(std::size_t m_paths,
                                                                std::size_t n_steps,
                                                                double t_final, uint64_t seed,
                                                                const FadingParams& fading);

}  // namespace greenprocure
