#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "greenprocure/dual_opt.hpp"
#include "greenprocure/reference.hpp"
#include "greenprocure/sde.hpp"

namespace greenprocure {

// Provenance comment emitted as the first line of every artifact:
// "# config_hash=<hex> seed=<n> version=<v>"
std::string provenance_line(const std::string& config_json, uint64_t seed);

void write_path_ensemble_csv(const std::string& path, const PathEnsemble& ensemble,
                             const std::string& provenance);

// columns: level,iter,dual_value,subgrad_norm,amplitudes (JSON-encoded),seconds
void write_dual_trace_csv(const std::string& path, const DualTrace& trace,
                          const std::string& provenance);

struct CurveStat {
  double t = 0.0;
  double mean = 0.0, lo = 0.0, hi = 0.0;  // mean and 95% CI
};
// per-time mean/CI of net consumption, battery draw, grid buy, sale, and charge
void write_policy_ensemble_csv(const std::string& path, const PathEnsemble& ensemble,
                               const ScenarioInputs& inputs, const std::string& provenance);

// Monte Carlo violation curve: P(phi_out >= phi_th) - epsilon with binomial CIs.
void write_violation_csv(const std::string& path, const PathEnsemble& ensemble,
                         const ScenarioInputs& inputs, const std::string& provenance);

void write_multiplier_json(const std::string& path, const MultiplierFunction& mult);

void write_reference_report(const std::string& csv_path, const std::string& json_path,
                            const ReferenceReport& report, const EnergyBalance& dual_energy,
                            const std::string& provenance);

// mean/CI over paths of the uncontrolled fading (unscaled xi) and renewable r
void write_scalar_ensemble_csv(const std::string& path, const std::vector<double>& times,
                               const std::vector<std::vector<double>>& samples_by_time,
                               const std::string& column, const std::string& provenance);

uint64_t fnv1a_hash(const std::string& text);

}  // namespace greenprocure
