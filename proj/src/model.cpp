#include "greenprocure/model.hpp"

#include <algorithm>
#include <cmath>

namespace greenprocure {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void ScenarioInputs::validate() const {
  model.validate();
  qos.validate();
  traffic.validate();
  battery.validate();
  renewable.validate();
  fading.validate();
  if (horizon_hours <= 0) throw std::invalid_argument("ScenarioInputs: horizon must be positive");
  if (initial_charge < 0 || initial_charge > 1)
    throw std::invalid_argument("ScenarioInputs: initial charge in [0,1]");
  if (!prices.k_b.valid() || !prices.k_s.valid() || !prices.k_net.valid())
    throw std::invalid_argument("ScenarioInputs: price curves missing");
  if (!renewable.forecast.p.valid()) throw std::invalid_argument("ScenarioInputs: forecast missing");
  // spot-check K_s <= K_b and p in [0,1] across the horizon
  for (int i = 0; i <= 96; ++i) {
    const double t = horizon_hours * i / 96.0;
    if (prices.k_s.eval(t) > prices.k_b.eval(t) * (1.0 + 1e-12))
      throw std::invalid_argument("ScenarioInputs: requires K_s(t) <= K_b(t)");
    const double p = renewable.forecast.eval(t);
    if (p < 0 || p > 1) throw std::invalid_argument("ScenarioInputs: forecast outside [0,1]");
  }
}

double traffic_count(double t_hours, const TrafficProfile& profile) {
  if (t_hours < 0) throw std::invalid_argument("traffic_count: t must be nonnegative");
  // two peaks per daily period; with period_hours = 24 this is sin(pi t/6 + pi)
  const double arg = 4.0 * kPi * t_hours / profile.period_hours + kPi;
  const double base = std::pow(0.5 * (1.0 + std::sin(arg)), profile.rho);
  return std::max(profile.n_min, profile.n_max * base);
}

// Coverage radius^eta proxy: p_tx*xi*kappa / (sigma0 * 10^(SNR_th/10))
static double coverage_ratio(double p_tx, double xi, const ModelParams& params) {
  return p_tx * xi * params.kappa / params.noise_scale();
}

double outage_proportion(double p_tx, double xi, const UserDistribution& dist,
                         const ModelParams& params) {
  if (p_tx < 0) throw std::invalid_argument("outage_proportion: p_tx must be nonnegative");
  if (xi < 0) throw std::invalid_argument("outage_proportion: xi below the fading floor");
  const double q = std::pow(coverage_ratio(p_tx, xi, params), 2.0 / params.eta);
  if (std::holds_alternative<UniformUsers>(dist)) {
    const double area = std::get<UniformUsers>(dist).area;
    const double out = 1.0 - kPi / area * q;
    return std::clamp(out, 0.0, 1.0);
  }
  const double sigma_u = std::get<GaussianUsers>(dist).sigma_u;
  return std::exp(-q / (2.0 * sigma_u * sigma_u));
}

double snr_db(double p_tx, double xi, double distance, const ModelParams& params) {
  if (p_tx <= 0 || xi <= 0 || distance <= 0)
    throw std::invalid_argument("snr_db: inputs must be positive");
  const double rx = p_tx * xi * params.kappa * std::pow(distance, -params.eta);
  return 10.0 * std::log10(rx / params.sigma0);
}

double power_balance_residual(const ControlVector& ctrl, double t_hours,
                              const ModelParams& params, const TrafficProfile& profile) {
  const double n_u = traffic_count(t_hours, profile);
  return ctrl.p_a + ctrl.p_f - params.c_scal * n_u * ctrl.p_tx - params.c_offset;
}

BatteryLimits battery_limits(double a, const BatteryCharacteristic& battery) {
  if (a < 0 || a > 1) throw std::invalid_argument("battery_limits: charge outside [0,1]");
  BatteryLimits lim;
  lim.discharge_cap = battery.p_discharge_max * std::min(1.0, a / battery.ramp_fraction);
  lim.charge_cap = battery.p_charge_max * std::min(1.0, (1.0 - a) / battery.ramp_fraction);
  return lim;
}

double running_cost(double t_hours, const StateVector& x, const ControlVector& ctrl,
                    double lambda_val, const ScenarioInputs& inputs) {
  const double n_u = traffic_count(t_hours, inputs.traffic);
  const double xi = inputs.fading.xi_from_chi(x.chi);
  const double phi_out = outage_proportion(ctrl.p_tx, xi, inputs.user_dist, inputs.model);
  const double w = inputs.model.w;
  const double financial = inputs.prices.k_b.eval(t_hours) * ctrl.p_f -
                           inputs.prices.k_s.eval(t_hours) * ctrl.p_s -
                           inputs.prices.k_net.eval(t_hours) * n_u * (1.0 - phi_out);
  const double environmental =
      inputs.model.c1_emission * ctrl.p_f + inputs.model.c2_emission * ctrl.p_f * ctrl.p_f;
  const double indicator = phi_out >= inputs.qos.phi_th ? 1.0 : 0.0;
  return w * financial + (1.0 - w) * environmental +
         lambda_val * (indicator - inputs.qos.epsilon);
}

double terminal_cost(double a, const ModelParams& params) {
  if (a < 0 || a > 1) throw std::invalid_argument("terminal_cost: charge outside [0,1]");
  return -params.p_k * params.a_max * a;
}

double qos_transmit_threshold(double xi, const UserDistribution& dist, const ModelParams& params,
                              double phi_th) {
  const double denom = xi * params.kappa;
  if (denom <= 0) throw std::invalid_argument("qos_transmit_threshold: xi*kappa must be positive");
  if (std::holds_alternative<UniformUsers>(dist)) {
    const double area = std::get<UniformUsers>(dist).area;
    const double q = std::pow((1.0 - phi_th) * area / kPi, params.eta / 2.0);
    return params.noise_scale() * q / denom;
  }
  const double sigma_u = std::get<GaussianUsers>(dist).sigma_u;
  const double q = std::pow(-2.0 * sigma_u * sigma_u * std::log(phi_th), params.eta / 2.0);
  return params.noise_scale() * q / denom;
}

bool qos_violated(double p_tx, double xi, const UserDistribution& dist, const ModelParams& params,
                  double phi_th) {
  const double threshold = qos_transmit_threshold(xi, dist, params, phi_th);
  return p_tx < threshold * (1.0 - 1e-9);
}

}  // namespace greenprocure
