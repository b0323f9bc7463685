#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <variant>

#include "greenprocure/curves.hpp"

namespace greenprocure {

struct ModelParams {
  double c_scal = 7.84;        // power-loss scaling factor
  double c_offset = 71.5;      // W, base station offset power
  double p_tx_max = 5e3;       // W, total transmit cap
  double kappa = 1.0;          // path-loss constant
  double eta = 2.0;            // path-loss exponent
  double snr_th = 15.0;        // dB
  double sigma0 = 3.1623e-8;   // W, ambient noise
  double p_r_max = 1e4;        // W, renewable capacity
  double a_max = 1e4;          // Wh, battery capacity
  double c1_emission = 4e-4;   // EUR/Wh
  double c2_emission = 1e-4;   // EUR/W^2 h
  double p_k = 0.0064;         // EUR/Wh, fictitious terminal value
  double w = 0.5;              // Pareto weight

  // sigma0 * 10^(snr_th/10): the noise scale every outage formula divides by
  double noise_scale() const { return sigma0 * std::pow(10.0, snr_th / 10.0); }

  void validate() const {
    if (c_scal < 0 || c_offset < 0 || p_tx_max < 0 || kappa < 0 || sigma0 < 0 ||
        p_r_max < 0 || a_max < 0 || c1_emission < 0 || c2_emission < 0 || p_k < 0)
      throw std::invalid_argument("ModelParams: power/energy/price fields must be nonnegative");
    if (eta <= 0) throw std::invalid_argument("ModelParams: eta must be positive");
    if (w < 0 || w > 1) throw std::invalid_argument("ModelParams: w must lie in [0,1]");
  }
};

struct QoSParams {
  double phi_th = 1e-3;  // outage-proportion threshold
  double epsilon = 0.1;  // risk level

  void validate() const {
    if (phi_th <= 0 || phi_th >= 1) throw std::invalid_argument("QoSParams: phi_th in (0,1)");
    if (epsilon <= 0 || epsilon >= 1) throw std::invalid_argument("QoSParams: epsilon in (0,1)");
  }
};

struct TrafficProfile {
  double n_min = 100.0;
  double n_max = 2000.0;
  double rho = 3.0;
  double period_hours = 24.0;  // daily cycle; the sinusoid itself has two peaks per period

  void validate() const {
    if (n_min <= 0 || n_max < n_min) throw std::invalid_argument("TrafficProfile: need 0 < n_min <= n_max");
    if (rho < 1) throw std::invalid_argument("TrafficProfile: rho >= 1");
    if (period_hours <= 0) throw std::invalid_argument("TrafficProfile: period must be positive");
  }
};

struct UniformUsers {
  double area = 1e6;  // m^2
};
struct GaussianUsers {
  double sigma_u = 300.0;  // m
};
using UserDistribution = std::variant<UniformUsers, GaussianUsers>;

struct BatteryCharacteristic {
  double p_charge_max = 7.5e3;     // W, absorb plateau
  double p_discharge_max = 3.0e4;  // W, supply plateau
  double ramp_fraction = 0.1;      // width of the linear ramps at the charge extremes

  void validate() const {
    if (p_charge_max < 0 || p_discharge_max < 0)
      throw std::invalid_argument("BatteryCharacteristic: plateaus must be nonnegative");
    if (p_charge_max > p_discharge_max)
      throw std::invalid_argument("BatteryCharacteristic: charge plateau must not exceed discharge plateau");
    if (ramp_fraction <= 0 || ramp_fraction > 0.5)
      throw std::invalid_argument("BatteryCharacteristic: ramp_fraction in (0, 0.5]");
  }
};

struct PriceCurves {
  Curve k_b;    // EUR/Wh buy
  Curve k_s;    // EUR/Wh sell
  Curve k_net;  // EUR/hour/user
};

struct StateVector {
  double a = 0.0;    // normalized battery charge
  double r = 0.0;    // normalized renewable output
  double chi = 0.0;  // scaled fading level in [0,1]
};

struct ControlVector {
  double p_a = 0.0;   // W, battery draw
  double p_f = 0.0;   // W, grid purchase
  double p_tx = 0.0;  // W, per-user transmit
  double p_s = 0.0;   // W, battery-to-grid sale
};

struct FadingParams {
  double mu = 3.0;          // shape
  double theta = 1.0 / 24;  // 1/hour mean-reversion rate
  double xi_floor = 0.5473; // fading floor
  double chi_bar = 6.8431;  // truncation upper bound (unscaled)

  double scale_span() const { return chi_bar - xi_floor; }
  double xi_from_chi(double chi) const { return xi_floor + chi * scale_span(); }
  double chi_from_xi(double xi) const { return (xi - xi_floor) / scale_span(); }

  void validate() const {
    if (mu <= 1) throw std::invalid_argument("FadingParams: mu must exceed 1");
    if (theta <= 0) throw std::invalid_argument("FadingParams: theta must be positive");
    if (chi_bar <= xi_floor) throw std::invalid_argument("FadingParams: chi_bar must exceed xi_floor");
  }
};

struct RenewableParams {
  double alpha = 0.34;          // diffusion scale
  double theta0 = 2.3948 / 24;  // 1/hour base mean reversion
  double varsigma = 0.054 * 24; // hours, forecast-error spin-up
  ForecastCurve forecast;       // p(t) in [0,1], with derivative

  void validate() const {
    if (alpha <= 0 || theta0 <= 0) throw std::invalid_argument("RenewableParams: alpha, theta0 positive");
    if (varsigma < 0) throw std::invalid_argument("RenewableParams: varsigma nonnegative");
  }
};

struct ScenarioInputs {
  ModelParams model;
  QoSParams qos;
  TrafficProfile traffic;
  UserDistribution user_dist = GaussianUsers{};
  BatteryCharacteristic battery;
  PriceCurves prices;
  RenewableParams renewable;
  FadingParams fading;
  double horizon_hours = 48.0;  // two-day running horizon
  double initial_charge = 0.5;  // A0

  void validate() const;
};

// --- model-core operations -------------------------------------------------

double traffic_count(double t_hours, const TrafficProfile& profile);

// Outage proportion phi_out for a transmit power and an (unscaled) fading
// level; closed forms per user distribution, clamped to [0,1].
double outage_proportion(double p_tx, double xi, const UserDistribution& dist,
                         const ModelParams& params);

double snr_db(double p_tx, double xi, double distance, const ModelParams& params);

double power_balance_residual(const ControlVector& ctrl, double t_hours,
                              const ModelParams& params, const TrafficProfile& profile);

struct BatteryLimits {
  double charge_cap = 0.0;     // W the battery can absorb at this charge level
  double discharge_cap = 0.0;  // W the battery can supply
};
BatteryLimits battery_limits(double a, const BatteryCharacteristic& battery);

double running_cost(double t_hours, const StateVector& x, const ControlVector& ctrl,
                    double lambda_val, const ScenarioInputs& inputs);

double terminal_cost(double a, const ModelParams& params);

// Transmit power that pins phi_out exactly at phi_th for fading level xi
// (inverse of the closed-form outage maps).
double qos_transmit_threshold(double xi, const UserDistribution& dist, const ModelParams& params,
                              double phi_th);

// Robust violation test: phi_out(p_tx, xi) exceeds phi_th by more than
// roundoff. Policies that deliberately pin phi_out = phi_th do not count.
bool qos_violated(double p_tx, double xi, const UserDistribution& dist, const ModelParams& params,
                  double phi_th);

}  // namespace greenprocure
