#include "greenprocure/sde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace greenprocure {

namespace {
constexpr double kForecastClamp = 1e-3;  // delta for min(p, 1-p)

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// stream tags
enum : uint64_t { kTagPath = 1, kTagInit = 2, kTagFadingInit = 3, kTagUnscaled = 4 };

double sample_gamma(RngStream& rng, double shape) {
  // Marsaglia-Tsang, shape > 1
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double z, v;
    do {
      z = rng.normal();
      v = 1.0 + c * z;
    } while (v <= 0.0);
    v = v * v * v;
    if (std::log(rng.uniform()) < 0.5 * z * z + d - d * v + d * std::log(v)) return d * v;
  }
}
}  // namespace

double theta_of_t(double t, const RenewableParams& params) {
  const double p_raw = params.forecast.eval(t);
  const double p = std::clamp(p_raw, kForecastClamp, 1.0 - kForecastClamp);
  const double pdot = params.forecast.deriv(t);
  const double candidate = (params.alpha * params.theta0 + std::fabs(pdot)) / std::min(p, 1.0 - p);
  return std::max(params.theta0, candidate);
}

std::array<double, 3> drift_vector(double t, const StateVector& x, const ControlVector& ctrl,
                                   const ScenarioInputs& inputs) {
  const double f_batt =
      (inputs.model.p_r_max * x.r - ctrl.p_s - ctrl.p_a) / inputs.model.a_max;
  const double p = inputs.renewable.forecast.eval(t);
  const double pdot = inputs.renewable.forecast.deriv(t);
  const double f_ren = pdot - theta_of_t(t, inputs.renewable) * (x.r - p);
  const double span = inputs.fading.scale_span();
  const double f_fad = -inputs.fading.theta * (x.chi - inputs.fading.mu / span);
  return {f_batt, f_ren, f_fad};
}

std::array<double, 3> diffusion_vector(double t, const StateVector& x,
                                       const ScenarioInputs& inputs) {
  (void)t;
  const double g_ren = inputs.renewable.alpha * inputs.renewable.theta0 * x.r * (1.0 - x.r);
  const double g_fad = inputs.fading.theta * x.chi / inputs.fading.scale_span();
  return {0.0, std::max(0.0, g_ren), std::max(0.0, g_fad)};
}

StateVector em_step(double t, const StateVector& x, const ControlVector& ctrl, double dt,
                    const std::array<double, 3>& noise, const ScenarioInputs& inputs) {
  if (dt <= 0) throw std::invalid_argument("em_step: dt must be positive");
  const auto f = drift_vector(t, x, ctrl, inputs);
  const auto g = diffusion_vector(t, x, inputs);
  const double sq = std::sqrt(dt);
  StateVector next;
  next.a = clamp01(x.a + f[0] * dt);
  next.r = clamp01(x.r + f[1] * dt + std::sqrt(2.0 * g[1]) * sq * noise[1]);
  next.chi = clamp01(x.chi + f[2] * dt + std::sqrt(2.0 * g[2]) * sq * noise[2]);
  return next;
}

StateVector sample_initial_state(double a0, uint64_t seed, uint64_t path_index,
                                 const ScenarioInputs& inputs) {
  if (a0 < 0 || a0 > 1) throw std::invalid_argument("sample_initial_state: a0 outside [0,1]");
  StateVector x;
  x.a = a0;

  // renewable: run the uncontrolled error SDE from -varsigma to 0 starting on
  // the forecast, so R(0) carries spin-up uncertainty
  const double p0 = inputs.renewable.forecast.eval(0.0);
  double r = p0;
  if (inputs.renewable.varsigma > 0.0) {
    RngStream rng(seed, kTagInit, path_index);
    const int n_sub = 16;
    const double dt = inputs.renewable.varsigma / n_sub;
    const double theta = theta_of_t(0.0, inputs.renewable);
    for (int i = 0; i < n_sub; ++i) {
      const double g = inputs.renewable.alpha * inputs.renewable.theta0 * r * (1.0 - r);
      r += -theta * (r - p0) * dt + std::sqrt(2.0 * std::max(0.0, g) * dt) * rng.normal();
      r = clamp01(r);
    }
  }
  x.r = r;

  // fading: shifted-gamma invariant law, truncated at chi_bar, scaled to [0,1]
  RngStream rng(seed, kTagFadingInit, path_index);
  const double span = inputs.fading.scale_span();
  double g;
  do {
    g = sample_gamma(rng, inputs.fading.mu);
  } while (g > span);  // truncate to the grid box
  x.chi = clamp01(g / span);
  return x;
}

PathEnsemble simulate_controlled_paths(const PolicyFn& policy, std::size_t m_paths,
                                       std::size_t n_steps, uint64_t seed,
                                       const ScenarioInputs& inputs, bool store_controls) {
  if (m_paths < 1 || n_steps < 1)
    throw std::invalid_argument("simulate_controlled_paths: need at least one path and step");
  const double horizon = inputs.horizon_hours;
  const double dt = horizon / static_cast<double>(n_steps);

  PathEnsemble ens;
  ens.seed = seed;
  ens.times.resize(n_steps + 1);
  for (std::size_t n = 0; n <= n_steps; ++n) ens.times[n] = dt * static_cast<double>(n);
  ens.states.assign(m_paths, {});
  if (store_controls) ens.controls.assign(m_paths, {});

  for (std::size_t m = 0; m < m_paths; ++m) {
    auto& path = ens.states[m];
    path.resize(n_steps + 1);
    path[0] = sample_initial_state(inputs.initial_charge, seed, m, inputs);
    RngStream rng(seed, kTagPath, m);
    std::vector<ControlVector>* ctrl_row = store_controls ? &ens.controls[m] : nullptr;
    if (ctrl_row) ctrl_row->resize(n_steps + 1);
    for (std::size_t n = 0; n < n_steps; ++n) {
      const double t = ens.times[n];
      ControlVector ctrl;
      try {
        ctrl = policy(t, path[n]);
      } catch (const std::exception& e) {
        throw std::runtime_error("simulate_controlled_paths: policy failed at path " +
                                 std::to_string(m) + ", step " + std::to_string(n) + ": " +
                                 e.what());
      }
      if (ctrl_row) (*ctrl_row)[n] = ctrl;
      path[n + 1] = em_step(t, path[n], ctrl, dt, rng.normal3(), inputs);
    }
    if (ctrl_row) {
      const double t_end = ens.times[n_steps];
      (*ctrl_row)[n_steps] = policy(t_end, path[n_steps]);
    }
  }
  return ens;
}

StateVector brownian_bridge_point(const std::vector<double>& times,
                                  const std::vector<StateVector>& path, double t_query,
                                  RngStream& noise, const ScenarioInputs& inputs) {
  if (times.size() != path.size() || times.size() < 2)
    throw std::invalid_argument("brownian_bridge_point: malformed path");
  if (t_query < times.front() - 1e-12 || t_query > times.back() + 1e-12)
    throw std::out_of_range("brownian_bridge_point: query outside the path span");
  const auto it = std::lower_bound(times.begin(), times.end(), t_query);
  if (it != times.end() && *it == t_query)
    return path[static_cast<std::size_t>(it - times.begin())];
  const std::size_t right = static_cast<std::size_t>(it - times.begin());
  const std::size_t left = right - 1;
  const double t0 = times[left], t1 = times[right];
  const double frac = (t_query - t0) / (t1 - t0);

  const auto g = diffusion_vector(t0, path[left], inputs);  // frozen at the left endpoint
  const double bridge_var_scale = (t_query - t0) * (t1 - t_query) / (t1 - t0);
  StateVector out;
  const auto lerp = [&](double a, double b) { return a + frac * (b - a); };
  out.a = lerp(path[left].a, path[right].a);  // zero-diffusion row: linear
  out.r = clamp01(lerp(path[left].r, path[right].r) +
                  std::sqrt(2.0 * g[1] * bridge_var_scale) * noise.normal());
  out.chi = clamp01(lerp(path[left].chi, path[right].chi) +
                    std::sqrt(2.0 * g[2] * bridge_var_scale) * noise.normal());
  return out;
}

namespace {

template <typename Observe>
void run_fading_unscaled(std::size_t m_paths, std::size_t n_steps, double t_final, uint64_t seed,
                         const FadingParams& fading, Observe&& observe) {
  const double dt = t_final / static_cast<double>(n_steps);
  for (std::size_t m = 0; m < m_paths; ++m) {
    RngStream rng(seed, kTagUnscaled, m);
    double xi = fading.xi_floor + sample_gamma(rng, fading.mu);  // invariant initial law
    observe(m, 0, xi);
    for (std::size_t n = 0; n < n_steps; ++n) {
      const double drift = -fading.theta * (xi - fading.xi_floor - fading.mu);
      const double diff2 = 2.0 * fading.theta * std::max(0.0, xi - fading.xi_floor);
      xi += drift * dt + std::sqrt(diff2 * dt) * rng.normal();
      xi = std::max(xi, fading.xi_floor);
      observe(m, n + 1, xi);
    }
  }
}

}  // namespace

std::vector<double> simulate_fading_unscaled(std::size_t m_paths, std::size_t n_steps,
                                             double t_final, uint64_t seed,
                                             const FadingParams& fading) {
  std::vector<double> out(m_paths);
  run_fading_unscaled(m_paths, n_steps, t_final, seed, fading,
                      [&](std::size_t m, std::size_t n, double xi) {
                        if (n == n_steps) out[m] = xi;
                      });
  return out;
}

std::vector<std::vector<double>> simulate_fading_paths_unscaled(std::size_t m_paths,
                                                                std::size_t n_steps,
                                                                double t_final, uint64_t seed,
                                                                const FadingParams& fading) {
  std::vector<std::vector<double>> out(n_steps + 1, std::vector<double>(m_paths));
  run_fading_unscaled(m_paths, n_steps, t_final, seed, fading,
                      [&](std::size_t m, std::size_t n, double xi) { out[n][m] = xi; });
  return out;
}

}  // namespace greenprocure
