#include "greenprocure/hjb.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <thread>

#include "greenprocure/math_util.hpp"
#include "greenprocure/rng.hpp"
#include "greenprocure/sde.hpp"

namespace greenprocure {

namespace {

int pick_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GREENPROCURE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  if (threads <= 1 || count < 256) {
    fn(std::size_t{0}, count, 0);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::size_t lo = std::min(count, chunk * static_cast<std::size_t>(t));
    const std::size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi, t] { fn(lo, hi, t); });
  }
  for (auto& th : pool) th.join();
}

struct SliceTables {
  // t-independent per-node data
  std::vector<double> cap_charge, cap_discharge;   // per a-node
  std::vector<double> g2;                          // per r-node
  std::vector<double> xi, d5, rev_c3, uni_u0, f3, g3;  // per chi-node
};

SliceTables build_tables(const GridSpec& grid, const ScenarioInputs& inputs) {
  SliceTables tb;
  tb.cap_charge.resize(grid.n_a + 1);
  tb.cap_discharge.resize(grid.n_a + 1);
  for (int i = 0; i <= grid.n_a; ++i) {
    const BatteryLimits lim = battery_limits(grid.da() * i, inputs.battery);
    tb.cap_charge[i] = lim.charge_cap;
    tb.cap_discharge[i] = lim.discharge_cap;
  }
  tb.g2.resize(grid.n_r + 1);
  for (int j = 0; j <= grid.n_r; ++j) {
    const double r = grid.dr() * j;
    tb.g2[j] = inputs.renewable.alpha * inputs.renewable.theta0 * r * (1.0 - r);
  }
  const int nk = grid.n_chi;
  tb.xi.resize(nk + 1);
  tb.d5.resize(nk + 1);
  tb.rev_c3.resize(nk + 1);
  tb.uni_u0.resize(nk + 1);
  tb.f3.resize(nk + 1);
  tb.g3.resize(nk + 1);
  const double span = inputs.fading.scale_span();
  const double uni_exp = 2.0 / inputs.model.eta;
  for (int k = 0; k <= nk; ++k) {
    const double chi = grid.dchi() * k;
    const double xi = inputs.fading.xi_from_chi(chi);
    tb.xi[k] = xi;
    tb.d5[k] = qos_transmit_threshold(xi, inputs.user_dist, inputs.model, inputs.qos.phi_th);
    const double cov = xi * inputs.model.kappa / inputs.model.noise_scale();
    if (std::holds_alternative<GaussianUsers>(inputs.user_dist)) {
      const double su = std::get<GaussianUsers>(inputs.user_dist).sigma_u;
      tb.rev_c3[k] = std::pow(cov, uni_exp) / (2.0 * su * su);
      tb.uni_u0[k] = 0.0;
    } else {
      const double area = std::get<UniformUsers>(inputs.user_dist).area;
      tb.rev_c3[k] = 0.0;
      tb.uni_u0[k] = 3.14159265358979323846 / area * std::pow(cov, uni_exp);
    }
    tb.f3[k] = -inputs.fading.theta * (chi - inputs.fading.mu / span);
    tb.g3[k] = inputs.fading.theta * chi / span;
  }
  return tb;
}

CostToGoField solve_internal(const MultiplierFunction& multiplier, GridSpec grid,
                             const ScenarioInputs& inputs, const SolveOptions& options,
                             bool as_mode) {
  inputs.validate();
  if (grid.horizon != inputs.horizon_hours) grid.horizon = inputs.horizon_hours;
  grid.chi_bar = inputs.fading.chi_bar;
  const CflReport cfl = check_cfl(grid, inputs);
  if (grid.n_t <= 0)
    grid.n_t = cfl.min_nt;
  else if (!cfl.ok)
    throw std::runtime_error("solve_hjb: CFL condition violated; need n_t >= " +
                             std::to_string(cfl.min_nt));

  const int threads = pick_threads(options.threads);
  const std::size_t nodes = grid.nodes();
  const int nr1 = grid.n_r + 1, nk1 = grid.n_chi + 1;
  const double dt = grid.dt(), da = grid.da(), dr = grid.dr(), dchi = grid.dchi();

  CostToGoField field;
  field.grid = grid;
  field.multiplier = multiplier;
  field.as_constrained = as_mode;
  field.d_plus.assign(grid.n_t + 1, {});
  field.d_minus.assign(grid.n_t + 1, {});
  if (options.store_values) field.values.assign(grid.n_t + 1, {});

  const SliceTables tb = build_tables(grid, inputs);

  std::vector<double> u_curr(nodes), u_next(nodes);
  for (int i = 0; i <= grid.n_a; ++i)
    for (int j = 0; j < nr1; ++j)
      for (int k = 0; k < nk1; ++k)
        u_curr[grid.node_index(i, j, k)] = terminal_cost(da * i, inputs.model);
  const double terminal_deriv = -inputs.model.p_k * inputs.model.a_max;
  field.d_plus[grid.n_t].assign(nodes, terminal_deriv);
  field.d_minus[grid.n_t].assign(nodes, terminal_deriv);
  if (options.store_values) field.values[grid.n_t] = u_curr;

  const auto compute_derivs = [&](const std::vector<double>& u, int slice) {
    auto& dp = field.d_plus[slice];
    auto& dm = field.d_minus[slice];
    dp.assign(nodes, 0.0);
    dm.assign(nodes, 0.0);
    const std::size_t stride_a = static_cast<std::size_t>(nr1) * nk1;
    for (int i = 0; i <= grid.n_a; ++i)
      for (std::size_t jk = 0; jk < stride_a; ++jk) {
        const std::size_t idx = i * stride_a + jk;
        if (i < grid.n_a) dp[idx] = (u[idx + stride_a] - u[idx]) / da;
        if (i > 0) dm[idx] = (u[idx] - u[idx - stride_a]) / da;
      }
    for (std::size_t jk = 0; jk < stride_a; ++jk) {
      dm[jk] = dp[jk];  // one-sided at a = 0
      const std::size_t top = static_cast<std::size_t>(grid.n_a) * stride_a + jk;
      dp[top] = dm[top];  // one-sided at a = 1
    }
  };

  std::atomic<long> clamp_count{0};
  CellContext base_ctx;
  base_ctx.inputs = &inputs;

  for (int n = grid.n_t; n >= 1; --n) {
    const double t = dt * n;
    // slice-level context
    CellContext tc = base_ctx;
    tc.t = t;
    tc.lambda = as_mode ? 0.0 : multiplier.eval(t);
    tc.n_u = traffic_count(t, inputs.traffic);
    tc.d1 = inputs.model.c_scal * tc.n_u;
    tc.d3 = inputs.model.p_tx_max / tc.n_u;
    tc.kb = inputs.prices.k_b.eval(t);
    tc.ks = inputs.prices.k_s.eval(t);
    tc.knet = inputs.prices.k_net.eval(t);
    tc.gaussian_users = std::holds_alternative<GaussianUsers>(inputs.user_dist);
    tc.uni_exp = 2.0 / inputs.model.eta;
    const double p_fc = inputs.renewable.forecast.eval(t);
    const double pdot = inputs.renewable.forecast.deriv(t);
    const double theta_t = theta_of_t(t, inputs.renewable);

    const auto& u = u_curr;
    const auto& dp_slice = field.d_plus[n];
    const auto& dm_slice = field.d_minus[n];

    std::vector<double> max_abs_u(threads, 0.0), max_abs_h(threads, 0.0);
    std::vector<long> clamps(threads, 0);
    std::vector<std::exception_ptr> errors(threads);

    parallel_for(nodes, threads, [&](std::size_t lo, std::size_t hi, int tid) {
      try {
        for (std::size_t idx = lo; idx < hi; ++idx) {
          const int k = static_cast<int>(idx % nk1);
          const int j = static_cast<int>((idx / nk1) % nr1);
          const int i = static_cast<int>(idx / (static_cast<std::size_t>(nk1) * nr1));
          CellContext ctx = tc;
          ctx.x = StateVector{da * i, dr * j, dchi * k};
          ctx.m = ctx.x.r * inputs.model.p_r_max - inputs.model.c_offset;
          ctx.cap_charge = tb.cap_charge[i];
          ctx.cap_discharge = tb.cap_discharge[i];
          ctx.xi = tb.xi[k];
          ctx.d5 = tb.d5[k];
          ctx.rev_c3 = tb.rev_c3[k];
          ctx.uni_u0 = tb.uni_u0[k];

          const HamiltonianResult res =
              as_mode ? hamiltonian_minimize_as(ctx, dp_slice[idx], dm_slice[idx])
                      : hamiltonian_minimize_ctx(ctx, dp_slice[idx], dm_slice[idx]);

          double f1p = std::max(res.f1, 0.0);
          double f1m = std::max(-res.f1, 0.0);
          const double f2 = pdot - theta_t * (ctx.x.r - p_fc);
          double f2p = std::max(f2, 0.0);
          double f2m = std::max(-f2, 0.0);
          double f3p = std::max(tb.f3[k], 0.0);
          double f3m = std::max(-tb.f3[k], 0.0);
          const double g2 = tb.g2[j];
          const double g3 = k == grid.n_chi ? 0.0 : tb.g3[k];  // nonreflective top boundary

          // outward drift at a closed boundary cannot be discretized; clamp it
          if (i == 0 && f1m > 0) { f1m = 0; ++clamps[tid]; }
          if (i == grid.n_a && f1p > 0) { f1p = 0; ++clamps[tid]; }
          if (j == 0 && f2m > 0) { f2m = 0; ++clamps[tid]; }
          if (j == grid.n_r && f2p > 0) { f2p = 0; ++clamps[tid]; }
          if (k == 0 && f3m > 0) { f3m = 0; ++clamps[tid]; }
          if (k == grid.n_chi && f3p > 0) { f3p = 0; ++clamps[tid]; }

          const double ca = dt / da, cr = dt / dr, ck = dt / dchi;
          const double crr = 2.0 * g2 * dt / (dr * dr);
          const double ckk = 2.0 * g3 * dt / (dchi * dchi);
          const double diag =
              1.0 - crr - ckk - ca * (f1p + f1m) - cr * (f2p + f2m) - ck * (f3p + f3m);
          if (diag < -1e-12)
            throw std::runtime_error("CFL violated during sweep at (n,i,j,k)=(" +
                                     std::to_string(n) + "," + std::to_string(i) + "," +
                                     std::to_string(j) + "," + std::to_string(k) + ")");
          const std::size_t sa = static_cast<std::size_t>(nr1) * nk1;
          double acc = u[idx] * diag + dt * res.running_cost;
          if (f1p > 0) acc += ca * f1p * u[idx + sa];
          if (f1m > 0) acc += ca * f1m * u[idx - sa];
          if (crr > 0 || f2p > 0) acc += (0.5 * crr + cr * f2p) * u[idx + nk1];
          if (crr > 0 || f2m > 0) acc += (0.5 * crr + cr * f2m) * u[idx - nk1];
          if (ckk > 0 || f3p > 0) acc += (0.5 * ckk + ck * f3p) * u[idx + 1];
          if (ckk > 0 || f3m > 0) acc += (0.5 * ckk + ck * f3m) * u[idx - 1];
          if (!std::isfinite(acc))
            throw std::runtime_error("non-finite cost-to-go at (n,i,j,k)=(" + std::to_string(n) +
                                     "," + std::to_string(i) + "," + std::to_string(j) + "," +
                                     std::to_string(k) + ")");
          u_next[idx] = acc;
          max_abs_u[tid] = std::max(max_abs_u[tid], std::fabs(acc));
          max_abs_h[tid] = std::max(max_abs_h[tid], std::fabs(res.running_cost));
        }
      } catch (...) {
        errors[tid] = std::current_exception();
      }
    });
    for (const auto& err : errors)
      if (err) std::rethrow_exception(err);
    for (int tcnt = 0; tcnt < threads; ++tcnt) clamp_count += clamps[tcnt];

    // discrete maximum principle under CFL
    double prev_max = 0.0;
    for (std::size_t idx = 0; idx < nodes; ++idx) prev_max = std::max(prev_max, std::fabs(u[idx]));
    double new_max = 0.0, h_max = 0.0;
    for (int tcnt = 0; tcnt < threads; ++tcnt) {
      new_max = std::max(new_max, max_abs_u[tcnt]);
      h_max = std::max(h_max, max_abs_h[tcnt]);
    }
    if (new_max > prev_max + dt * h_max + 1e-9 * (1.0 + prev_max))
      throw std::runtime_error("solve_hjb: discrete maximum principle violated at slice " +
                               std::to_string(n - 1));

    u_curr.swap(u_next);
    compute_derivs(u_curr, n - 1);
    if (options.store_values) field.values[n - 1] = u_curr;
  }

  field.slice0 = u_curr;
  field.boundary_drift_clamps = clamp_count.load();
  return field;
}

}  // namespace

CflReport check_cfl(const GridSpec& grid_in, const ScenarioInputs& inputs) {
  GridSpec grid = grid_in;
  grid.horizon = inputs.horizon_hours;
  const double da = grid.da(), dr = grid.dr(), dchi = grid.dchi();

  double battery_term = 0.0;
  for (int i = 0; i <= grid.n_a; ++i) {
    const BatteryLimits lim = battery_limits(da * i, inputs.battery);
    battery_term =
        std::max(battery_term, std::max(lim.charge_cap, lim.discharge_cap) / inputs.model.a_max / da);
  }

  double r_term = 0.0;
  const int scan = 8192;
  for (int s = 0; s <= scan; ++s) {
    const double t = grid.horizon * s / scan;
    const double p = inputs.renewable.forecast.eval(t);
    const double pdot = inputs.renewable.forecast.deriv(t);
    const double theta_t = theta_of_t(t, inputs.renewable);
    for (int j = 0; j <= grid.n_r; ++j) {
      const double r = dr * j;
      const double g2 = inputs.renewable.alpha * inputs.renewable.theta0 * r * (1.0 - r);
      const double f2 = std::fabs(pdot - theta_t * (r - p));
      r_term = std::max(r_term, 2.0 * g2 / (dr * dr) + f2 / dr);
    }
  }

  double chi_term = 0.0;
  const double span = inputs.fading.scale_span();
  for (int k = 0; k <= grid.n_chi; ++k) {
    const double chi = dchi * k;
    const double f3 = std::fabs(-inputs.fading.theta * (chi - inputs.fading.mu / span));
    const double g3 = k == grid.n_chi ? 0.0 : inputs.fading.theta * chi / span;
    chi_term = std::max(chi_term, 2.0 * g3 / (dchi * dchi) + f3 / dchi);
  }

  const double max_sum = battery_term + r_term + chi_term;
  CflReport rep;
  rep.min_nt = std::max(1, static_cast<int>(std::ceil(grid.horizon * max_sum - 1e-12)));
  if (grid.n_t > 0) {
    rep.max_lhs = grid.horizon / grid.n_t * max_sum;
    rep.ok = rep.max_lhs <= 1.0 + 1e-12;
  } else {
    rep.max_lhs = 0.0;
    rep.ok = true;
  }
  return rep;
}

CostToGoField solve_hjb(const MultiplierFunction& multiplier, const GridSpec& grid,
                        const ScenarioInputs& inputs, const SolveOptions& options) {
  return solve_internal(multiplier, grid, inputs, options, false);
}

CostToGoField solve_hjb_as_constrained(const GridSpec& grid, const ScenarioInputs& inputs,
                                       const SolveOptions& options) {
  return solve_internal(MultiplierFunction::zero(inputs.horizon_hours), grid, inputs, options,
                        true);
}

namespace {

struct NodeWeights {
  int i0, j0, k0;
  double wa, wr, wk;
};

NodeWeights locate(const GridSpec& grid, const StateVector& x) {
  const auto place = [](double v, int n) {
    const double pos = std::clamp(v, 0.0, 1.0) * n;
    int lo = static_cast<int>(pos);
    if (lo >= n) lo = n - 1;
    return std::pair<int, double>(lo, pos - lo);
  };
  const auto [i0, wa] = place(x.a, grid.n_a);
  const auto [j0, wr] = place(x.r, grid.n_r);
  const auto [k0, wk] = place(x.chi, grid.n_chi);
  return {i0, j0, k0, wa, wr, wk};
}

double trilinear(const GridSpec& grid, const std::vector<double>& slice, const NodeWeights& w) {
  double acc = 0.0;
  for (int di = 0; di < 2; ++di)
    for (int dj = 0; dj < 2; ++dj)
      for (int dk = 0; dk < 2; ++dk) {
        const double weight = (di ? w.wa : 1 - w.wa) * (dj ? w.wr : 1 - w.wr) *
                              (dk ? w.wk : 1 - w.wk);
        if (weight == 0.0) continue;
        acc += weight * slice[grid.node_index(w.i0 + di, w.j0 + dj, w.k0 + dk)];
      }
  return acc;
}

void check_domain(const CostToGoField& field, double t, const StateVector& x) {
  const double tol = 1e-9;
  if (t < -tol || t > field.grid.horizon + tol)
    throw std::out_of_range("interpolate: time outside [0,T]");
  if (x.a < -tol || x.a > 1 + tol || x.r < -tol || x.r > 1 + tol || x.chi < -tol ||
      x.chi > 1 + tol)
    throw std::out_of_range("interpolate: state outside the unit cube");
}

}  // namespace

double interpolate_value(const CostToGoField& field, double t, const StateVector& x) {
  check_domain(field, t, x);
  if (!field.has_values() && t > 1e-12)
    throw std::runtime_error("interpolate_value: field stored without full values");
  const NodeWeights w = locate(field.grid, x);
  if (t <= 1e-12 && !field.slice0.empty() && !field.has_values())
    return trilinear(field.grid, field.slice0, w);
  const double pos = std::clamp(t, 0.0, field.grid.horizon) / field.grid.dt();
  int n0 = static_cast<int>(pos);
  if (n0 >= field.grid.n_t) n0 = field.grid.n_t - 1;
  const double wt = pos - n0;
  const double v0 = trilinear(field.grid, field.values[n0], w);
  const double v1 = trilinear(field.grid, field.values[n0 + 1], w);
  return (1.0 - wt) * v0 + wt * v1;
}

BatteryDerivs interpolate_battery_derivs(const CostToGoField& field, double t,
                                         const StateVector& x) {
  check_domain(field, t, x);
  const NodeWeights w = locate(field.grid, x);
  const double pos = std::clamp(t, 0.0, field.grid.horizon) / field.grid.dt();
  int n0 = static_cast<int>(pos);
  if (n0 >= field.grid.n_t) n0 = field.grid.n_t - 1;
  const double wt = pos - n0;
  BatteryDerivs out;
  out.d_plus = (1.0 - wt) * trilinear(field.grid, field.d_plus[n0], w) +
               wt * trilinear(field.grid, field.d_plus[n0 + 1], w);
  out.d_minus = (1.0 - wt) * trilinear(field.grid, field.d_minus[n0], w) +
                wt * trilinear(field.grid, field.d_minus[n0 + 1], w);
  return out;
}

DualValue dual_value(const CostToGoField& field, double a0, const ScenarioInputs& inputs,
                     std::size_t n_init_samples, uint64_t seed) {
  if (n_init_samples == 0) throw std::invalid_argument("dual_value: need at least one sample");
  std::vector<double> vals(n_init_samples);
  for (std::size_t s = 0; s < n_init_samples; ++s) {
    const StateVector x0 = sample_initial_state(a0, seed, s, inputs);
    const NodeWeights w = locate(field.grid, x0);
    vals[s] = trilinear(field.grid, field.slice0, w);
  }
  const MeanStderr ms = mean_stderr(vals);
  return {ms.mean, ms.stderr_};
}

HamiltonianResult field_policy(const CostToGoField& field, double t, const StateVector& x,
                               const ScenarioInputs& inputs) {
  const BatteryDerivs d = interpolate_battery_derivs(field, t, x);
  CellContext ctx = make_cell_context(t, x, field.as_constrained ? 0.0 : field.multiplier.eval(t),
                                      inputs);
  return field.as_constrained ? hamiltonian_minimize_as(ctx, d.d_plus, d.d_minus)
                              : hamiltonian_minimize_ctx(ctx, d.d_plus, d.d_minus);
}

void export_field_csv(const CostToGoField& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_field_csv: cannot open " + path);
  out.precision(17);
  out << "# n_t=" << field.grid.n_t << " n_a=" << field.grid.n_a << " n_r=" << field.grid.n_r
      << " n_chi=" << field.grid.n_chi << " chi_bar=" << field.grid.chi_bar
      << " T=" << field.grid.horizon << "\n";
  out << "n,i,j,k,value,d_plus,d_minus\n";
  const bool have_vals = field.has_values();
  for (int n = 0; n <= field.grid.n_t; ++n)
    for (int i = 0; i <= field.grid.n_a; ++i)
      for (int j = 0; j <= field.grid.n_r; ++j)
        for (int k = 0; k <= field.grid.n_chi; ++k) {
          const std::size_t idx = field.grid.node_index(i, j, k);
          const double v = have_vals ? field.values[n][idx] : (n == 0 ? field.slice0[idx] : 0.0);
          out << n << "," << i << "," << j << "," << k << "," << v << ","
              << field.d_plus[n][idx] << "," << field.d_minus[n][idx] << "\n";
        }
}

void export_field_binary(const CostToGoField& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("export_field_binary: cannot open " + path);
  // little-endian layout: magic, 4 x int64 dims, chi_bar, T, has_values flag,
  // then values (if any), d_plus, d_minus slices in time order
  const char magic[8] = {'G', 'P', 'F', 'D', '0', '0', '0', '1'};
  out.write(magic, 8);
  const int64_t dims[4] = {field.grid.n_t, field.grid.n_a, field.grid.n_r, field.grid.n_chi};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  const double meta[2] = {field.grid.chi_bar, field.grid.horizon};
  out.write(reinterpret_cast<const char*>(meta), sizeof(meta));
  const int64_t have_vals = field.has_values() ? 1 : 0;
  out.write(reinterpret_cast<const char*>(&have_vals), sizeof(have_vals));
  const auto dump = [&](const std::vector<std::vector<double>>& slices) {
    for (const auto& s : slices)
      out.write(reinterpret_cast<const char*>(s.data()),
                static_cast<std::streamsize>(s.size() * sizeof(double)));
  };
  if (have_vals) dump(field.values);
  dump(field.d_plus);
  dump(field.d_minus);
}

}  // namespace greenprocure
