#include "greenprocure/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace greenprocure {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInvGolden = 0.61803398874989484820;

struct InnerSolution {
  double value = 0.0;
  double p_f = 0.0;
  double p_s = 0.0;
};

// minimize a2*Pf^2 + a1*Pf + b1*Ps  over  Pf in [0,D], Ps >= 0, Pf-Ps in [L,U]
InnerSolution inner_solve(double a1, double a2, double b1, double L, double U, double D) {
  double lo = std::max(0.0, L);
  if (lo > D) lo = D;  // roundoff guard; the set is nonempty by construction

  const auto eval_at = [&](double pf, InnerSolution& out) {
    const double y = b1 < 0.0 ? L : std::min(U, pf);
    const double ps = std::max(0.0, pf - y);
    const double val = a2 * pf * pf + a1 * pf + b1 * ps;
    if (val < out.value) out = {val, pf, ps};
  };

  InnerSolution best;
  best.value = std::numeric_limits<double>::infinity();
  eval_at(lo, best);
  eval_at(D, best);
  const double kink = std::clamp(U, lo, D);
  eval_at(kink, best);
  if (a2 > 0.0) {
    eval_at(std::clamp(-a1 / (2.0 * a2), lo, D), best);
    eval_at(std::clamp(-(a1 + b1) / (2.0 * a2), lo, D), best);
  }
  return best;
}

struct BranchSpec {
  bool charging = false;   // F1 >= 0 branch (uses d_plus) vs F1 <= 0 (uses d_minus)
  bool violating = false;  // H2 branch: phi_out above threshold, pays lambda
  double tx_lo = 0.0, tx_hi = 0.0;
};

struct BranchOutcome {
  ControlVector ctrl;
  double objective = std::numeric_limits<double>::infinity();
  bool valid = false;
};

double revenue_term(const CellContext& ctx, double p_tx) {
  // -w*K_net*N_u*(1 - phi_out(p_tx)) including the constant
  const double w = ctx.inputs->model.w;
  const double ptx_pow = ctx.uni_exp == 1.0 ? p_tx : std::pow(p_tx, ctx.uni_exp);
  if (ctx.gaussian_users)
    return w * ctx.knet * ctx.n_u * std::exp(-ctx.rev_c3 * ptx_pow) - w * ctx.knet * ctx.n_u;
  const double served = std::min(1.0, ctx.uni_u0 * ptx_pow);
  return -w * ctx.knet * ctx.n_u * served;
}

BranchOutcome solve_branch(const CellContext& ctx, const BranchSpec& spec, double d_plus,
                           double d_minus) {
  BranchOutcome out;
  if (spec.tx_lo > spec.tx_hi) return out;
  const ModelParams& mp = ctx.inputs->model;
  const double d = spec.charging ? d_plus : d_minus;
  const double a1 = d / mp.a_max + mp.w * ctx.kb + (1.0 - mp.w) * mp.c1_emission;
  const double a2 = (1.0 - mp.w) * mp.c2_emission;
  const double b1 = -d / mp.a_max - mp.w * ctx.ks;
  const double c1 = -(d / mp.a_max) * ctx.d1;

  const auto window = [&](double p_tx, double& L, double& U, double& D) {
    const double base = -ctx.m + ctx.d1 * p_tx;
    if (spec.charging) {
      L = base;
      U = base + ctx.cap_charge;
    } else {
      L = base - ctx.cap_discharge;
      U = base;
    }
    D = ctx.d1 * p_tx + mp.c_offset;
  };

  const auto value_of = [&](double p_tx) {
    double L, U, D;
    window(p_tx, L, U, D);
    return inner_solve(a1, a2, b1, L, U, D).value + c1 * p_tx + revenue_term(ctx, p_tx);
  };

  double lo = spec.tx_lo, hi = spec.tx_hi;
  double best_x = lo;
  if (hi > lo) {
    const double span = hi - lo;
    const bool convex_rev = ctx.uni_exp <= 1.0 + 1e-12;
    if (!convex_rev) {
      // path-loss exponent below 2: pre-scan, then polish the best bracket
      const int scan = 128;
      double best_v = std::numeric_limits<double>::infinity();
      int best_i = 0;
      for (int i = 0; i <= scan; ++i) {
        const double x = spec.tx_lo + span * i / scan;
        const double v = value_of(x);
        if (v < best_v) {
          best_v = v;
          best_i = i;
        }
      }
      lo = spec.tx_lo + span * std::max(0, best_i - 1) / scan;
      hi = spec.tx_lo + span * std::min(scan, best_i + 1) / scan;
    }
    double x1 = hi - kInvGolden * (hi - lo);
    double x2 = lo + kInvGolden * (hi - lo);
    double f1 = value_of(x1), f2 = value_of(x2);
    for (int it = 0; it < 36; ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - kInvGolden * (hi - lo);
        f1 = value_of(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + kInvGolden * (hi - lo);
        f2 = value_of(x2);
      }
    }
    best_x = f1 < f2 ? x1 : x2;
    double best_v = std::min(f1, f2);
    for (const double cand : {spec.tx_lo, spec.tx_hi}) {
      const double v = value_of(cand);
      if (v < best_v) {
        best_v = v;
        best_x = cand;
      }
    }
  }

  double L, U, D;
  window(best_x, L, U, D);
  const InnerSolution inner = inner_solve(a1, a2, b1, L, U, D);
  out.ctrl.p_tx = best_x;
  out.ctrl.p_f = inner.p_f;
  out.ctrl.p_s = inner.p_s;
  out.ctrl.p_a = std::max(0.0, D - inner.p_f);
  out.valid = true;
  return out;
}

double objective_with_indicator(const CellContext& ctx, const ControlVector& ctrl, double d_plus,
                                double d_minus, bool violated) {
  const ModelParams& mp = ctx.inputs->model;
  const double f1 = (ctx.m + ctrl.p_f - ctrl.p_s - ctx.d1 * ctrl.p_tx) / mp.a_max;
  const double psi = f1 >= 0.0 ? d_plus * f1 : d_minus * f1;
  const double phi_out = outage_proportion(ctrl.p_tx, ctx.xi, ctx.inputs->user_dist, mp);
  const double running =
      mp.w * (ctx.kb * ctrl.p_f - ctx.ks * ctrl.p_s - ctx.knet * ctx.n_u * (1.0 - phi_out)) +
      (1.0 - mp.w) * (mp.c1_emission * ctrl.p_f + mp.c2_emission * ctrl.p_f * ctrl.p_f) +
      ctx.lambda * ((violated ? 1.0 : 0.0) - ctx.inputs->qos.epsilon);
  return psi + running;
}

HamiltonianResult finalize(const CellContext& ctx, const ControlVector& ctrl, double d_plus,
                           double d_minus, bool violated) {
  const ModelParams& mp = ctx.inputs->model;
  HamiltonianResult res;
  res.ctrl = ctrl;
  res.qos_violated = violated;
  res.f1 = (ctx.m + ctrl.p_f - ctrl.p_s - ctx.d1 * ctrl.p_tx) / mp.a_max;
  res.value = objective_with_indicator(ctx, ctrl, d_plus, d_minus, violated);
  const double psi = res.f1 >= 0.0 ? d_plus * res.f1 : d_minus * res.f1;
  res.running_cost = res.value - psi;
  return res;
}

}  // namespace

CellContext make_cell_context(double t, const StateVector& x, double lambda_val,
                              const ScenarioInputs& inputs) {
  CellContext ctx;
  ctx.t = t;
  ctx.x = x;
  ctx.lambda = lambda_val;
  ctx.inputs = &inputs;
  ctx.n_u = traffic_count(t, inputs.traffic);
  ctx.d1 = inputs.model.c_scal * ctx.n_u;
  ctx.d3 = inputs.model.p_tx_max / ctx.n_u;
  ctx.m = x.r * inputs.model.p_r_max - inputs.model.c_offset;
  const BatteryLimits lim = battery_limits(x.a, inputs.battery);
  ctx.cap_charge = lim.charge_cap;
  ctx.cap_discharge = lim.discharge_cap;
  ctx.kb = inputs.prices.k_b.eval(t);
  ctx.ks = inputs.prices.k_s.eval(t);
  ctx.knet = inputs.prices.k_net.eval(t);
  ctx.xi = inputs.fading.xi_from_chi(x.chi);
  ctx.d5 = qos_transmit_threshold(ctx.xi, inputs.user_dist, inputs.model, inputs.qos.phi_th);
  ctx.uni_exp = 2.0 / inputs.model.eta;
  const double cov = ctx.xi * inputs.model.kappa / inputs.model.noise_scale();
  if (std::holds_alternative<GaussianUsers>(inputs.user_dist)) {
    ctx.gaussian_users = true;
    const double su = std::get<GaussianUsers>(inputs.user_dist).sigma_u;
    ctx.rev_c3 = std::pow(cov, ctx.uni_exp) / (2.0 * su * su);
    ctx.rev_c2 = inputs.model.w * ctx.knet * ctx.n_u;
  } else {
    ctx.gaussian_users = false;
    const double area = std::get<UniformUsers>(inputs.user_dist).area;
    ctx.uni_u0 = kPi / area * std::pow(cov, ctx.uni_exp);
  }
  return ctx;
}

HamiltonianResult hamiltonian_minimize_ctx(const CellContext& ctx, double d_plus, double d_minus) {
  HamiltonianResult best;
  best.value = std::numeric_limits<double>::infinity();
  bool have = false;

  const auto consider = [&](const BranchSpec& spec) {
    const BranchOutcome out = solve_branch(ctx, spec, d_plus, d_minus);
    if (!out.valid) return;
    const HamiltonianResult cand = finalize(ctx, out.ctrl, d_plus, d_minus, spec.violating);
    const double tie = 1e-12 * (1.0 + std::fabs(cand.value));
    if (!have || cand.value < best.value - tie ||
        (std::fabs(cand.value - best.value) <= tie && best.qos_violated && !cand.qos_violated)) {
      best = cand;
      have = true;
    }
  };

  // H1: QoS satisfied (p_tx >= d5), no multiplier charge
  if (ctx.d5 <= ctx.d3) {
    consider({true, false, ctx.d5, ctx.d3});
    consider({false, false, ctx.d5, ctx.d3});
  }
  // H2: violation branch (p_tx <= d5), pays lambda
  const double hi2 = std::min(ctx.d5, ctx.d3);
  consider({true, true, 0.0, hi2});
  consider({false, true, 0.0, hi2});

  if (!have) throw std::logic_error("hamiltonian_minimize: empty admissible set (cell)");
  return best;
}

HamiltonianResult hamiltonian_minimize(double t, const StateVector& x, double d_plus,
                                       double d_minus, double lambda_val,
                                       const ScenarioInputs& inputs) {
  const CellContext ctx = make_cell_context(t, x, lambda_val, inputs);
  return hamiltonian_minimize_ctx(ctx, d_plus, d_minus);
}

HamiltonianResult hamiltonian_minimize_as(const CellContext& ctx, double d_plus, double d_minus) {
  if (ctx.d5 > ctx.d3 * (1.0 + 1e-12))
    throw InfeasibleAsConstraint(ctx.t, ctx.x.chi, ctx.d5, ctx.d3);
  const double p_tx = std::min(ctx.d5, ctx.d3);
  HamiltonianResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (const bool charging : {true, false}) {
    const BranchSpec spec{charging, false, p_tx, p_tx};
    const BranchOutcome out = solve_branch(ctx, spec, d_plus, d_minus);
    if (!out.valid) continue;
    const HamiltonianResult cand = finalize(ctx, out.ctrl, d_plus, d_minus, false);
    if (cand.value < best.value) best = cand;
  }
  return best;
}

double hamiltonian_objective(const CellContext& ctx, const ControlVector& ctrl, double d_plus,
                             double d_minus) {
  const double phi_out =
      outage_proportion(ctrl.p_tx, ctx.xi, ctx.inputs->user_dist, ctx.inputs->model);
  return objective_with_indicator(ctx, ctrl, d_plus, d_minus, phi_out >= ctx.inputs->qos.phi_th);
}

HamiltonianResult hamiltonian_oracle(double t, const StateVector& x, double d_plus, double d_minus,
                                     double lambda_val, const ScenarioInputs& inputs,
                                     int resolution) {
  if (resolution < 2) throw std::invalid_argument("hamiltonian_oracle: resolution >= 2");
  const CellContext ctx = make_cell_context(t, x, lambda_val, inputs);
  const double s_abs = x.r * inputs.model.p_r_max + ctx.cap_discharge;

  HamiltonianResult best;
  best.value = std::numeric_limits<double>::infinity();
  const double nres = static_cast<double>(resolution - 1);
  for (int it = 0; it < resolution; ++it) {
    const double p_tx = ctx.d3 * it / nres;
    const double d_cons = ctx.d1 * p_tx + inputs.model.c_offset;
    const double s_top = -ctx.m + ctx.cap_charge + ctx.d1 * p_tx;     // upper bound on Pf - Ps
    const double s_bot = -ctx.m - ctx.cap_discharge + ctx.d1 * p_tx;  // lower bound on Pf - Ps
    for (int jf = 0; jf < resolution; ++jf) {
      const double p_f = d_cons * jf / nres;
      const double ps_lo = std::max(0.0, p_f - s_top);
      const double ps_hi = p_f - s_bot;
      if (ps_hi < ps_lo) continue;
      for (int ks = 0; ks < resolution; ++ks) {
        double p_s = s_abs * ks / nres;
        p_s = std::clamp(p_s, ps_lo, ps_hi);
        ControlVector ctrl;
        ctrl.p_tx = p_tx;
        ctrl.p_f = p_f;
        ctrl.p_s = p_s;
        ctrl.p_a = std::max(0.0, d_cons - p_f);
        const double val = hamiltonian_objective(ctx, ctrl, d_plus, d_minus);
        if (val < best.value) {
          const double phi_out = outage_proportion(p_tx, ctx.xi, inputs.user_dist, inputs.model);
          best.ctrl = ctrl;
          best.value = val;
          best.qos_violated = phi_out >= inputs.qos.phi_th;
          best.f1 = (ctx.m + p_f - p_s - ctx.d1 * p_tx) / inputs.model.a_max;
          best.running_cost = val - (best.f1 >= 0 ? d_plus * best.f1 : d_minus * best.f1);
        }
      }
    }
  }
  return best;
}

}  // namespace greenprocure
