#include "greenprocure/dual_opt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "greenprocure/bundle.hpp"
#include "greenprocure/math_util.hpp"

namespace greenprocure {

namespace {

enum : uint64_t { kTagInitSamples = 0xA11CE, kTagSubgradient = 0x5B6D, kTagSsm = 0x55F };

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

struct EvalPoint {
  CostToGoField field;
  double theta = 0.0;
  double theta_stderr = 0.0;
  SubgradientEstimate grad;
  double norm = 0.0;  // normalized stopping norm
  double seconds = 0.0;
};

EvalPoint evaluate_point(const MultiplierFunction& mult, const GridSpec& grid,
                         const SolverSettings& settings, const ScenarioInputs& inputs,
                         uint64_t seed, uint64_t sg_seed) {
  const double t0 = now_seconds();
  EvalPoint ev;
  SolveOptions opts;
  opts.store_values = false;
  ev.field = solve_hjb(mult, grid, inputs, opts);
  const DualValue dv = dual_value(ev.field, inputs.initial_charge, inputs,
                                  static_cast<std::size_t>(settings.n_init_samples),
                                  stream_key(seed, kTagInitSamples));
  ev.theta = dv.theta;
  ev.theta_stderr = dv.stderr_;
  ev.grad = estimate_subgradient(ev.field, mult, settings, sg_seed, inputs);
  ev.norm = ev.grad.normalized_norm(mult);
  ev.seconds = now_seconds() - t0;
  return ev;
}

DualIterate make_record(const EvalPoint& ev, const MultiplierFunction& mult, int level, int iter,
                        const std::string& phase, double tol_target) {
  DualIterate rec;
  rec.level = level;
  rec.iter = iter;
  rec.phase = phase;
  rec.amplitudes = mult.amplitudes();
  rec.dual_value = ev.theta;
  rec.dual_stderr = ev.theta_stderr;
  rec.subgrad_norm = ev.norm;
  rec.seconds = ev.seconds;
  rec.accepted = ev.norm <= tol_target * (1.0 + 1e-9);
  return rec;
}

}  // namespace

double SubgradientEstimate::euclidean_norm() const {
  double acc = 0.0;
  for (double c : components) acc += c * c;
  return std::sqrt(acc);
}

double SubgradientEstimate::normalized_norm(const MultiplierFunction& mult) const {
  // Euclidean norm of the per-subinterval time averages divided by sqrt(level):
  // dimension-free, comparable across refinement levels.
  double acc = 0.0;
  for (std::size_t i = 0; i < components.size(); ++i) {
    const double avg = components[i] / mult.subinterval_length(i);
    acc += avg * avg;
  }
  return std::sqrt(acc / static_cast<double>(components.size()));
}

SubgradientEstimate subgradient_from_ensemble(const PathEnsemble& ensemble,
                                              const MultiplierFunction& multiplier,
                                              int n_quad_per_interval,
                                              const ScenarioInputs& inputs) {
  if (ensemble.controls.empty())
    throw std::invalid_argument("subgradient_from_ensemble: ensemble lacks controls");
  const std::size_t level = multiplier.level();
  const std::size_t n_steps = ensemble.times.size() - 1;
  const double dt = ensemble.times[1] - ensemble.times[0];
  const double eps = inputs.qos.epsilon;

  std::vector<std::vector<double>> per_path(level);
  for (auto& v : per_path) v.reserve(ensemble.path_count());

  std::vector<double> comp(level, 0.0);
  for (std::size_t m = 0; m < ensemble.path_count(); ++m) {
    std::fill(comp.begin(), comp.end(), 0.0);
    for (std::size_t n = 0; n < n_steps; ++n) {  // left-endpoint rule
      const double t = ensemble.times[n];
      const std::size_t i = multiplier.interval_of(t);
      const double xi = inputs.fading.xi_from_chi(ensemble.states[m][n].chi);
      const bool viol = qos_violated(ensemble.controls[m][n].p_tx, xi, inputs.user_dist,
                                     inputs.model, inputs.qos.phi_th);
      comp[i] += ((viol ? 1.0 : 0.0) - eps) * dt;
    }
    for (std::size_t i = 0; i < level; ++i) per_path[i].push_back(comp[i]);
  }

  SubgradientEstimate est;
  est.components.resize(level);
  est.stderr_.resize(level);
  est.m_paths = static_cast<int>(ensemble.path_count());
  est.n_quad = n_quad_per_interval;
  for (std::size_t i = 0; i < level; ++i) {
    const MeanStderr ms = mean_stderr(per_path[i]);
    est.components[i] = ms.mean;
    est.stderr_[i] = ms.stderr_;
    const double span = multiplier.subinterval_length(i);
    if (est.components[i] < -eps * span - 1e-9 ||
        est.components[i] > (1.0 - eps) * span + 1e-9)
      throw std::logic_error("subgradient component outside its bound");
  }
  return est;
}

SubgradientEstimate estimate_subgradient(const CostToGoField& field,
                                         const MultiplierFunction& multiplier,
                                         const SolverSettings& settings, uint64_t seed,
                                         const ScenarioInputs& inputs) {
  const std::size_t level = multiplier.level();
  if (settings.n_bar_t % static_cast<int>(level) != 0)
    throw std::invalid_argument(
        "estimate_subgradient: multiplier level must divide n_bar_t (quadrature uses "
        "n_bar_t/level points per subinterval)");
  const PolicyFn policy = [&](double t, const StateVector& x) {
    return field_policy(field, t, x, inputs).ctrl;
  };
  // quadrature times coincide with the simulation grid when level | n_bar_t
  const PathEnsemble ens =
      simulate_controlled_paths(policy, static_cast<std::size_t>(settings.m_sg),
                                static_cast<std::size_t>(settings.n_bar_t), seed, inputs, true);
  return subgradient_from_ensemble(ens, multiplier, settings.n_bar_t / static_cast<int>(level),
                                   inputs);
}

const DualIterate* DualTrace::best() const {
  const DualIterate* out = nullptr;
  for (const auto& r : records)
    if (!out || r.dual_value > out->dual_value) out = &r;
  return out;
}

double initialize_amplitude(const SolverSettings& settings, const GridSpec& grid,
                            const ScenarioInputs& inputs, uint64_t seed, DualTrace* trace) {
  const double tol_target = settings.tol * inputs.qos.epsilon;
  // relative slack: a violation-free run lands exactly on eps up to roundoff
  const double init_target = settings.tol_init * inputs.qos.epsilon * (1.0 + 1e-9);
  const uint64_t sg_seed = stream_key(seed, kTagSubgradient, 1);
  double ups = 1.0;
  MultiplierFunction mult = MultiplierFunction::uniform(1, inputs.horizon_hours, {ups});
  EvalPoint ev = evaluate_point(mult, grid, settings, inputs, seed, sg_seed);
  int iter = 0;
  if (trace) trace->records.push_back(make_record(ev, mult, 1, iter, "init", tol_target));
  double g = ev.grad.components[0];
  if (std::fabs(ev.norm) <= init_target) return ups;
  const bool increasing = g > 0;
  for (int step = 0; step < settings.init_max_steps; ++step) {
    ups = increasing ? ups * settings.beta_f : ups / settings.beta_f;
    mult = MultiplierFunction::uniform(1, inputs.horizon_hours, {ups});
    ev = evaluate_point(mult, grid, settings, inputs, seed, sg_seed);
    ++iter;
    if (trace) trace->records.push_back(make_record(ev, mult, 1, iter, "init", tol_target));
    const double g_new = ev.grad.components[0];
    if (std::fabs(ev.norm) <= init_target) return ups;
    if ((g_new > 0) != increasing) return ups;  // sign change: stop at the final amplitude
    g = g_new;
  }
  throw std::runtime_error(
      "initialize_amplitude: geometric search did not terminate; the optimal multiplier is "
      "O(1/epsilon) -- consider starting the search at that scale");
}

double bundle_polish(double start, const SolverSettings& settings, const GridSpec& grid,
                     const ScenarioInputs& inputs, uint64_t seed, DualTrace* trace) {
  if (start <= 0) throw std::invalid_argument("bundle_polish: start must be positive");
  const double tol_target = settings.tol * inputs.qos.epsilon;
  const uint64_t sg_seed = stream_key(seed, kTagSubgradient, 1);
  int iter = 0;
  const auto oracle = [&](double x) {
    const MultiplierFunction mult =
        MultiplierFunction::uniform(1, inputs.horizon_hours, {std::max(0.0, x)});
    const EvalPoint ev = evaluate_point(mult, grid, settings, inputs, seed, sg_seed);
    if (trace) trace->records.push_back(make_record(ev, mult, 1, iter++, "lmbm", tol_target));
    return BundleEval{ev.theta, ev.grad.components[0]};
  };
  Bundle1DSettings bs;
  bs.max_iter = settings.n_lmbm_iter;
  const BundleResult res = bundle_maximize_1d(oracle, start, 0.0, bs);
  return res.best_x;
}

SsmResult ssm_optimize(const std::vector<double>& start, const MultiplierFunction& shape,
                       const SolverSettings& settings, const GridSpec& grid,
                       const ScenarioInputs& inputs, uint64_t seed, DualTrace* trace) {
  for (double v : start)
    if (v < 0) throw std::invalid_argument("ssm_optimize: start amplitudes must be nonnegative");
  const int level = static_cast<int>(shape.level());
  const double tol_target = settings.tol * inputs.qos.epsilon;
  // common random numbers: one subgradient seed per refinement level
  const uint64_t sg_seed = stream_key(seed, kTagSubgradient, static_cast<uint64_t>(level));

  double start_norm = 0.0;
  for (double v : start) start_norm += v * v;
  const double c_ssm =
      settings.c_ssm > 0 ? settings.c_ssm : 0.05 * (std::sqrt(start_norm) + 1.0);

  SsmResult res;
  std::vector<double> ups = start;
  bool have_best = false;
  for (int k = 0;; ++k) {
    const MultiplierFunction mult = shape.with_amplitudes(ups);
    EvalPoint ev = evaluate_point(mult, grid, settings, inputs, seed, sg_seed);
    if (trace) trace->records.push_back(make_record(ev, mult, level, k, "ssm", tol_target));
    if (!have_best || ev.theta > res.best_value) {
      res.best_value = ev.theta;
      res.best_stderr = ev.theta_stderr;
      res.best_amplitudes = ups;
      res.best_field = std::move(ev.field);
      have_best = true;
    }
    res.final_norm = ev.norm;
    if (ev.norm <= tol_target * (1.0 + 1e-9)) {
      res.accepted = true;
      break;
    }
    if (k >= settings.max_iter) break;
    const double gnorm = ev.grad.euclidean_norm();
    if (gnorm < 1e-14) break;  // no usable ascent direction
    const double step = k <= settings.n_bar_iter ? c_ssm : c_ssm / static_cast<double>(k + 1);
    for (int i = 0; i < level; ++i)
      ups[i] = std::max(0.0, ups[i] + step * ev.grad.components[i] / gnorm);
  }
  return res;
}

DualOutcome optimize_dual(const SolverSettings& settings, const GridSpec& grid,
                          const ScenarioInputs& inputs, uint64_t seed) {
  inputs.validate();
  DualOutcome out;
  const double ups_init = initialize_amplitude(settings, grid, inputs, seed, &out.trace);
  const double ups_polished = bundle_polish(ups_init, settings, grid, inputs, seed, &out.trace);
  MultiplierFunction mult =
      MultiplierFunction::uniform(1, inputs.horizon_hours, {ups_polished});

  const std::size_t level_cap =
      static_cast<std::size_t>(std::min(settings.ell_max, settings.n_bar_t));
  SsmResult last;
  bool ran_ssm = false;
  while (2 * mult.level() <= level_cap) {
    mult = refine_multiplier(mult, level_cap);
    last = ssm_optimize(mult.amplitudes(), mult, settings, grid, inputs, seed, &out.trace);
    mult = mult.with_amplitudes(last.best_amplitudes);
    ran_ssm = true;
    if (last.accepted) break;
  }

  if (!ran_ssm) {
    // degenerate cap: evaluate the level-1 multiplier once
    last = ssm_optimize(mult.amplitudes(), mult, settings, grid, inputs, seed, &out.trace);
    mult = mult.with_amplitudes(last.best_amplitudes);
  }

  out.field = std::move(last.best_field);
  out.multiplier = mult;
  out.dual_value = last.best_value;
  out.dual_stderr = last.best_stderr;
  out.final_norm = last.final_norm;
  out.tolerance_reached = last.accepted;
  out.final_level = static_cast<int>(mult.level());
  return out;
}

}  // namespace greenprocure
