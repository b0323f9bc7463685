#include "greenprocure/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace greenprocure {

namespace {

struct Plane {
  double x, f, g;
  double at(double xq) const { return f + g * (xq - x); }
};

double model_value(const std::vector<Plane>& bundle, double x) {
  double v = bundle.front().at(x);
  for (const auto& p : bundle) v = std::min(v, p.at(x));
  return v;
}

// maximize model(x) - 0.5*u*(x-center)^2 over [lo, hi]; concave, ternary search
double prox_candidate(const std::vector<Plane>& bundle, double center, double u, double lo,
                      double hi) {
  const auto obj = [&](double x) {
    return model_value(bundle, x) - 0.5 * u * (x - center) * (x - center);
  };
  double a = lo, b = hi;
  for (int it = 0; it < 120; ++it) {
    const double m1 = a + (b - a) / 3.0;
    const double m2 = b - (b - a) / 3.0;
    if (obj(m1) < obj(m2))
      a = m1;
    else
      b = m2;
  }
  return 0.5 * (a + b);
}

}  // namespace

BundleResult bundle_maximize_1d(const std::function<BundleEval(double)>& oracle, double x0,
                                double x_min, const Bundle1DSettings& settings) {
  BundleResult res;
  double center = std::max(x0, x_min);
  BundleEval fc = oracle(center);
  ++res.evaluations;
  std::vector<Plane> bundle{{center, fc.f, fc.g}};
  res.best_x = center;
  res.best_f = fc.f;

  // prox weight scaled so the first step stays within max_step
  double u = std::max(std::fabs(fc.g) / settings.max_step, 1e-8);
  int flat_count = 0;

  for (int it = 0; it < settings.max_iter && res.evaluations < settings.max_evals; ++it) {
    ++res.iterations;
    const double lo = std::max(x_min, center - settings.max_step);
    const double hi = center + settings.max_step;
    const double cand = prox_candidate(bundle, center, u, lo, hi);
    const double predicted = model_value(bundle, cand) - fc.f;
    if (predicted <= settings.term_tol && it > 0) break;

    const BundleEval fe = oracle(cand);
    ++res.evaluations;
    bundle.push_back({cand, fe.f, fe.g});
    if (bundle.size() > 30) bundle.erase(bundle.begin());

    if (fe.f > res.best_f) {
      res.best_f = fe.f;
      res.best_x = cand;
    }
    const double gain = fe.f - fc.f;
    if (gain >= settings.line_search * std::max(predicted, 0.0)) {
      // serious step
      if (std::fabs(gain) < settings.f_change_tol) {
        if (++flat_count >= settings.max_flat_iters) {
          center = cand;
          fc = fe;
          break;
        }
      } else {
        flat_count = 0;
      }
      center = cand;
      fc = fe;
      u = std::max(u * settings.distance_measure, 1e-8);
    } else {
      // null step: keep the center, tighten the prox
      u *= 2.0;
    }
  }
  return res;
}

}  // namespace greenprocure
