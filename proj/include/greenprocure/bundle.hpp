#pragma once

#include <functional>

namespace greenprocure {

// Settings mirror the cited limited-memory bundle routine's parameter
// semantics: function-change tolerance, termination tolerance, distance
// measure, line-search descent parameter, maximum step, iteration/evaluation
// caps, and the flat-iteration stop.
struct Bundle1DSettings {
  double f_change_tol = 0.1;
  double term_tol = 1e-2;
  double distance_measure = 0.5;
  double line_search = 0.2;
  double max_step = 10.0;
  int max_iter = 50;
  int max_evals = 100;
  int max_flat_iters = 5;
};

struct BundleEval {
  double f = 0.0;  // objective (maximized)
  double g = 0.0;  // a subgradient
};

struct BundleResult {
  double best_x = 0.0;
  double best_f = 0.0;
  int iterations = 0;
  int evaluations = 0;
};

// Proximal-bundle maximization of a concave (possibly noisy) 1-D function on
// [x_min, inf). Returns the best-seen point, never worse than the start's
// recorded value.
BundleResult bundle_maximize_1d(const std::function<BundleEval(double)>& oracle, double x0,
                                double x_min, const Bundle1DSettings& settings);

}  // namespace greenprocure
