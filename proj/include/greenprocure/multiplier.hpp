#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace greenprocure {

// Piecewise-constant Lagrange multiplier lambda(t) >= 0 with level-many
// uniform (or caller-supplied) subintervals covering [0, T].
class MultiplierFunction {
 public:
  MultiplierFunction() = default;
  MultiplierFunction(std::vector<double> breakpoints, std::vector<double> amplitudes)
      : breakpoints_(std::move(breakpoints)), amplitudes_(std::move(amplitudes)) {
    if (breakpoints_.size() != amplitudes_.size() + 1 || amplitudes_.empty())
      throw std::invalid_argument("MultiplierFunction: need level+1 breakpoints");
    for (std::size_t i = 1; i < breakpoints_.size(); ++i)
      if (breakpoints_[i] <= breakpoints_[i - 1])
        throw std::invalid_argument("MultiplierFunction: breakpoints must increase");
    for (double a : amplitudes_)
      if (a < 0.0) throw std::invalid_argument("MultiplierFunction: amplitudes must be nonnegative");
  }

  static MultiplierFunction uniform(std::size_t level, double horizon,
                                    const std::vector<double>& amplitudes) {
    if (amplitudes.size() != level) throw std::invalid_argument("MultiplierFunction: size mismatch");
    std::vector<double> bp(level + 1);
    for (std::size_t i = 0; i <= level; ++i)
      bp[i] = horizon * static_cast<double>(i) / static_cast<double>(level);
    return MultiplierFunction(std::move(bp), amplitudes);
  }

  static MultiplierFunction zero(double horizon) { return uniform(1, horizon, {0.0}); }

  std::size_t level() const { return amplitudes_.size(); }
  double horizon() const { return breakpoints_.back(); }
  const std::vector<double>& amplitudes() const { return amplitudes_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  std::size_t interval_of(double t) const {
    if (t <= breakpoints_.front()) return 0;
    if (t >= breakpoints_.back()) return amplitudes_.size() - 1;
    std::size_t lo = 0, hi = amplitudes_.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi + 1) / 2;
      if (breakpoints_[mid] <= t)
        lo = mid;
      else
        hi = mid - 1;
    }
    return lo;
  }

  double eval(double t) const { return amplitudes_[interval_of(t)]; }

  MultiplierFunction with_amplitudes(std::vector<double> amplitudes) const {
    return MultiplierFunction(breakpoints_, std::move(amplitudes));
  }

  double subinterval_length(std::size_t i) const { return breakpoints_[i + 1] - breakpoints_[i]; }

 private:
  std::vector<double> breakpoints_;
  std::vector<double> amplitudes_;
};

// Level doubling with bisected breakpoints; each parent amplitude is copied to
// both children so lambda(t) is pointwise unchanged.
MultiplierFunction refine_multiplier(const MultiplierFunction& current, std::size_t level_cap);

inline MultiplierFunction refine_multiplier(const MultiplierFunction& current) {
  return refine_multiplier(current, static_cast<std::size_t>(-1));
}

}  // namespace greenprocure
