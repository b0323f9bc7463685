#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace greenprocure {

// Uniformly sampled or irregular time series, times in hours.
struct TimeSeries {
  std::vector<double> times;
  std::vector<double> values;
  std::string meta;

  void validate() const {
    if (times.size() != values.size()) throw std::invalid_argument("TimeSeries: size mismatch");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (times[i] <= times[i - 1]) throw std::invalid_argument("TimeSeries: times must be strictly increasing");
  }
};

// Clamped cubic spline interpolant with analytic derivative.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> y);

  double eval(double t) const;
  double deriv(double t) const;
  const std::vector<double>& nodes_x() const { return x_; }
  const std::vector<double>& nodes_y() const { return y_; }

 private:
  std::size_t interval(double t) const;
  std::vector<double> x_, y_, m_;  // m_ = second derivatives at nodes
};

// Polynomial in the Chebyshev basis on [t0, t1].
struct ChebPoly {
  double t0 = 0.0, t1 = 1.0;
  std::vector<double> coeffs;  // c0 + c1 T1 + c2 T2 + ...

  double eval(double t) const;
  double deriv(double t) const;
};

// Least-squares Chebyshev polynomial fit; returns the fit and its RMS residual.
struct PolyFitResult {
  ChebPoly poly;
  double rms_residual = 0.0;
};
PolyFitResult fit_chebyshev(const TimeSeries& series, std::size_t degree);

// Scalar curve of time: tagged union over the few shapes the scenarios need.
// Serializable to/from JSON (see scenario.cpp).
class Curve {
 public:
  struct Harmonic {
    double amplitude = 0.0;
    double period = 24.0;
    double phase = 0.0;  // hours
  };

  Curve() = default;
  static Curve constant(double value);
  // offset + sum_i amp_i * sin(2*pi*(t - phase_i)/period_i)
  static Curve harmonics(double offset, std::vector<Harmonic> parts);
  static Curve spline(std::vector<double> times, std::vector<double> values);
  static Curve polynomial(ChebPoly poly);

  double eval(double t) const;
  double deriv(double t) const;
  bool valid() const { return kind_ != Kind::kEmpty; }

  enum class Kind { kEmpty, kConstant, kHarmonics, kSpline, kPolynomial };
  Kind kind() const { return kind_; }
  double constant_value() const { return offset_; }
  double offset() const { return offset_; }
  const std::vector<Harmonic>& harmonic_parts() const { return parts_; }
  const CubicSpline& spline_data() const { return spline_; }
  const ChebPoly& poly_data() const { return poly_; }

 private:
  Kind kind_ = Kind::kEmpty;
  double offset_ = 0.0;
  std::vector<Harmonic> parts_;
  CubicSpline spline_;
  ChebPoly poly_;
};

// Smooth forecast interpolant: p in [0,1] (post-clamped) and p_dot its
// spline derivative.
struct ForecastCurve {
  Curve p;
  double eval(double t) const {
    const double v = p.eval(t);
    return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  }
  double deriv(double t) const { return p.deriv(t); }
};

// p(t) as a clamped cubic spline with values post-clamped to [0,1]; p_dot is
// the spline derivative.
ForecastCurve build_forecast_curve(const TimeSeries& series);

}  // namespace greenprocure
