#include "greenprocure/curves.hpp"

#include <algorithm>
#include <cmath>

namespace greenprocure {

namespace {
constexpr double kTwoPi = 6.28318530717958647692;
}

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n != y_.size() || n < 2) throw std::invalid_argument("CubicSpline: need >= 2 nodes");
  for (std::size_t i = 1; i < n; ++i)
    if (x_[i] <= x_[i - 1]) throw std::invalid_argument("CubicSpline: nodes must increase");

  // clamped ends: first derivative pinned to the one-sided secant slope
  const double fp0 = (y_[1] - y_[0]) / (x_[1] - x_[0]);
  const double fpn = (y_[n - 1] - y_[n - 2]) / (x_[n - 1] - x_[n - 2]);

  m_.assign(n, 0.0);
  std::vector<double> diag(n), rhs(n), sub(n), sup(n);
  diag[0] = 2.0 * (x_[1] - x_[0]);
  sup[0] = x_[1] - x_[0];
  rhs[0] = 6.0 * ((y_[1] - y_[0]) / (x_[1] - x_[0]) - fp0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    sub[i] = h0;
    diag[i] = 2.0 * (h0 + h1);
    sup[i] = h1;
    rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
  }
  const double hn = x_[n - 1] - x_[n - 2];
  sub[n - 1] = hn;
  diag[n - 1] = 2.0 * hn;
  rhs[n - 1] = 6.0 * (fpn - (y_[n - 1] - y_[n - 2]) / hn);

  // Thomas solve
  for (std::size_t i = 1; i < n; ++i) {
    const double w = sub[i] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  m_[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) m_[i] = (rhs[i] - sup[i] * m_[i + 1]) / diag[i];
}

std::size_t CubicSpline::interval(double t) const {
  if (t <= x_.front()) return 0;
  if (t >= x_.back()) return x_.size() - 2;
  const auto it = std::upper_bound(x_.begin(), x_.end(), t);
  return static_cast<std::size_t>(it - x_.begin()) - 1;
}

double CubicSpline::eval(double t) const {
  const std::size_t i = interval(t);
  const double h = x_[i + 1] - x_[i];
  const double u = x_[i + 1] - t, v = t - x_[i];
  return (m_[i] * u * u * u + m_[i + 1] * v * v * v) / (6.0 * h) +
         (y_[i] / h - m_[i] * h / 6.0) * u + (y_[i + 1] / h - m_[i + 1] * h / 6.0) * v;
}

double CubicSpline::deriv(double t) const {
  const std::size_t i = interval(t);
  const double h = x_[i + 1] - x_[i];
  const double u = x_[i + 1] - t, v = t - x_[i];
  return (-m_[i] * u * u + m_[i + 1] * v * v) / (2.0 * h) -
         (y_[i] / h - m_[i] * h / 6.0) + (y_[i + 1] / h - m_[i + 1] * h / 6.0);
}

static double cheb_scaled(double t, double t0, double t1) {
  return std::clamp(2.0 * (t - t0) / (t1 - t0) - 1.0, -1.0, 1.0);
}

double ChebPoly::eval(double t) const {
  const double x = cheb_scaled(t, t0, t1);
  double tk2 = 1.0, tk1 = x, acc = 0.0;
  if (!coeffs.empty()) acc += coeffs[0];
  if (coeffs.size() > 1) acc += coeffs[1] * x;
  for (std::size_t k = 2; k < coeffs.size(); ++k) {
    const double tk = 2.0 * x * tk1 - tk2;
    acc += coeffs[k] * tk;
    tk2 = tk1;
    tk1 = tk;
  }
  return acc;
}

double ChebPoly::deriv(double t) const {
  // derivative of T_k via U_{k-1}: T_k' = k U_{k-1}
  const double x = cheb_scaled(t, t0, t1);
  double uk2 = 1.0, uk1 = 2.0 * x, acc = 0.0;
  if (coeffs.size() > 1) acc += coeffs[1] * 1.0;
  if (coeffs.size() > 2) acc += coeffs[2] * 2.0 * uk1;
  for (std::size_t k = 3; k < coeffs.size(); ++k) {
    const double uk = 2.0 * x * uk1 - uk2;
    acc += coeffs[k] * static_cast<double>(k) * uk;
    uk2 = uk1;
    uk1 = uk;
  }
  return acc * 2.0 / (t1 - t0);
}

PolyFitResult fit_chebyshev(const TimeSeries& series, std::size_t degree) {
  series.validate();
  const std::size_t n = series.times.size();
  if (degree + 1 > n) throw std::invalid_argument("fit_chebyshev: degree must be below sample count");
  const std::size_t m = degree + 1;
  const double t0 = series.times.front(), t1 = series.times.back();

  // design matrix in the Chebyshev basis, solved by Householder QR
  std::vector<double> a(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = cheb_scaled(series.times[i], t0, t1);
    double tk2 = 1.0, tk1 = x;
    a[i * m + 0] = 1.0;
    if (m > 1) a[i * m + 1] = x;
    for (std::size_t k = 2; k < m; ++k) {
      const double tk = 2.0 * x * tk1 - tk2;
      a[i * m + k] = tk;
      tk2 = tk1;
      tk1 = tk;
    }
  }
  std::vector<double> b = series.values;
  for (std::size_t col = 0; col < m; ++col) {
    double norm = 0.0;
    for (std::size_t i = col; i < n; ++i) norm += a[i * m + col] * a[i * m + col];
    norm = std::sqrt(norm);
    if (norm < 1e-300) throw std::runtime_error("fit_chebyshev: rank-deficient design matrix");
    double alpha = a[col * m + col] > 0 ? -norm : norm;
    std::vector<double> v(n, 0.0);
    v[col] = a[col * m + col] - alpha;
    for (std::size_t i = col + 1; i < n; ++i) v[i] = a[i * m + col];
    double vtv = 0.0;
    for (std::size_t i = col; i < n; ++i) vtv += v[i] * v[i];
    if (vtv < 1e-300) continue;
    for (std::size_t j = col; j < m; ++j) {
      double dot = 0.0;
      for (std::size_t i = col; i < n; ++i) dot += v[i] * a[i * m + j];
      const double f = 2.0 * dot / vtv;
      for (std::size_t i = col; i < n; ++i) a[i * m + j] -= f * v[i];
    }
    double dotb = 0.0;
    for (std::size_t i = col; i < n; ++i) dotb += v[i] * b[i];
    const double fb = 2.0 * dotb / vtv;
    for (std::size_t i = col; i < n; ++i) b[i] -= fb * v[i];
  }
  std::vector<double> coeffs(m, 0.0);
  for (std::size_t row = m; row-- > 0;) {
    double acc = b[row];
    for (std::size_t j = row + 1; j < m; ++j) acc -= a[row * m + j] * coeffs[j];
    const double d = a[row * m + row];
    if (std::fabs(d) < 1e-300) throw std::runtime_error("fit_chebyshev: rank-deficient system");
    coeffs[row] = acc / d;
  }
  double ss = 0.0;
  for (std::size_t i = m; i < n; ++i) ss += b[i] * b[i];

  PolyFitResult out;
  out.poly.t0 = t0;
  out.poly.t1 = t1;
  out.poly.coeffs = std::move(coeffs);
  out.rms_residual = std::sqrt(ss / static_cast<double>(n));
  return out;
}

Curve Curve::constant(double value) {
  Curve c;
  c.kind_ = Kind::kConstant;
  c.offset_ = value;
  return c;
}

Curve Curve::harmonics(double offset, std::vector<Harmonic> parts) {
  Curve c;
  c.kind_ = Kind::kHarmonics;
  c.offset_ = offset;
  c.parts_ = std::move(parts);
  return c;
}

Curve Curve::spline(std::vector<double> times, std::vector<double> values) {
  Curve c;
  c.kind_ = Kind::kSpline;
  c.spline_ = CubicSpline(std::move(times), std::move(values));
  return c;
}

Curve Curve::polynomial(ChebPoly poly) {
  Curve c;
  c.kind_ = Kind::kPolynomial;
  c.poly_ = std::move(poly);
  return c;
}

double Curve::eval(double t) const {
  switch (kind_) {
    case Kind::kConstant:
      return offset_;
    case Kind::kHarmonics: {
      double acc = offset_;
      for (const auto& h : parts_) acc += h.amplitude * std::sin(kTwoPi * (t - h.phase) / h.period);
      return acc;
    }
    case Kind::kSpline:
      return spline_.eval(t);
    case Kind::kPolynomial:
      return poly_.eval(t);
    case Kind::kEmpty:
      break;
  }
  throw std::logic_error("Curve: evaluating an empty curve");
}

double Curve::deriv(double t) const {
  switch (kind_) {
    case Kind::kConstant:
      return 0.0;
    case Kind::kHarmonics: {
      double acc = 0.0;
      for (const auto& h : parts_)
        acc += h.amplitude * kTwoPi / h.period * std::cos(kTwoPi * (t - h.phase) / h.period);
      return acc;
    }
    case Kind::kSpline:
      return spline_.deriv(t);
    case Kind::kPolynomial:
      return poly_.deriv(t);
    case Kind::kEmpty:
      break;
  }
  throw std::logic_error("Curve: differentiating an empty curve");
}

ForecastCurve build_forecast_curve(const TimeSeries& series) {
  series.validate();
  if (series.times.size() < 2) throw std::invalid_argument("build_forecast_curve: need >= 2 samples");
  ForecastCurve out;
  out.p = Curve::spline(series.times, series.values);
  return out;
}

}  // namespace greenprocure
