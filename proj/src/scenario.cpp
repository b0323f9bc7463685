#include "greenprocure/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "greenprocure/math_util.hpp"
#include "greenprocure/rng.hpp"
#include "json.hpp"

namespace greenprocure {

namespace {

using nlohmann::json;

// ISO-8601 timestamp to hours since epoch-of-file; only the ordering and
// spacing matter, so days/hours/minutes/seconds are enough.
double parse_timestamp_hours(const std::string& ts, int line_no) {
  int y, mo, d, h = 0, mi = 0;
  double s = 0.0;
  char sep;
  std::istringstream in(ts);
  in >> y >> sep >> mo >> sep >> d;
  if (!in) throw std::runtime_error("line " + std::to_string(line_no) + ": bad timestamp '" + ts + "'");
  if (in.peek() == 'T' || in.peek() == ' ') {
    in.get();
    in >> h >> sep >> mi;
    if (in.peek() == ':') {
      in.get();
      in >> s;
    }
  }
  // days since a fixed epoch via civil-date arithmetic (Howard Hinnant's algorithm)
  const int yy = y - (mo <= 2);
  const int era = (yy >= 0 ? yy : yy - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(yy - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(mo + (mo > 2 ? -3 : 9)) + 2u) / 5u +
                       static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  const long days = era * 146097L + static_cast<long>(doe) - 719468L;
  return static_cast<double>(days) * 24.0 + h + mi / 60.0 + s / 3600.0;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  return out;
}

double to_double(const std::string& s, int line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    return v;
  } catch (...) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

}  // namespace

WindData parse_wind_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_wind_csv: cannot open " + path);
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  bool has_capacity = false;
  WindData out;
  std::vector<double> raw_t, raw_f, raw_p, raw_c;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      const auto cols = split_csv_line(line);
      if (cols.size() < 3 || cols[0] != "timestamp")
        throw std::runtime_error("parse_wind_csv: unexpected header in " + path);
      has_capacity = cols.size() >= 4;
      header_seen = true;
      continue;
    }
    const auto cols = split_csv_line(line);
    if (cols.size() < 3) throw std::runtime_error("parse_wind_csv: line " + std::to_string(line_no) + ": too few columns");
    raw_t.push_back(parse_timestamp_hours(cols[0], line_no));
    raw_f.push_back(to_double(cols[1], line_no));
    raw_p.push_back(to_double(cols[2], line_no));
    raw_c.push_back(has_capacity && cols.size() >= 4 ? to_double(cols[3], line_no) : 0.0);
  }
  if (raw_t.empty()) throw std::runtime_error("parse_wind_csv: no data rows in " + path);
  // the explicit capacity column wins; otherwise fall back to the series max
  double cap = 0.0;
  for (std::size_t i = 0; i < raw_t.size(); ++i)
    cap = std::max(cap, has_capacity ? raw_c[i] : std::max(raw_f[i], raw_p[i]));
  if (cap <= 0.0) throw std::runtime_error("parse_wind_csv: cannot infer capacity");
  const double t0 = raw_t.front();
  for (std::size_t i = 0; i < raw_t.size(); ++i) {
    if (i > 0 && raw_t[i] <= raw_t[i - 1])
      throw std::runtime_error("parse_wind_csv: non-monotone timestamps near row " + std::to_string(i + 1));
    out.forecast.times.push_back(raw_t[i] - t0);
    out.production.times.push_back(raw_t[i] - t0);
    double f = raw_f[i] / cap, p = raw_p[i] / cap;
    if (f > 1.0 || p > 1.0) ++out.clamp_warnings;
    out.forecast.values.push_back(std::clamp(f, 0.0, 1.0));
    out.production.values.push_back(std::clamp(p, 0.0, 1.0));
  }
  out.forecast.meta = path + ":forecast";
  out.production.meta = path + ":production";
  return out;
}

TimeSeries parse_price_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_price_csv: cannot open " + path);
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  TimeSeries out;
  out.meta = path;
  std::vector<double> raw_t;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto cols = split_csv_line(line);
    if (cols.size() < 2) throw std::runtime_error("parse_price_csv: line " + std::to_string(line_no) + ": too few columns");
    raw_t.push_back(parse_timestamp_hours(cols[0], line_no));
    out.values.push_back(to_double(cols[1], line_no) * 1e-6);  // EUR/MWh -> EUR/Wh
  }
  if (raw_t.empty()) throw std::runtime_error("parse_price_csv: no data rows in " + path);
  const double t0 = raw_t.front();
  for (std::size_t i = 0; i < raw_t.size(); ++i) {
    if (i > 0 && raw_t[i] <= raw_t[i - 1])
      throw std::runtime_error("parse_price_csv: non-monotone timestamps near row " + std::to_string(i + 1));
    out.times.push_back(raw_t[i] - t0);
  }
  return out;
}

void export_timeseries_csv(const std::string& path, const TimeSeries& series,
                           const std::string& value_header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_timeseries_csv: cannot open " + path);
  out.precision(17);
  out << "hours," << value_header << "\n";
  for (std::size_t i = 0; i < series.times.size(); ++i)
    out << series.times[i] << "," << series.values[i] << "\n";
}

TimeSeries import_timeseries_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("import_timeseries_csv: cannot open " + path);
  TimeSeries out;
  out.meta = path;
  std::string line;
  bool header_seen = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto cols = split_csv_line(line);
    if (cols.size() < 2)
      throw std::runtime_error("import_timeseries_csv: line " + std::to_string(line_no));
    out.times.push_back(to_double(cols[0], line_no));
    out.values.push_back(to_double(cols[1], line_no));
  }
  out.validate();
  return out;
}

bool extend_to_horizon(TimeSeries& series, double horizon_hours) {
  series.validate();
  if (series.times.empty() || series.times.back() >= horizon_hours - 1e-9) return false;
  const std::size_t n0 = series.times.size();
  for (std::size_t i = 0; i < n0; ++i) {
    const double t = series.times[i] + 24.0;
    if (t <= series.times.back() + 1e-9) continue;
    if (t > horizon_hours + 1e-9) break;
    series.times.push_back(t);
    series.values.push_back(series.values[i]);
  }
  return true;
}

PriceFit fit_price_polynomial(const TimeSeries& series, std::size_t degree) {
  const auto fit = fit_chebyshev(series, degree);
  return {Curve::polynomial(fit.poly), fit.rms_residual};
}

double fading_floor_for(const ModelParams& model, const UserDistribution& dist,
                        const TrafficProfile& traffic, double phi_th) {
  const double p_tx_peak = model.p_tx_max / traffic.n_max;
  // invert the outage closed form for xi at phi = phi_th/2 and full power
  const double phi = phi_th / 2.0;
  double q;
  if (std::holds_alternative<UniformUsers>(dist)) {
    const double area = std::get<UniformUsers>(dist).area;
    q = std::pow((1.0 - phi) * area / 3.14159265358979323846, model.eta / 2.0);
  } else {
    const double su = std::get<GaussianUsers>(dist).sigma_u;
    q = std::pow(-2.0 * su * su * std::log(phi), model.eta / 2.0);
  }
  return model.noise_scale() * q / (p_tx_peak * model.kappa);
}

namespace {

ScenarioInputs base_scenario() {
  ScenarioInputs s;
  s.model = ModelParams{};  // table defaults
  s.qos = QoSParams{};
  s.traffic = TrafficProfile{};
  s.user_dist = GaussianUsers{300.0};
  s.battery = BatteryCharacteristic{};
  s.horizon_hours = 48.0;
  s.initial_charge = 0.5;

  // day-ahead-like buy curve, two intraday humps; sell price equal by market assumption
  s.prices.k_b = Curve::harmonics(8.5e-5, {{1.2e-5, 24.0, 14.0}, {1.0e-5, 12.0, 5.0}});
  s.prices.k_s = s.prices.k_b;
  s.prices.k_net = Curve::constant(0.01);

  s.renewable.alpha = 0.34;
  s.renewable.theta0 = 2.3948 / 24.0;  // calibrated per day, stored per hour
  s.renewable.varsigma = 0.054 * 24.0;
  s.renewable.forecast.p = Curve::harmonics(0.5, {{0.02, 24.0, 6.0}});

  s.fading.mu = 3.0;
  s.fading.theta = 1.0 / 24.0;  // per day, stored per hour
  s.fading.xi_floor = fading_floor_for(s.model, s.user_dist, s.traffic, s.qos.phi_th);
  s.fading.chi_bar = s.fading.xi_floor + gamma_quantile(s.fading.mu, 0.95);
  return s;
}

void refresh_fading_scope(ScenarioInputs& s) {
  s.fading.xi_floor = fading_floor_for(s.model, s.user_dist, s.traffic, s.qos.phi_th);
  s.fading.chi_bar = s.fading.xi_floor + gamma_quantile(s.fading.mu, 0.95);
}

}  // namespace

ScenarioInputs synthetic_scenario(const std::string& kind, uint64_t seed) {
  ScenarioInputs s = base_scenario();
  if (kind == "base") {
    // as-is
  } else if (kind == "scenario_a") {
    s.renewable.forecast.p = Curve::constant(0.0);  // no incoming renewable power
  } else if (kind == "scenario_b") {
    s.fading.xi_floor *= 0.5;  // substantially low fading channel
    s.fading.chi_bar = s.fading.xi_floor + gamma_quantile(s.fading.mu, 0.95);
  } else if (kind == "scenario_c") {
    s.model.w = 0.99;  // weight on operating expenditure
  } else if (kind == "scenario_d") {
    s.prices.k_net = Curve::constant(0.001);
  } else if (kind == "scenario_e") {
    s.qos.epsilon = 0.2;  // low-confidence QoS
  } else if (kind == "randomized") {
    RngStream rng(seed, /*tag=*/0x5eed);
    s.model.p_tx_max = std::pow(10.0, 3.0 + rng.uniform());
    s.model.sigma0 = std::max(1e-10, 3.1623e-8 + 1e-8 * rng.normal());
    s.model.p_r_max = std::pow(10.0, 2.0 + 2.0 * rng.uniform());
    s.model.a_max = std::pow(10.0, 3.0 + rng.uniform());
    s.model.w = rng.uniform();
    s.qos.phi_th = std::pow(10.0, -4.0 + 2.0 * rng.uniform());
    s.initial_charge = rng.uniform();
    s.prices.k_net = Curve::constant(std::pow(10.0, -1.0 + 2.0 * rng.uniform()));
    refresh_fading_scope(s);
  } else {
    throw std::invalid_argument(
        "synthetic_scenario: unknown kind '" + kind +
        "'; expected base, scenario_a, scenario_b, scenario_c, scenario_d, scenario_e, randomized");
  }
  s.validate();
  return s;
}

// ---- JSON glue --------------------------------------------------------------

namespace {

json curve_to_json(const Curve& c) {
  json j;
  switch (c.kind()) {
    case Curve::Kind::kConstant:
      j["kind"] = "constant";
      j["value"] = c.constant_value();
      break;
    case Curve::Kind::kHarmonics: {
      j["kind"] = "harmonics";
      j["offset"] = c.offset();
      json parts = json::array();
      for (const auto& h : c.harmonic_parts())
        parts.push_back({{"amplitude", h.amplitude}, {"period", h.period}, {"phase", h.phase}});
      j["parts"] = parts;
      break;
    }
    case Curve::Kind::kSpline:
      j["kind"] = "spline";
      j["times"] = c.spline_data().nodes_x();
      j["values"] = c.spline_data().nodes_y();
      break;
    case Curve::Kind::kPolynomial:
      j["kind"] = "polynomial";
      j["t0"] = c.poly_data().t0;
      j["t1"] = c.poly_data().t1;
      j["coeffs"] = c.poly_data().coeffs;
      break;
    case Curve::Kind::kEmpty:
      j["kind"] = "empty";
      break;
  }
  return j;
}

Curve curve_from_json(const json& j) {
  const std::string kind = j.at("kind");
  if (kind == "constant") return Curve::constant(j.at("value").get<double>());
  if (kind == "harmonics") {
    std::vector<Curve::Harmonic> parts;
    for (const auto& p : j.at("parts"))
      parts.push_back({p.at("amplitude").get<double>(), p.at("period").get<double>(),
                       p.at("phase").get<double>()});
    return Curve::harmonics(j.at("offset").get<double>(), std::move(parts));
  }
  if (kind == "spline")
    return Curve::spline(j.at("times").get<std::vector<double>>(),
                         j.at("values").get<std::vector<double>>());
  if (kind == "polynomial") {
    ChebPoly p;
    p.t0 = j.at("t0").get<double>();
    p.t1 = j.at("t1").get<double>();
    p.coeffs = j.at("coeffs").get<std::vector<double>>();
    return Curve::polynomial(std::move(p));
  }
  throw std::runtime_error("curve_from_json: unknown curve kind '" + kind + "'");
}

template <typename T>
void maybe(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

std::string scenario_to_json(const ScenarioInputs& s) {
  json j;
  j["model"] = {{"c_scal", s.model.c_scal},       {"c_offset", s.model.c_offset},
                {"p_tx_max", s.model.p_tx_max},   {"kappa", s.model.kappa},
                {"eta", s.model.eta},             {"snr_th", s.model.snr_th},
                {"sigma0", s.model.sigma0},       {"p_r_max", s.model.p_r_max},
                {"a_max", s.model.a_max},         {"c1_emission", s.model.c1_emission},
                {"c2_emission", s.model.c2_emission}, {"p_k", s.model.p_k},
                {"w", s.model.w}};
  j["qos"] = {{"phi_th", s.qos.phi_th}, {"epsilon", s.qos.epsilon}};
  j["traffic"] = {{"n_min", s.traffic.n_min},
                  {"n_max", s.traffic.n_max},
                  {"rho", s.traffic.rho},
                  {"period_hours", s.traffic.period_hours}};
  if (std::holds_alternative<UniformUsers>(s.user_dist))
    j["user_dist"] = {{"kind", "uniform"}, {"area", std::get<UniformUsers>(s.user_dist).area}};
  else
    j["user_dist"] = {{"kind", "gaussian"}, {"sigma_u", std::get<GaussianUsers>(s.user_dist).sigma_u}};
  j["battery"] = {{"p_charge_max", s.battery.p_charge_max},
                  {"p_discharge_max", s.battery.p_discharge_max},
                  {"ramp_fraction", s.battery.ramp_fraction}};
  j["prices"] = {{"k_b", curve_to_json(s.prices.k_b)},
                 {"k_s", curve_to_json(s.prices.k_s)},
                 {"k_net", curve_to_json(s.prices.k_net)}};
  j["renewable"] = {{"alpha", s.renewable.alpha},
                    {"theta0", s.renewable.theta0},
                    {"varsigma", s.renewable.varsigma},
                    {"forecast", curve_to_json(s.renewable.forecast.p)}};
  j["fading"] = {{"mu", s.fading.mu},
                 {"theta", s.fading.theta},
                 {"xi_floor", s.fading.xi_floor},
                 {"chi_bar", s.fading.chi_bar}};
  j["horizon_hours"] = s.horizon_hours;
  j["initial_charge"] = s.initial_charge;
  return j.dump(2);
}

ScenarioInputs scenario_apply_json(const ScenarioInputs& base, const std::string& json_text) {
  ScenarioInputs s = base;
  const json j = json::parse(json_text);
  if (j.contains("model")) {
    const auto& m = j.at("model");
    maybe(m, "c_scal", s.model.c_scal);
    maybe(m, "c_offset", s.model.c_offset);
    maybe(m, "p_tx_max", s.model.p_tx_max);
    maybe(m, "kappa", s.model.kappa);
    maybe(m, "eta", s.model.eta);
    maybe(m, "snr_th", s.model.snr_th);
    maybe(m, "sigma0", s.model.sigma0);
    maybe(m, "p_r_max", s.model.p_r_max);
    maybe(m, "a_max", s.model.a_max);
    maybe(m, "c1_emission", s.model.c1_emission);
    maybe(m, "c2_emission", s.model.c2_emission);
    maybe(m, "p_k", s.model.p_k);
    maybe(m, "w", s.model.w);
  }
  if (j.contains("qos")) {
    maybe(j.at("qos"), "phi_th", s.qos.phi_th);
    maybe(j.at("qos"), "epsilon", s.qos.epsilon);
  }
  if (j.contains("traffic")) {
    const auto& t = j.at("traffic");
    maybe(t, "n_min", s.traffic.n_min);
    maybe(t, "n_max", s.traffic.n_max);
    maybe(t, "rho", s.traffic.rho);
    maybe(t, "period_hours", s.traffic.period_hours);
  }
  if (j.contains("user_dist")) {
    const auto& u = j.at("user_dist");
    const std::string kind = u.at("kind");
    if (kind == "uniform")
      s.user_dist = UniformUsers{u.at("area").get<double>()};
    else if (kind == "gaussian")
      s.user_dist = GaussianUsers{u.at("sigma_u").get<double>()};
    else
      throw std::runtime_error("scenario json: unknown user_dist kind");
  }
  if (j.contains("battery")) {
    const auto& b = j.at("battery");
    maybe(b, "p_charge_max", s.battery.p_charge_max);
    maybe(b, "p_discharge_max", s.battery.p_discharge_max);
    maybe(b, "ramp_fraction", s.battery.ramp_fraction);
  }
  if (j.contains("prices")) {
    const auto& p = j.at("prices");
    if (p.contains("k_b")) s.prices.k_b = curve_from_json(p.at("k_b"));
    if (p.contains("k_s")) s.prices.k_s = curve_from_json(p.at("k_s"));
    if (p.contains("k_net")) s.prices.k_net = curve_from_json(p.at("k_net"));
  }
  if (j.contains("renewable")) {
    const auto& r = j.at("renewable");
    maybe(r, "alpha", s.renewable.alpha);
    maybe(r, "theta0", s.renewable.theta0);
    maybe(r, "varsigma", s.renewable.varsigma);
    if (r.contains("forecast")) s.renewable.forecast.p = curve_from_json(r.at("forecast"));
  }
  if (j.contains("fading")) {
    const auto& f = j.at("fading");
    maybe(f, "mu", s.fading.mu);
    maybe(f, "theta", s.fading.theta);
    maybe(f, "xi_floor", s.fading.xi_floor);
    maybe(f, "chi_bar", s.fading.chi_bar);
  }
  maybe(j, "horizon_hours", s.horizon_hours);
  maybe(j, "initial_charge", s.initial_charge);
  s.validate();
  return s;
}

ScenarioInputs scenario_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("scenario_from_json_file: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return scenario_apply_json(synthetic_scenario("base"), buf.str());
}

}  // namespace greenprocure
