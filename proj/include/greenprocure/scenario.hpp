#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "greenprocure/model.hpp"

namespace greenprocure {

// Wind ingestion result: forecast/production normalized to [0,1].
struct WindData {
  TimeSeries forecast;
  TimeSeries production;
  int clamp_warnings = 0;  // samples above capacity clamped to 1
};

// header: timestamp,forecast_mw,production_mw[,capacity_mw]
WindData parse_wind_csv(const std::string& path);

// header: timestamp,price_eur_per_mwh; values converted to EUR/Wh
TimeSeries parse_price_csv(const std::string& path);

void export_timeseries_csv(const std::string& path, const TimeSeries& series,
                           const std::string& value_header);

// Inverse of export_timeseries_csv (hours,value rows; comments skipped).
TimeSeries import_timeseries_csv(const std::string& path);

// Two-day horizon assembly: series covering less than `horizon` hours are
// extended by repeating the first day, shifted by 24 h. Returns whether the
// repeat was applied (callers surface it as a warning).
bool extend_to_horizon(TimeSeries& series, double horizon_hours);

struct PriceFit {
  Curve curve;
  double rms_residual = 0.0;
};
PriceFit fit_price_polynomial(const TimeSeries& series, std::size_t degree);

// Named presets: base mirrors the model/parameter tables; scenario_a..e apply
// the single-parameter sensitivity changes; randomized draws the documented
// parameter distributions from the given seed.
ScenarioInputs synthetic_scenario(const std::string& kind, uint64_t seed = 0);

// Fading floor rule: the level that still reaches an outage proportion of
// phi_th/2 at peak traffic and full per-user transmit power.
double fading_floor_for(const ModelParams& model, const UserDistribution& dist,
                        const TrafficProfile& traffic, double phi_th);

// JSON round-trip for scenario files (all fields optional over a preset base).
ScenarioInputs scenario_from_json_file(const std::string& path);
std::string scenario_to_json(const ScenarioInputs& inputs);
ScenarioInputs scenario_apply_json(const ScenarioInputs& base, const std::string& json_text);

}  // namespace greenprocure
