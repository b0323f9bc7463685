#include "greenprocure/csvio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "greenprocure/math_util.hpp"

namespace greenprocure {

namespace {
constexpr const char* kVersion = "0.1.0";

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.precision(17);
  return out;
}

struct Ci {
  double lo, hi;
};
Ci normal_ci(const MeanStderr& ms) {
  return {ms.mean - 1.96 * ms.stderr_, ms.mean + 1.96 * ms.stderr_};
}
}  // namespace

uint64_t fnv1a_hash(const std::string& text) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string provenance_line(const std::string& config_json, uint64_t seed) {
  std::ostringstream os;
  os << "# config_hash=" << std::hex << fnv1a_hash(config_json) << std::dec << " seed=" << seed
     << " version=" << kVersion;
  return os.str();
}

void write_path_ensemble_csv(const std::string& path, const PathEnsemble& ensemble,
                             const std::string& provenance) {
  auto out = open_out(path);
  out << provenance << "\n";
  const bool with_controls = !ensemble.controls.empty();
  out << "time,path_id,a,r,chi";
  if (with_controls) out << ",p_a,p_f,p_tx,p_s";
  out << "\n";
  for (std::size_t m = 0; m < ensemble.path_count(); ++m)
    for (std::size_t n = 0; n < ensemble.times.size(); ++n) {
      const StateVector& x = ensemble.states[m][n];
      out << ensemble.times[n] << "," << m << "," << x.a << "," << x.r << "," << x.chi;
      if (with_controls) {
        const ControlVector& c = ensemble.controls[m][n];
        out << "," << c.p_a << "," << c.p_f << "," << c.p_tx << "," << c.p_s;
      }
      out << "\n";
    }
}

void write_dual_trace_csv(const std::string& path, const DualTrace& trace,
                          const std::string& provenance) {
  auto out = open_out(path);
  out << provenance << "\n";
  out << "level,iter,dual_value,subgrad_norm,amplitudes,seconds\n";
  for (const auto& r : trace.records) {
    out << r.level << "," << r.iter << "," << r.dual_value << "," << r.subgrad_norm << ",\"[";
    for (std::size_t i = 0; i < r.amplitudes.size(); ++i)
      out << (i ? "," : "") << r.amplitudes[i];
    out << "]\"," << r.seconds << "\n";
  }
}

void write_policy_ensemble_csv(const std::string& path, const PathEnsemble& ensemble,
                               const ScenarioInputs& inputs, const std::string& provenance) {
  if (ensemble.controls.empty())
    throw std::invalid_argument("write_policy_ensemble_csv: ensemble lacks controls");
  auto out = open_out(path);
  out << provenance << "\n";
  out << "time,net_mean,net_lo,net_hi,pa_mean,pa_lo,pa_hi,pf_mean,pf_lo,pf_hi,"
         "ps_mean,ps_lo,ps_hi,a_mean,a_lo,a_hi\n";
  const std::size_t paths = ensemble.path_count();
  std::vector<double> net(paths), pa(paths), pf(paths), ps(paths), charge(paths);
  for (std::size_t n = 0; n < ensemble.times.size(); ++n) {
    const double t = ensemble.times[n];
    const double n_u = traffic_count(t, inputs.traffic);
    for (std::size_t m = 0; m < paths; ++m) {
      const ControlVector& c = ensemble.controls[m][n];
      net[m] = inputs.model.c_scal * n_u * c.p_tx + inputs.model.c_offset;
      pa[m] = c.p_a;
      pf[m] = c.p_f;
      ps[m] = c.p_s;
      charge[m] = ensemble.states[m][n].a;
    }
    out << t;
    for (const auto* v : {&net, &pa, &pf, &ps, &charge}) {
      const MeanStderr ms = mean_stderr(*v);
      const Ci ci = normal_ci(ms);
      out << "," << ms.mean << "," << ci.lo << "," << ci.hi;
    }
    out << "\n";
  }
}

void write_violation_csv(const std::string& path, const PathEnsemble& ensemble,
                         const ScenarioInputs& inputs, const std::string& provenance) {
  if (ensemble.controls.empty())
    throw std::invalid_argument("write_violation_csv: ensemble lacks controls");
  auto out = open_out(path);
  out << provenance << "\n";
  out << "time,violation_minus_eps,ci_lo,ci_hi\n";
  const double eps = inputs.qos.epsilon;
  const double n_paths = static_cast<double>(ensemble.path_count());
  for (std::size_t n = 0; n < ensemble.times.size(); ++n) {
    double count = 0.0;
    for (std::size_t m = 0; m < ensemble.path_count(); ++m) {
      const double xi = inputs.fading.xi_from_chi(ensemble.states[m][n].chi);
      if (qos_violated(ensemble.controls[m][n].p_tx, xi, inputs.user_dist, inputs.model,
                       inputs.qos.phi_th))
        count += 1.0;
    }
    const double p = count / n_paths;
    const double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / n_paths);
    out << ensemble.times[n] << "," << p - eps << "," << p - eps - 1.96 * se << ","
        << p - eps + 1.96 * se << "\n";
  }
}

void write_multiplier_json(const std::string& path, const MultiplierFunction& mult) {
  auto out = open_out(path);
  out << "{\n  \"level\": " << mult.level() << ",\n  \"breakpoints\": [";
  for (std::size_t i = 0; i < mult.breakpoints().size(); ++i)
    out << (i ? ", " : "") << mult.breakpoints()[i];
  out << "],\n  \"amplitudes\": [";
  for (std::size_t i = 0; i < mult.amplitudes().size(); ++i)
    out << (i ? ", " : "") << mult.amplitudes()[i];
  out << "]\n}\n";
}

void write_reference_report(const std::string& csv_path, const std::string& json_path,
                            const ReferenceReport& report, const EnergyBalance& dual_energy,
                            const std::string& provenance) {
  {
    auto out = open_out(csv_path);
    out << provenance << "\n";
    out << "quantity,value,stderr\n";
    out << "theta_unconstrained," << report.theta_unconstrained << ","
        << report.stderr_unconstrained << "\n";
    out << "theta_dual," << report.theta_dual << "," << report.stderr_dual << "\n";
    if (report.as_feasible)
      out << "theta_as," << report.theta_as << "," << report.stderr_as << "\n";
    out << "energy_consumed_wh," << dual_energy.consumed << ",0\n";
    out << "energy_battery_wh," << dual_energy.battery << ",0\n";
    out << "energy_bought_wh," << dual_energy.bought << ",0\n";
    out << "energy_sold_wh," << dual_energy.sold << ",0\n";
  }
  {
    auto out = open_out(json_path);
    out << "{\n";
    out << "  \"theta_unconstrained\": " << report.theta_unconstrained << ",\n";
    out << "  \"theta_dual\": " << report.theta_dual << ",\n";
    out << "  \"theta_as\": " << (report.as_feasible ? report.theta_as : 0.0) << ",\n";
    out << "  \"as_feasible\": " << (report.as_feasible ? "true" : "false") << ",\n";
    out << "  \"ordering_ok\": " << (report.ordering_ok ? "true" : "false") << ",\n";
    out << "  \"ordering_tolerance\": " << report.ordering_tolerance << ",\n";
    out << "  \"dual_level\": " << report.dual_level << ",\n";
    out << "  \"dual_tolerance_reached\": " << (report.dual_tolerance_reached ? "true" : "false")
        << ",\n";
    out << "  \"energy\": {\"consumed\": " << dual_energy.consumed
        << ", \"battery\": " << dual_energy.battery << ", \"bought\": " << dual_energy.bought
        << ", \"sold\": " << dual_energy.sold << "}\n";
    out << "}\n";
  }
}

void write_scalar_ensemble_csv(const std::string& path, const std::vector<double>& times,
                               const std::vector<std::vector<double>>& samples_by_time,
                               const std::string& column, const std::string& provenance) {
  auto out = open_out(path);
  out << provenance << "\n";
  out << "time," << column << "_mean," << column << "_lo," << column << "_hi\n";
  for (std::size_t n = 0; n < times.size(); ++n) {
    const MeanStderr ms = mean_stderr(samples_by_time[n]);
    const Ci ci = normal_ci(ms);
    out << times[n] << "," << ms.mean << "," << ci.lo << "," << ci.hi << "\n";
  }
}

}  // namespace greenprocure
