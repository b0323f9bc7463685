#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "greenprocure/csvio.hpp"
#include "greenprocure/dual_opt.hpp"
#include "greenprocure/reference.hpp"
#include "greenprocure/scenario.hpp"
#include "greenprocure/sde.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace greenprocure;

namespace {

json default_config() {
  json j;
  j["preset"] = "base";
  j["scenario"] = json::object();
  j["grid"] = {{"n_a", 10}, {"n_r", 10}, {"n_chi", 10}, {"n_t", 0}};
  j["solver"] = {{"tol", 0.1},      {"tol_init", 1.0},  {"max_iter", 50},
                 {"n_bar_iter", 10}, {"n_lmbm_iter", 50}, {"beta_f", 5.0},
                 {"c_ssm", 0.0},     {"m_sg", 1000},      {"n_bar_t", 64},
                 {"ell_max", 64},    {"n_init_samples", 1000}};
  j["seed"] = 1;
  j["simulate"] = {{"paths", 2000}, {"steps", 1024}};
  j["with_references"] = false;
  j["runs"] = 50;
  return j;
}

void apply_dot_path(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("--set expects key.path=value, got '" + assignment + "'");
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  json* node = &root;
  std::istringstream keys(path);
  std::string key, prev_key;
  json* parent = nullptr;
  while (std::getline(keys, key, '.')) {
    parent = node;
    prev_key = key;
    node = &(*node)[key];
  }
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (...) {
    parsed = value;  // plain string
  }
  (*parent)[prev_key] = parsed;
}

GridSpec grid_from(const json& cfg, double horizon) {
  GridSpec g;
  g.n_a = cfg.at("grid").at("n_a").get<int>();
  g.n_r = cfg.at("grid").at("n_r").get<int>();
  g.n_chi = cfg.at("grid").at("n_chi").get<int>();
  g.n_t = cfg.at("grid").at("n_t").get<int>();
  g.horizon = horizon;
  return g;
}

SolverSettings solver_from(const json& cfg) {
  const auto& s = cfg.at("solver");
  SolverSettings out;
  out.tol = s.at("tol").get<double>();
  out.tol_init = s.at("tol_init").get<double>();
  out.max_iter = s.at("max_iter").get<int>();
  out.n_bar_iter = s.at("n_bar_iter").get<int>();
  out.n_lmbm_iter = s.at("n_lmbm_iter").get<int>();
  out.beta_f = s.at("beta_f").get<double>();
  out.c_ssm = s.at("c_ssm").get<double>();
  out.m_sg = s.at("m_sg").get<int>();
  out.n_bar_t = s.at("n_bar_t").get<int>();
  out.ell_max = s.at("ell_max").get<int>();
  out.n_init_samples = s.at("n_init_samples").get<int>();
  return out;
}

ScenarioInputs scenario_from(const json& cfg, uint64_t seed) {
  const std::string preset = cfg.at("preset").get<std::string>();
  ScenarioInputs s = synthetic_scenario(preset, seed);
  if (cfg.contains("scenario") && !cfg.at("scenario").empty())
    s = scenario_apply_json(s, cfg.at("scenario").dump());
  return s;
}

struct SolveArtifacts {
  DualOutcome outcome;
  PathEnsemble ensemble;
  EnergyBalance energy;
};

SolveArtifacts run_solve(const ScenarioInputs& inputs, const GridSpec& grid,
                         const SolverSettings& settings, uint64_t seed) {
  SolveArtifacts art;
  art.outcome = optimize_dual(settings, grid, inputs, seed);
  const CostToGoField& field = art.outcome.field;
  const PolicyFn policy = [&](double t, const StateVector& x) {
    return field_policy(field, t, x, inputs).ctrl;
  };
  art.ensemble = simulate_controlled_paths(policy, static_cast<std::size_t>(settings.m_sg),
                                           static_cast<std::size_t>(settings.n_bar_t),
                                           stream_key(seed, 0x5B6D, art.outcome.final_level),
                                           inputs, true);
  art.energy = energy_balance(art.ensemble, inputs, 24.0);
  return art;
}

void write_solve_artifacts(const fs::path& out_dir, const SolveArtifacts& art,
                           const ScenarioInputs& inputs, const std::string& prov) {
  write_dual_trace_csv((out_dir / "dual_trace.csv").string(), art.outcome.trace, prov);
  write_multiplier_json((out_dir / "multiplier.json").string(), art.outcome.multiplier);
  write_policy_ensemble_csv((out_dir / "policy_ensemble.csv").string(), art.ensemble, inputs,
                            prov);
  write_violation_csv((out_dir / "violation.csv").string(), art.ensemble, inputs, prov);
}

void write_summary(const fs::path& path, const SolveArtifacts& art, const std::string& prov,
                   const ReferenceReport* refs) {
  std::ofstream out(path);
  out.precision(17);
  out << "{\n  \"provenance\": \"" << prov.substr(2) << "\",\n";
  out << "  \"dual_value\": " << art.outcome.dual_value << ",\n";
  out << "  \"dual_stderr\": " << art.outcome.dual_stderr << ",\n";
  out << "  \"final_subgrad_norm\": " << art.outcome.final_norm << ",\n";
  out << "  \"tolerance_reached\": " << (art.outcome.tolerance_reached ? "true" : "false")
      << ",\n";
  out << "  \"final_level\": " << art.outcome.final_level << ",\n";
  out << "  \"energy\": {\"consumed\": " << art.energy.consumed
      << ", \"battery\": " << art.energy.battery << ", \"bought\": " << art.energy.bought
      << ", \"sold\": " << art.energy.sold << "}";
  if (refs) {
    out << ",\n  \"references\": {\"theta_unconstrained\": " << refs->theta_unconstrained
        << ", \"theta_dual\": " << refs->theta_dual
        << ", \"theta_as\": " << (refs->as_feasible ? refs->theta_as : 0.0)
        << ", \"as_feasible\": " << (refs->as_feasible ? "true" : "false")
        << ", \"ordering_ok\": " << (refs->ordering_ok ? "true" : "false") << "}";
  }
  out << "\n}\n";
}

int cmd_simulate(const json& cfg, const fs::path& out_dir) {
  const uint64_t seed = cfg.at("seed").get<uint64_t>();
  const ScenarioInputs inputs = scenario_from(cfg, seed);
  const std::string prov = provenance_line(cfg.dump(), seed);
  const std::size_t paths = cfg.at("simulate").at("paths").get<std::size_t>();
  const std::size_t steps = cfg.at("simulate").at("steps").get<std::size_t>();

  // uncontrolled fading on its native domain
  std::vector<double> times(steps + 1);
  for (std::size_t n = 0; n <= steps; ++n)
    times[n] = inputs.horizon_hours * static_cast<double>(n) / static_cast<double>(steps);
  std::vector<std::vector<double>> fading_by_time(steps + 1);
  {
    const auto curves = simulate_fading_paths_unscaled(paths, steps, inputs.horizon_hours,
                                                       stream_key(seed, 0xFAD), inputs.fading);
    for (std::size_t n = 0; n <= steps; ++n) fading_by_time[n] = curves[n];
  }
  write_scalar_ensemble_csv((out_dir / "fading_ensemble.csv").string(), times, fading_by_time,
                            "xi", prov);

  // uncontrolled renewable (zero controls)
  const PolicyFn zero_policy = [](double, const StateVector&) { return ControlVector{}; };
  const PathEnsemble ens =
      simulate_controlled_paths(zero_policy, paths, steps, stream_key(seed, 0x12EA), inputs);
  std::vector<std::vector<double>> r_by_time(steps + 1, std::vector<double>(paths));
  for (std::size_t n = 0; n <= steps; ++n)
    for (std::size_t m = 0; m < paths; ++m) r_by_time[n][m] = ens.states[m][n].r;
  write_scalar_ensemble_csv((out_dir / "renewable_ensemble.csv").string(), ens.times, r_by_time,
                            "r", prov);
  std::cout << "simulate: wrote fading_ensemble.csv, renewable_ensemble.csv to " << out_dir
            << "\n";
  return 0;
}

int cmd_solve(const json& cfg, const fs::path& out_dir) {
  const uint64_t seed = cfg.at("seed").get<uint64_t>();
  const ScenarioInputs inputs = scenario_from(cfg, seed);
  const GridSpec grid = grid_from(cfg, inputs.horizon_hours);
  const SolverSettings settings = solver_from(cfg);
  const std::string prov = provenance_line(cfg.dump(), seed);

  const SolveArtifacts art = run_solve(inputs, grid, settings, seed);
  write_solve_artifacts(out_dir, art, inputs, prov);

  ReferenceReport refs;
  const bool with_refs = cfg.at("with_references").get<bool>();
  if (with_refs) {
    refs = compare_references(inputs, grid, seed, settings);
    write_reference_report((out_dir / "references.csv").string(),
                           (out_dir / "references.json").string(), refs, art.energy, prov);
  }
  write_summary(out_dir / "summary.json", art, prov, with_refs ? &refs : nullptr);
  std::cout << "solve: dual=" << art.outcome.dual_value
            << " norm=" << art.outcome.final_norm
            << " level=" << art.outcome.final_level
            << (art.outcome.tolerance_reached ? " (tolerance reached)" : " (NOT at tolerance)")
            << "\n";
  return art.outcome.tolerance_reached ? 0 : 2;
}

int cmd_sweep(const json& cfg, const fs::path& out_dir) {
  const uint64_t master_seed = cfg.at("seed").get<uint64_t>();
  const int runs = cfg.at("runs").get<int>();
  const SolverSettings settings = solver_from(cfg);

  std::ofstream agg(out_dir / "sweep_aggregate.csv");
  agg.precision(17);
  agg << provenance_line(cfg.dump(), master_seed) << "\n";
  agg << "run,seed,dual_value,subgrad_norm,tolerance_reached,level,error\n";
  int failures = 0;
  for (int run = 0; run < runs; ++run) {
    const uint64_t run_seed = stream_key(master_seed, 0x53EE9, run);
    try {
      json run_cfg = cfg;
      run_cfg["preset"] = "randomized";
      const ScenarioInputs inputs = scenario_from(run_cfg, run_seed);
      const GridSpec grid = grid_from(cfg, inputs.horizon_hours);
      const DualOutcome outcome = optimize_dual(settings, grid, inputs, run_seed);
      agg << run << "," << run_seed << "," << outcome.dual_value << "," << outcome.final_norm
          << "," << (outcome.tolerance_reached ? 1 : 0) << "," << outcome.final_level << ",\n";
      std::cout << "run " << run << ": dual=" << outcome.dual_value
                << " norm=" << outcome.final_norm << " level=" << outcome.final_level << "\n";
      if (!outcome.tolerance_reached) ++failures;
    } catch (const std::exception& e) {
      ++failures;
      agg << run << "," << run_seed << ",nan,nan,0,0,\"" << e.what() << "\"\n";
      std::cout << "run " << run << ": FAILED: " << e.what() << "\n";
    }
    agg.flush();
  }
  std::cout << "sweep: " << runs - failures << "/" << runs << " runs at tolerance\n";
  return failures == 0 ? 0 : 2;
}

int cmd_references(const json& cfg, const fs::path& out_dir) {
  const uint64_t seed = cfg.at("seed").get<uint64_t>();
  const ScenarioInputs inputs = scenario_from(cfg, seed);
  const GridSpec grid = grid_from(cfg, inputs.horizon_hours);
  const SolverSettings settings = solver_from(cfg);
  const std::string prov = provenance_line(cfg.dump(), seed);

  ReferenceReport rep;
  // cheapest solve first: a structurally infeasible a.s. problem is
  // diagnosed before the dual optimization spends its budget
  try {
    const ReferenceSolve as = solve_as_constrained(
        grid, inputs, seed, static_cast<std::size_t>(settings.n_init_samples));
    rep.theta_as = as.theta;
    rep.stderr_as = as.stderr_;
  } catch (const InfeasibleAsConstraint& e) {
    rep.as_feasible = false;
    rep.as_error = e.what();
    std::cerr << "note: " << e.what() << "\n";
  }
  const ReferenceSolve unc = solve_unconstrained(grid, inputs, seed,
                                                 static_cast<std::size_t>(settings.n_init_samples));
  rep.theta_unconstrained = unc.theta;
  rep.stderr_unconstrained = unc.stderr_;
  const SolveArtifacts art = run_solve(inputs, grid, settings, seed);
  rep.theta_dual = art.outcome.dual_value;
  rep.stderr_dual = art.outcome.dual_stderr;
  rep.dual_level = art.outcome.final_level;
  rep.dual_tolerance_reached = art.outcome.tolerance_reached;
  rep.ordering_tolerance =
      3.0 * (rep.stderr_unconstrained + rep.stderr_dual + rep.stderr_as) + 1e-9;
  rep.ordering_ok = rep.theta_unconstrained <= rep.theta_dual + rep.ordering_tolerance &&
                    (!rep.as_feasible || rep.theta_dual <= rep.theta_as + rep.ordering_tolerance);
  write_reference_report((out_dir / "references.csv").string(),
                         (out_dir / "references.json").string(), rep, art.energy, prov);
  std::cout << "references: unconstrained=" << rep.theta_unconstrained
            << " dual=" << rep.theta_dual;
  if (rep.as_feasible)
    std::cout << " as=" << rep.theta_as;
  else
    std::cout << " as=INFEASIBLE";
  std::cout << " ordering_ok=" << (rep.ordering_ok ? "yes" : "no") << "\n";
  if (!rep.as_feasible) return 3;
  return rep.ordering_ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"greenprocure: day-ahead power procurement policies for renewable base stations"};
  app.require_subcommand(1);

  std::string config_path, preset, out_dir_arg = "out";
  uint64_t seed = 0;
  bool seed_set = false;
  std::vector<std::string> overrides;
  int runs_override = -1;
  bool with_references = false;

  for (auto* name : {"simulate", "solve", "sweep", "references"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--preset", preset, "scenario preset name");
    sub->add_option_function<uint64_t>(
        "--seed", [&seed, &seed_set](uint64_t v) { seed = v; seed_set = true; }, "master seed");
    sub->add_option("--set", overrides, "dot-path config overrides, e.g. solver.m_sg=500");
    sub->add_option("--out", out_dir_arg, "output directory");
    if (std::string(name) == "sweep") sub->add_option("--runs", runs_override, "number of runs");
    if (std::string(name) == "solve")
      sub->add_flag("--with-references", with_references, "also solve the reference problems");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    json cfg = default_config();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw std::invalid_argument("cannot open config " + config_path);
      json file_cfg = json::parse(in);
      cfg.merge_patch(file_cfg);
    }
    if (!preset.empty()) cfg["preset"] = preset;
    if (seed_set) cfg["seed"] = seed;
    if (runs_override > 0) cfg["runs"] = runs_override;
    if (with_references) cfg["with_references"] = true;
    for (const auto& ov : overrides) apply_dot_path(cfg, ov);

    const fs::path out_dir(out_dir_arg);
    fs::create_directories(out_dir);
    {
      std::ofstream cfg_out(out_dir / "config.json");
      cfg_out << cfg.dump(2) << "\n";
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "simulate") return cmd_simulate(cfg, out_dir);
    if (cmd == "solve") return cmd_solve(cfg, out_dir);
    if (cmd == "sweep") return cmd_sweep(cfg, out_dir);
    if (cmd == "references") return cmd_references(cfg, out_dir);
    return 4;
  } catch (const InfeasibleAsConstraint& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 4;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
