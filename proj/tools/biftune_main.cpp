// biftune - batch experiments on self-tuned bifurcation loops.
//
// Subcommands: simulate, sweep, certify, analyze, gain-curve. Each reads a
// scenario config and writes its artifacts into --outdir (or $BIFTUNE_OUTDIR).
// Exit codes: 0 success, 2 configuration/validation error, 3 integration
// failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "biftune/report_json.hpp"
#include "biftune/rng.hpp"
#include "biftune/scenario.hpp"

namespace fs = std::filesystem;
using namespace biftune;

namespace {

struct GlobalOpts {
  std::string outdir;
  std::string format = "csv";  // csv | json: format of secondary outputs
  std::optional<std::uint64_t> seed;
};

std::string config_stem(const std::string& path) { return fs::path(path).stem().string(); }

fs::path out_path(const GlobalOpts& g, const std::string& name) {
  fs::path dir = g.outdir.empty() ? fs::path(".") : fs::path(g.outdir);
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + p.string() + "'");
  out << content;
}

Scenario load_with_overrides(const std::string& config, const GlobalOpts& g) {
  Scenario sc = load_scenario(config);
  if (g.seed) sc.seed = *g.seed;
  return sc;
}

std::vector<double> parse_double_list(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (const auto& s : items) {
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) {
      if (tok.empty()) continue;
      try {
        out.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw ValidationError("not a number: '" + tok + "'");
      }
    }
  }
  return out;
}

int run_simulate(const std::string& config, const GlobalOpts& g) {
  Scenario sc = load_with_overrides(config, g);
  auto res = run_scenario(sc);

  const std::string stem = config_stem(config);
  const fs::path csv_path = out_path(g, stem + "_trajectory.csv");
  const fs::path json_path = out_path(g, stem + "_report.json");
  write_file(csv_path, trajectory_csv(res));

  OrderedJson j;
  j["scenario"] = stem;
  j["report"] = to_json(res.report);
  j["files"] = {{"trajectory_csv", csv_path.string()}};
  write_file(json_path, j.dump(2) + "\n");

  std::cout << "simulate " << stem << ": final |mu - mu0| = " << format_g17(res.report.final_mu_error)
            << (res.report.settled ? " settled at t=" + format_g17(res.report.settle_time)
                                   : " (unsettled)")
            << "\n  trajectory: " << csv_path.string() << "\n  report: " << json_path.string()
            << "\n";
  return 0;
}

int run_sweep_cmd(const std::string& config, const std::string& param,
                  const std::vector<std::string>& value_items, const GlobalOpts& g) {
  Scenario sc = load_with_overrides(config, g);
  const auto values = parse_double_list(value_items);
  auto rows = run_sweep(sc, param, values);

  const std::string stem = config_stem(config);
  fs::path path;
  if (g.format == "json") {
    OrderedJson arr = OrderedJson::array();
    for (const auto& r : rows) {
      OrderedJson j;
      j["param"] = r.param;
      j["value"] = r.value;
      j["status"] = r.ok ? "ok" : "error";
      if (r.ok) {
        j["report"] = to_json(r.report);
        if (!std::isnan(r.floquet_spectral_radius))
          j["floquet_spectral_radius"] = r.floquet_spectral_radius;
      } else {
        j["error"] = r.error;
      }
      arr.push_back(j);
    }
    path = out_path(g, stem + "_sweep.json");
    write_file(path, arr.dump(2) + "\n");
  } else {
    path = out_path(g, stem + "_sweep.csv");
    write_file(path, sweep_csv(rows));
  }
  std::cout << "sweep " << param << " over " << values.size() << " values -> " << path.string()
            << "\n";
  return 0;
}

int run_certify(const std::string& config, const std::string& definition, double u2_radius,
                double k_radius, double u_radius, const std::vector<std::string>& eps_items,
                double horizon, int shells, int points, int start_times, const GlobalOpts& g) {
  Scenario sc = load_with_overrides(config, g);

  FalsifyBudget budget;
  if (!eps_items.empty()) budget.epsilons = parse_double_list(eps_items);
  if (horizon > 0.0) budget.horizon = horizon;
  if (shells > 0) budget.shells = shells;
  if (points > 0) budget.points_per_shell = points;
  if (start_times > 0) budget.start_times = start_times;
  budget.abs_tol = sc.integrator.abs_tol;
  budget.rel_tol = sc.integrator.rel_tol;

  Verdict verdict;
  if (definition == "practical") {
    if (sc.system == SystemKind::first_order)
      verdict = falsify_practical_stability(make_first_order_family(sc), u2_radius, budget);
    else
      verdict = falsify_practical_stability(make_oscillator_family(sc), u2_radius, budget);
  } else if (definition == "semiglobal") {
    if (sc.system == SystemKind::first_order)
      verdict = falsify_semiglobal_practical(make_first_order_family(sc), k_radius, u_radius,
                                             budget);
    else
      verdict =
          falsify_semiglobal_practical(make_oscillator_family(sc), k_radius, u_radius, budget);
  } else {
    throw ValidationError("--definition must be practical or semiglobal");
  }

  const std::string stem = config_stem(config);
  const fs::path path = out_path(g, stem + "_verdict.json");
  write_file(path, to_json(verdict).dump(2) + "\n");
  std::cout << "certify " << definition << ": "
            << (verdict.falsified ? "FALSIFIED" : "not falsified within budget") << " ("
            << verdict.trajectories << " trajectories)\n  verdict: " << path.string() << "\n";
  return 0;
}

int run_analyze(const std::string& config, const std::string& what, const GlobalOpts& g) {
  Scenario sc = load_with_overrides(config, g);
  const AdaptationLaw law = sc.make_law();
  OrderedJson j;
  j["what"] = what;

  auto effective_pair = [&]() {
    const auto hyp = validate_theorem3_4(law, sc.mu0, sc.is_oscillator() ? sc.omega : 1.0);
    return std::pair<double, double>(hyp.a_eff, hyp.b_eff);
  };

  if (what == "lyapunov") {
    auto res = run_scenario(sc);
    if (sc.system == SystemKind::first_order) {
      const auto sys = log_chart_system(sc.make_first_order_loop());
      const auto chart = to_chart_trajectory(sys, res.traj2());
      j["max_increase"] = lyapunov_monotonicity(chart, law, sc.mu0);
      const auto& zf = chart.traj.back();
      j["final_value"] = lyapunov_value(zf[0], zf[1], law, sc.mu0);
    } else {
      const auto [a_eff, b_eff] = effective_pair();
      const auto kyp = kyp_storage(a_eff, b_eff);
      const auto sys = qphi_p_chart_system(sc.make_oscillator_loop());
      const auto chart = to_chart_trajectory(sys, res.traj3());
      std::vector<double> vals;
      vals.reserve(chart.traj.size());
      for (const auto& z : chart.traj.states) vals.push_back(kyp.storage.value(z[0], z[2]));
      j["max_increase"] = max_consecutive_increase(vals);
      j["final_value"] = vals.back();
      j["storage"] = to_json(kyp);
    }
  } else if (what == "kyp") {
    const auto [a_eff, b_eff] = effective_pair();
    const auto kyp = kyp_storage(a_eff, b_eff);
    j["a_eff"] = a_eff;
    j["b_eff"] = b_eff;
    j["storage"] = to_json(kyp);
    Rng rng(sc.seed);
    double worst = -1e300;
    for (int i = 0; i < 10000; ++i) {
      const double q = rng.uniform(-10.0, 10.0), p = rng.uniform(-10.0, 10.0),
                   u = rng.uniform(-10.0, 10.0);
      worst = std::max(worst, kyp_residual(kyp.storage.P, a_eff, b_eff, q, p, u));
    }
    j["max_sampled_residual"] = worst;
  } else if (what == "positive-real") {
    const auto [a_eff, b_eff] = effective_pair();
    j["a_eff"] = a_eff;
    j["b_eff"] = b_eff;
    j["margin"] = positive_real_margin(a_eff, b_eff);
  } else if (what == "floquet") {
    if (!sc.is_oscillator()) throw ValidationError("analyze floquet requires an oscillator scenario");
    j["reduced"] = to_json(floquet_multipliers(law, sc.mu0, sc.omega, FloquetMode::reduced));
    j["full"] = to_json(floquet_multipliers(law, sc.mu0, sc.omega, FloquetMode::full));
    j["hypotheses"] = to_json(validate_theorem3_4(law, sc.mu0, sc.omega));
  } else if (what == "linearize") {
    if (sc.is_oscillator())
      throw ValidationError("analyze linearize applies to first_order scenarios");
    j["linearization"] = to_json(linearize_equilibrium(law, sc.mu0));
    j["hypotheses"] = to_json(validate_theorem1(law));
  } else if (what == "sector") {
    Rng rng(sc.seed);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const double phi = rng.uniform(0.0, 2.0 * M_PI), p = rng.uniform(-10.0, 10.0);
      const auto [lhs, rhs] = sector_identity(phi, p);
      worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
    }
    j["max_relative_error"] = worst;
    j["samples"] = 10000;
  } else {
    throw ValidationError("--what must be one of lyapunov|kyp|positive-real|floquet|linearize|sector");
  }

  const std::string stem = config_stem(config);
  const fs::path path = out_path(g, stem + "_analyze_" + what + ".json");
  write_file(path, j.dump(2) + "\n");
  std::cout << "analyze " << what << " -> " << path.string() << "\n";
  if (g.format == "json") std::cout << j.dump(2) << "\n";
  return 0;
}

int run_gain(const std::string& config, const std::vector<std::string>& amp_items,
             const GlobalOpts& g) {
  Scenario sc = load_with_overrides(config, g);
  const auto amplitudes = parse_double_list(amp_items);
  auto points = gain_curve(sc, amplitudes);

  const std::string stem = config_stem(config);
  fs::path path;
  if (g.format == "json") {
    OrderedJson arr = OrderedJson::array();
    for (const auto& p : points) {
      OrderedJson pj;
      pj["forcing_amplitude"] = p.amplitude_in;
      pj["response_amplitude"] = p.amplitude_out;
      if (!std::isnan(p.local_slope)) pj["local_slope"] = p.local_slope;
      pj["unsettled"] = p.unsettled;
      arr.push_back(pj);
    }
    path = out_path(g, stem + "_gain.json");
    write_file(path, arr.dump(2) + "\n");
  } else {
    path = out_path(g, stem + "_gain.csv");
    write_file(path, gain_csv(points));
  }
  std::cout << "gain-curve over " << amplitudes.size() << " amplitudes -> " << path.string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-tuned bifurcation simulation and analysis"};
  app.require_subcommand(1);

  GlobalOpts g;
  if (const char* env = std::getenv("BIFTUNE_OUTDIR")) g.outdir = env;
  app.add_option("--outdir", g.outdir, "output directory (default $BIFTUNE_OUTDIR or .)");
  app.add_option("--format", g.format, "secondary output format: csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  std::uint64_t seed_opt = 0;
  auto* seed_flag = app.add_option("--seed", seed_opt, "override the scenario RNG seed");

  std::string config, param, definition = "practical", what = "lyapunov";
  std::vector<std::string> values, epsilons, amplitudes;
  double u2_radius = 0.05, k_radius = 4.0, u_radius = 0.05, horizon = 0.0;
  int shells = 0, points = 0, start_times = 0;

  auto* sim = app.add_subcommand("simulate", "run one scenario, emit trajectory CSV + report");
  sim->add_option("config", config, "scenario config file")->required();

  auto* swp = app.add_subcommand("sweep", "re-run a scenario over a parameter list");
  swp->add_option("config", config)->required();
  swp->add_option("--param", param, "dotted parameter path, e.g. law.a")->required();
  swp->add_option("--values", values, "comma separated values")->required();

  auto* cert = app.add_subcommand("certify", "falsification search for a stability notion");
  cert->add_option("config", config)->required();
  cert->add_option("--definition", definition, "practical | semiglobal")
      ->check(CLI::IsMember({"practical", "semiglobal"}));
  cert->add_option("--u2-radius", u2_radius, "outer neighborhood radius (practical)");
  cert->add_option("--k-radius", k_radius, "compact start radius (semiglobal)");
  cert->add_option("--u-radius", u_radius, "target neighborhood radius (semiglobal)");
  cert->add_option("--epsilons", epsilons, "comma separated epsilon ladder");
  cert->add_option("--horizon", horizon, "per-trajectory horizon");
  cert->add_option("--shells", shells, "candidate shells");
  cert->add_option("--points", points, "initial conditions per shell");
  cert->add_option("--start-times", start_times, "start times per shell point");

  auto* ana = app.add_subcommand("analyze", "run one analysis operation");
  ana->add_option("config", config)->required();
  ana->add_option("--what", what, "lyapunov|kyp|positive-real|floquet|linearize|sector")
      ->required();

  auto* gain = app.add_subcommand("gain-curve", "forced response amplitudes (full oscillator)");
  gain->add_option("config", config)->required();
  gain->add_option("--amplitudes", amplitudes, "comma separated forcing amplitudes")->required();

  CLI11_PARSE(app, argc, argv);
  if (!seed_flag->empty()) g.seed = seed_opt;

  try {
    if (sim->parsed()) return run_simulate(config, g);
    if (swp->parsed()) return run_sweep_cmd(config, param, values, g);
    if (cert->parsed())
      return run_certify(config, definition, u2_radius, k_radius, u_radius, epsilons, horizon,
                         shells, points, start_times, g);
    if (ana->parsed()) return run_analyze(config, what, g);
    if (gain->parsed()) return run_gain(config, amplitudes, g);
  } catch (const ValidationError& e) {
    std::cerr << "biftune: error code=2 kind=ValidationError msg=\"" << e.what() << "\"\n";
    return 2;
  } catch (const DomainViolation& e) {
    std::cerr << "biftune: error code=2 kind=DomainViolation msg=\"" << e.what() << "\"\n";
    return 2;
  } catch (const NotInImage& e) {
    std::cerr << "biftune: error code=2 kind=NotInImage msg=\"" << e.what() << "\"\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "biftune: error code=3 kind=IntegrationFailure msg=\"" << e.what() << "\"\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "biftune: error code=3 kind=InternalError msg=\"" << e.what() << "\"\n";
    return 3;
  }
  return 0;
}
