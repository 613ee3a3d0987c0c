#pragma once

// Scenario configuration and batch experiment runners. Configs are flat
// sectioned key = value text files (TOML-style); see presets/ for examples:
//
//   [system]
//   kind = "first_order"        # first_order | oscillator | oscillator_full
//   mu0 = 0.5
//   omega = 1.0                 # oscillator families
//   lambda = 0.0                # oscillator_full cubic damping
//   [law]
//   kind = "log"                # log | sigmoid | bounded_osc | custom
//   a = 1.0
//   b = 1.0
//   f = "..."                   # custom laws: f(x), g(mu) expressions
//   g = "..."
//   [initial]
//   x = 2.0
//   xdot = 0.0
//   mu = 0.0
//   [run]
//   horizon = 50.0              # omitted: 100 time units / 100 periods
//   seed = 42
//   settle_band = 1e-4
//   [integrator]
//   mode = "adaptive"           # adaptive | fixed
//   abs_tol = 1e-9
//   rel_tol = 1e-9
//   step = 1e-3                 # fixed mode
//   positivity = "guard"        # guard | log_chart (first_order only)
//   [perturbation]              # optional
//   epsilon = 1e-3
//   signal = "sin(t)"
//   [forcing]                   # optional
//   signal = "0.1*cos(t)"
//   frequency = 1.0             # gain-curve carrier frequency

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "biftune/adaptation.hpp"
#include "biftune/analysis.hpp"
#include "biftune/dynamics.hpp"
#include "biftune/errors.hpp"
#include "biftune/ode.hpp"
#include "biftune/stabcert.hpp"

namespace biftune {

// %.17g: shortest decimal that round-trips a double.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

enum class SystemKind { first_order, oscillator, oscillator_full };

inline const char* system_kind_name(SystemKind k) {
  switch (k) {
    case SystemKind::first_order: return "first_order";
    case SystemKind::oscillator: return "oscillator";
    case SystemKind::oscillator_full: return "oscillator_full";
  }
  return "?";
}

struct Scenario {
  SystemKind system = SystemKind::first_order;
  double mu0 = 0.0;
  double omega = 1.0;
  double lambda = 0.0;

  std::string law_kind = "log";
  double law_a = 1.0;
  double law_b = 1.0;
  std::string law_f;  // custom laws
  std::string law_g;

  double x0 = 1.0;
  double xdot0 = 0.0;
  double mu_init = 0.0;

  std::optional<double> horizon;  // defaulted per system when absent
  std::uint64_t seed = 0;
  double settle_band = 1e-4;

  IntegratorConfig integrator;
  std::string positivity = "guard";  // guard | log_chart

  std::optional<double> pert_epsilon;
  std::string pert_signal;

  std::string forcing_signal;
  std::optional<double> forcing_frequency;

  bool is_oscillator() const { return system != SystemKind::first_order; }

  double effective_horizon() const {
    if (horizon) return *horizon;
    return is_oscillator() ? 100.0 * 2.0 * M_PI / omega : 100.0;
  }

  AdaptationLaw make_law() const {
    if (law_kind == "log") return AdaptationLaw::log_law(law_a, law_b);
    if (law_kind == "sigmoid") return AdaptationLaw::sigmoid();
    if (law_kind == "bounded_osc") return AdaptationLaw::bounded_osc(law_a, law_b);
    if (law_kind == "custom") {
      if (law_f.empty() || law_g.empty())
        throw ValidationError("custom law requires f and g expressions");
      return AdaptationLaw::custom_expr(Signal::parse(law_f), Signal::parse(law_g));
    }
    throw ValidationError("unknown law kind '" + law_kind + "'");
  }

  std::optional<Signal> make_forcing() const {
    if (forcing_signal.empty()) return std::nullopt;
    return Signal::parse(forcing_signal);
  }

  std::optional<Perturbation> make_perturbation() const {
    if (!pert_epsilon) return std::nullopt;
    if (pert_signal.empty()) throw ValidationError("perturbation requires a signal");
    return Perturbation(*pert_epsilon, Signal::parse(pert_signal));
  }

  FirstOrderLoop make_first_order_loop() const {
    return FirstOrderLoop(FirstOrderModel(mu0, make_forcing()), make_law(), make_perturbation());
  }

  OscillatorLoop make_oscillator_loop() const {
    return OscillatorLoop(OscillatorModel(mu0, omega, lambda, make_forcing()), make_law(),
                          make_perturbation());
  }

  void validate() const {
    if (!std::isfinite(mu0)) throw ValidationError("system.mu0 must be finite");
    if (is_oscillator() && !(omega > 0.0)) throw ValidationError("system.omega must be > 0");
    if (!(lambda >= 0.0)) throw ValidationError("system.lambda must be >= 0");
    if (system == SystemKind::oscillator && lambda != 0.0)
      throw ValidationError("system.lambda requires kind = \"oscillator_full\"");
    if (system == SystemKind::oscillator && !forcing_signal.empty())
      throw ValidationError("forcing requires kind = \"first_order\" or \"oscillator_full\"");
    if (!(effective_horizon() > 0.0)) throw ValidationError("run.horizon must be > 0");
    if (!(settle_band > 0.0)) throw ValidationError("run.settle_band must be > 0");
    if (integrator.mode == IntegratorConfig::Mode::fixed && !(integrator.step > 0.0))
      throw ValidationError("integrator.step must be > 0");
    if (!(integrator.abs_tol > 0.0) || !(integrator.rel_tol > 0.0))
      throw ValidationError("integrator tolerances must be > 0");
    if (positivity != "guard" && positivity != "log_chart")
      throw ValidationError("integrator.positivity must be guard or log_chart");
    if (positivity == "log_chart" && system != SystemKind::first_order)
      throw ValidationError("integrator.positivity = log_chart applies to first_order only");

    make_law();  // law parameters
    make_forcing();
    auto pert = make_perturbation();
    if (pert && system == SystemKind::first_order && pert->p.uses_xdot())
      throw ValidationError("first-order perturbation may depend on x, mu, t only");

    if (system == SystemKind::first_order) {
      if (!(x0 > 0.0))
        throw DomainViolation("initial.x must be > 0 for a first-order loop (x = 0 pins the "
                              "state and no law can steer mu)");
    } else {
      if (x0 == 0.0 && xdot0 == 0.0)
        throw DomainViolation("(initial.x, initial.xdot) = (0, 0) is a rest state; no law can "
                              "steer mu from it");
    }
  }

  std::string to_toml() const {
    std::ostringstream os;
    os << "[system]\n";
    os << "kind = \"" << system_kind_name(system) << "\"\n";
    os << "mu0 = " << format_g17(mu0) << "\n";
    if (is_oscillator()) {
      os << "omega = " << format_g17(omega) << "\n";
      os << "lambda = " << format_g17(lambda) << "\n";
    }
    os << "\n[law]\n";
    os << "kind = \"" << law_kind << "\"\n";
    if (law_kind == "log" || law_kind == "bounded_osc") {
      os << "a = " << format_g17(law_a) << "\n";
      os << "b = " << format_g17(law_b) << "\n";
    }
    if (law_kind == "custom") {
      os << "f = \"" << law_f << "\"\n";
      os << "g = \"" << law_g << "\"\n";
    }
    os << "\n[initial]\n";
    os << "x = " << format_g17(x0) << "\n";
    if (is_oscillator()) os << "xdot = " << format_g17(xdot0) << "\n";
    os << "mu = " << format_g17(mu_init) << "\n";
    os << "\n[run]\n";
    if (horizon) os << "horizon = " << format_g17(*horizon) << "\n";
    os << "seed = " << seed << "\n";
    os << "settle_band = " << format_g17(settle_band) << "\n";
    os << "\n[integrator]\n";
    os << "mode = \""
       << (integrator.mode == IntegratorConfig::Mode::fixed ? "fixed" : "adaptive") << "\"\n";
    if (integrator.mode == IntegratorConfig::Mode::fixed)
      os << "step = " << format_g17(integrator.step) << "\n";
    os << "abs_tol = " << format_g17(integrator.abs_tol) << "\n";
    os << "rel_tol = " << format_g17(integrator.rel_tol) << "\n";
    os << "max_steps = " << integrator.max_steps << "\n";
    if (system == SystemKind::first_order) os << "positivity = \"" << positivity << "\"\n";
    if (pert_epsilon) {
      os << "\n[perturbation]\n";
      os << "epsilon = " << format_g17(*pert_epsilon) << "\n";
      os << "signal = \"" << pert_signal << "\"\n";
    }
    if (!forcing_signal.empty() || forcing_frequency) {
      os << "\n[forcing]\n";
      if (!forcing_signal.empty()) os << "signal = \"" << forcing_signal << "\"\n";
      if (forcing_frequency) os << "frequency = " << format_g17(*forcing_frequency) << "\n";
    }
    return os.str();
  }
};

// ---- config text parsing ----

namespace detail {

struct ConfigMap {
  std::map<std::string, std::string> values;  // "section.key" -> raw value
  std::string path;

  bool has(const std::string& key) const { return values.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback = {}) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    std::string v = it->second;
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    return v;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
      std::size_t used = 0;
      const double v = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ValidationError("config " + path + ": key '" + key + "' is not a number: '" +
                            it->second + "'");
    }
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
      return std::stoull(it->second);
    } catch (const std::exception&) {
      throw ValidationError("config " + path + ": key '" + key + "' is not an integer");
    }
  }
};

inline std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline ConfigMap parse_config_text(const std::string& text, const std::string& path) {
  ConfigMap cfg;
  cfg.path = path;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    // strip comments outside quotes
    bool in_quote = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_quote = !in_quote;
      if (line[i] == '#' && !in_quote) {
        line = line.substr(0, i);
        break;
      }
    }
    line = strip(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ValidationError("config " + path + ":" + std::to_string(lineno) +
                              ": malformed section header");
      section = strip(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config " + path + ":" + std::to_string(lineno) +
                            ": expected key = value");
    const std::string key = strip(line.substr(0, eq));
    const std::string val = strip(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ValidationError("config " + path + ":" + std::to_string(lineno) +
                            ": empty key or value");
    cfg.values[section.empty() ? key : section + "." + key] = val;
  }
  return cfg;
}

}  // namespace detail

inline Scenario scenario_from_text(const std::string& text, const std::string& path = "<text>") {
  const auto cfg = detail::parse_config_text(text, path);
  Scenario sc;

  const std::string kind = cfg.get_string("system.kind", "first_order");
  if (kind == "first_order") sc.system = SystemKind::first_order;
  else if (kind == "oscillator") sc.system = SystemKind::oscillator;
  else if (kind == "oscillator_full") sc.system = SystemKind::oscillator_full;
  else throw ValidationError("config " + path + ": unknown system.kind '" + kind + "'");

  sc.mu0 = cfg.get_double("system.mu0", 0.0);
  sc.omega = cfg.get_double("system.omega", 1.0);
  sc.lambda = cfg.get_double("system.lambda", 0.0);

  sc.law_kind = cfg.get_string("law.kind", "log");
  sc.law_a = cfg.get_double("law.a", 1.0);
  sc.law_b = cfg.get_double("law.b", 1.0);
  sc.law_f = cfg.get_string("law.f");
  sc.law_g = cfg.get_string("law.g");

  sc.x0 = cfg.get_double("initial.x", 1.0);
  sc.xdot0 = cfg.get_double("initial.xdot", 0.0);
  sc.mu_init = cfg.get_double("initial.mu", 0.0);

  if (cfg.has("run.horizon")) sc.horizon = cfg.get_double("run.horizon", 0.0);
  sc.seed = cfg.get_u64("run.seed", 0);
  sc.settle_band = cfg.get_double("run.settle_band", 1e-4);

  const std::string mode = cfg.get_string("integrator.mode", "adaptive");
  if (mode == "adaptive") sc.integrator.mode = IntegratorConfig::Mode::adaptive;
  else if (mode == "fixed") sc.integrator.mode = IntegratorConfig::Mode::fixed;
  else throw ValidationError("config " + path + ": unknown integrator.mode '" + mode + "'");
  sc.integrator.step = cfg.get_double("integrator.step", 1e-3);
  sc.integrator.abs_tol = cfg.get_double("integrator.abs_tol", 1e-9);
  sc.integrator.rel_tol = cfg.get_double("integrator.rel_tol", 1e-9);
  sc.integrator.max_steps = cfg.get_u64("integrator.max_steps", 100'000'000);
  sc.integrator.domain_guard = true;
  sc.positivity = cfg.get_string("integrator.positivity", "guard");

  if (cfg.has("perturbation.epsilon")) {
    sc.pert_epsilon = cfg.get_double("perturbation.epsilon", 0.0);
    sc.pert_signal = cfg.get_string("perturbation.signal");
  }
  sc.forcing_signal = cfg.get_string("forcing.signal");
  if (cfg.has("forcing.frequency"))
    sc.forcing_frequency = cfg.get_double("forcing.frequency", 1.0);

  sc.validate();
  return sc;
}

inline Scenario load_scenario(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) throw ValidationError("cannot open config file '" + file_path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return scenario_from_text(ss.str(), file_path);
}

// Sets a numeric scenario parameter by dotted path (used by sweeps).
inline void set_scenario_param(Scenario& sc, const std::string& name, double value) {
  if (name == "system.mu0") sc.mu0 = value;
  else if (name == "system.omega") sc.omega = value;
  else if (name == "system.lambda") sc.lambda = value;
  else if (name == "law.a") sc.law_a = value;
  else if (name == "law.b") sc.law_b = value;
  else if (name == "initial.x") sc.x0 = value;
  else if (name == "initial.xdot") sc.xdot0 = value;
  else if (name == "initial.mu") sc.mu_init = value;
  else if (name == "run.horizon") sc.horizon = value;
  else if (name == "perturbation.epsilon") sc.pert_epsilon = value;
  else if (name == "forcing.frequency") sc.forcing_frequency = value;
  else throw ValidationError("unknown sweep parameter '" + name + "'");
  sc.validate();
}

// ---- simulation ----

struct RunReport {
  double final_mu_error = 0.0;
  bool settled = false;
  double settle_time = 0.0;  // valid when settled
  double final_distance = 0.0;
  double tail_distance = 0.0;  // sup chart distance over the last quarter of the horizon
  double final_amplitude = std::numeric_limits<double>::quiet_NaN();  // oscillator polar radius
  std::uint64_t accepted = 0, rejected = 0;
  std::uint64_t seed = 0;
  double horizon = 0.0;
};

struct SimulationResult {
  Scenario scenario;
  std::variant<Trajectory<2>, Trajectory<3>> trajectory;
  RunReport report;

  bool first_order() const { return trajectory.index() == 0; }
  const Trajectory<2>& traj2() const { return std::get<0>(trajectory); }
  const Trajectory<3>& traj3() const { return std::get<1>(trajectory); }
};

namespace detail {

// First time after which |mu - mu0| stays inside the band until the end.
template <std::size_t N>
void fill_settle(RunReport& rep, const Trajectory<N>& traj, std::size_t mu_index, double mu0,
                 double band) {
  std::size_t last_violation = traj.size();  // sentinel: none
  for (std::size_t i = traj.size(); i-- > 0;) {
    if (std::abs(traj.states[i][mu_index] - mu0) > band) {
      last_violation = i;
      break;
    }
  }
  if (last_violation == traj.size()) {
    rep.settled = true;
    rep.settle_time = traj.times.front();
  } else if (last_violation + 1 < traj.size()) {
    rep.settled = true;
    rep.settle_time = traj.times[last_violation + 1];
  } else {
    rep.settled = false;
    rep.settle_time = traj.times.back();
  }
}

}  // namespace detail

inline SimulationResult run_scenario(const Scenario& sc) {
  sc.validate();
  const double T = sc.effective_horizon();

  SimulationResult res;
  res.scenario = sc;
  res.report.seed = sc.seed;
  res.report.horizon = T;

  if (sc.system == SystemKind::first_order) {
    const auto loop = sc.make_first_order_loop();
    Trajectory<2> traj;
    if (sc.positivity == "log_chart") {
      // Exact-positivity mode: integrate in the (q, p) chart and map back.
      const auto sys = log_chart_system(loop);
      const State<2> z0 = sys.to_chart({sc.x0, sc.mu_init});
      auto chart_traj = integrate<2>(
          [&sys](const State<2>& z, double t) { return sys.field(z, t); }, z0, 0.0, T,
          sc.integrator);
      traj.times = chart_traj.times;
      traj.stats = chart_traj.stats;
      traj.states.reserve(chart_traj.size());
      for (const auto& z : chart_traj.states) traj.states.push_back(sys.from_chart(z));
    } else {
      RunHooks<2> hooks;
      hooks.guard = [](const State<2>& y) { return FirstOrderLoop::guard(y); };
      traj = integrate<2>([&loop](const State<2>& y, double t) { return loop(y, t); },
                          {sc.x0, sc.mu_init}, 0.0, T, sc.integrator, hooks);
    }
    res.report.final_mu_error = std::abs(traj.back()[1] - sc.mu0);
    // Chart distances need the equilibrium amplitude; laws without one
    // (e.g. frozen custom laws) still report the mu error.
    try {
      const double x_star = loop.x_star();
      res.report.final_distance =
          std::hypot(std::log(traj.back()[0]) - std::log(x_star), traj.back()[1] - sc.mu0);
      for (std::size_t i = 0; i < traj.size(); ++i) {
        if (traj.times[i] < 0.75 * T) continue;
        const double d = std::hypot(std::log(traj.states[i][0]) - std::log(x_star),
                                    traj.states[i][1] - sc.mu0);
        res.report.tail_distance = std::max(res.report.tail_distance, d);
      }
    } catch (const NotInImage&) {
      res.report.final_distance = std::numeric_limits<double>::quiet_NaN();
      res.report.tail_distance = std::numeric_limits<double>::quiet_NaN();
    }
    detail::fill_settle(res.report, traj, 1, sc.mu0, sc.settle_band);
    res.report.accepted = traj.stats.accepted;
    res.report.rejected = traj.stats.rejected;
    res.trajectory = std::move(traj);
  } else {
    const auto loop = sc.make_oscillator_loop();
    RunHooks<3> hooks;
    hooks.guard = [](const State<3>& y) { return OscillatorLoop::guard(y); };
    auto traj = integrate<3>([&loop](const State<3>& y, double t) { return loop(y, t); },
                             {sc.x0, sc.xdot0, sc.mu_init}, 0.0, T, sc.integrator, hooks);
    res.report.final_mu_error = std::abs(traj.back()[2] - sc.mu0);
    const auto& yf = traj.back();
    const double r = std::hypot(yf[0], yf[1] / sc.omega);
    res.report.final_amplitude = r;
    try {
      const double r_star = loop.r_star();
      res.report.final_distance = std::hypot(std::log(r) - std::log(r_star), yf[2] - sc.mu0);
      for (std::size_t i = 0; i < traj.size(); ++i) {
        if (traj.times[i] < 0.75 * T) continue;
        const auto& y = traj.states[i];
        const double ri = std::hypot(y[0], y[1] / sc.omega);
        const double d = std::hypot(std::log(ri) - std::log(r_star), y[2] - sc.mu0);
        res.report.tail_distance = std::max(res.report.tail_distance, d);
      }
    } catch (const NotInImage&) {
      res.report.final_distance = std::numeric_limits<double>::quiet_NaN();
      res.report.tail_distance = std::numeric_limits<double>::quiet_NaN();
    }
    detail::fill_settle(res.report, traj, 2, sc.mu0, sc.settle_band);
    res.report.accepted = traj.stats.accepted;
    res.report.rejected = traj.stats.rejected;
    res.trajectory = std::move(traj);
  }
  return res;
}

// CSV with header t,x,mu (first-order) or t,x,xdot,mu (oscillator);
// 17 significant digits so values round-trip exactly.
inline std::string trajectory_csv(const SimulationResult& res) {
  std::ostringstream os;
  if (res.first_order()) {
    os << "t,x,mu\n";
    const auto& tr = res.traj2();
    for (std::size_t i = 0; i < tr.size(); ++i)
      os << format_g17(tr.times[i]) << ',' << format_g17(tr.states[i][0]) << ','
         << format_g17(tr.states[i][1]) << '\n';
  } else {
    os << "t,x,xdot,mu\n";
    const auto& tr = res.traj3();
    for (std::size_t i = 0; i < tr.size(); ++i)
      os << format_g17(tr.times[i]) << ',' << format_g17(tr.states[i][0]) << ','
         << format_g17(tr.states[i][1]) << ',' << format_g17(tr.states[i][2]) << '\n';
  }
  return os.str();
}

// ---- parameter sweeps ----

struct SweepRow {
  std::string param;
  double value = 0.0;
  bool ok = false;
  std::string error;
  RunReport report;
  double floquet_spectral_radius = std::numeric_limits<double>::quiet_NaN();
};

inline std::vector<SweepRow> run_sweep(const Scenario& base, const std::string& param,
                                       const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("sweep: empty value list");
  std::vector<SweepRow> rows;
  for (double v : values) {
    SweepRow row;
    row.param = param;
    row.value = v;
    try {
      Scenario sc = base;
      set_scenario_param(sc, param, v);
      auto res = run_scenario(sc);
      row.report = res.report;
      row.ok = true;
      if (sc.is_oscillator()) {
        try {
          const auto fl = floquet_multipliers(sc.make_law(), sc.mu0, sc.omega,
                                              FloquetMode::reduced, false);
          row.floquet_spectral_radius = fl.spectral_radius;
        } catch (const Error&) {
          // laws without an equilibrium amplitude have no multipliers
        }
      }
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "param,value,status,final_mu_error,residual,settle_time,final_amplitude,"
        "floquet_spectral_radius,error\n";
  for (const auto& r : rows) {
    os << r.param << ',' << format_g17(r.value) << ',' << (r.ok ? "ok" : "error") << ',';
    if (r.ok) {
      os << format_g17(r.report.final_mu_error) << ','
         << (std::isnan(r.report.tail_distance) ? std::string()
                                                : format_g17(r.report.tail_distance))
         << ','
         << (r.report.settled ? format_g17(r.report.settle_time) : std::string()) << ','
         << (std::isnan(r.report.final_amplitude) ? std::string()
                                                  : format_g17(r.report.final_amplitude))
         << ','
         << (std::isnan(r.floquet_spectral_radius) ? std::string()
                                                   : format_g17(r.floquet_spectral_radius))
         << ',';
    } else {
      os << ",,,,,";
    }
    std::string err = r.error;
    for (char& c : err)
      if (c == ',' || c == '\n') c = ';';
    os << err << '\n';
  }
  return os.str();
}

// ---- perturbed families for the stability falsifiers ----

inline FirstOrderFamily make_first_order_family(const Scenario& sc) {
  if (sc.system != SystemKind::first_order)
    throw ValidationError("first-order family requires system.kind = \"first_order\"");
  if (sc.pert_signal.empty())
    throw ValidationError("certification requires a [perturbation] signal in the scenario");
  return FirstOrderFamily(FirstOrderModel(sc.mu0, sc.make_forcing()), sc.make_law(),
                          Signal::parse(sc.pert_signal));
}

inline OscillatorFamily make_oscillator_family(const Scenario& sc) {
  if (sc.system == SystemKind::first_order)
    throw ValidationError("oscillator family requires an oscillator scenario");
  if (sc.pert_signal.empty())
    throw ValidationError("certification requires a [perturbation] signal in the scenario");
  return OscillatorFamily(OscillatorModel(sc.mu0, sc.omega, sc.lambda, sc.make_forcing()),
                          sc.make_law(), Signal::parse(sc.pert_signal));
}

// ---- forced gain curve ----

struct GainPoint {
  double amplitude_in = 0.0;   // forcing amplitude F
  double amplitude_out = 0.0;  // max |x| over the last quarter of the horizon
  double local_slope = std::numeric_limits<double>::quiet_NaN();  // dlnA/dlnF vs previous row
  bool unsettled = false;      // estimate varied > 5% across the window
};

// Response amplitude of the full oscillator under u(t) = F cos(w_f t) for
// each F in `amplitudes`. Requires lambda > 0 so responses saturate.
inline std::vector<GainPoint> gain_curve(const Scenario& base,
                                         const std::vector<double>& amplitudes) {
  if (base.system != SystemKind::oscillator_full)
    throw ValidationError("gain-curve requires system.kind = \"oscillator_full\"");
  if (!(base.lambda > 0.0)) throw ValidationError("gain-curve requires system.lambda > 0");
  if (amplitudes.empty()) throw ValidationError("gain-curve: empty amplitude list");
  for (std::size_t i = 1; i < amplitudes.size(); ++i)
    if (!(amplitudes[i] > amplitudes[i - 1]) || !(amplitudes[i - 1] >= 0.0))
      throw ValidationError("gain-curve: amplitudes must be nonnegative and increasing");

  const double w_f = base.forcing_frequency ? *base.forcing_frequency : base.omega;
  std::vector<GainPoint> points;
  for (double F : amplitudes) {
    Scenario sc = base;
    sc.forcing_signal =
        (F == 0.0) ? std::string() : format_g17(F) + "*cos(" + format_g17(w_f) + "*t)";
    auto res = run_scenario(sc);
    const auto& tr = res.traj3();
    const double T = sc.effective_horizon();
    double amp = 0.0, amp_first = 0.0, amp_second = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const double t = tr.times[i];
      if (t < 0.75 * T) continue;
      const double ax = std::abs(tr.states[i][0]);
      amp = std::max(amp, ax);
      if (t < 0.875 * T) amp_first = std::max(amp_first, ax);
      else amp_second = std::max(amp_second, ax);
    }
    GainPoint pt;
    pt.amplitude_in = F;
    pt.amplitude_out = amp;
    pt.unsettled =
        std::abs(amp_first - amp_second) > 0.05 * std::max({amp_first, amp_second, 1e-300});
    if (!points.empty() && points.back().amplitude_in > 0.0 && F > 0.0 &&
        points.back().amplitude_out > 0.0 && amp > 0.0)
      pt.local_slope = std::log(amp / points.back().amplitude_out) /
                       std::log(F / points.back().amplitude_in);
    points.push_back(pt);
  }
  return points;
}

inline std::string gain_csv(const std::vector<GainPoint>& points) {
  std::ostringstream os;
  os << "forcing_amplitude,response_amplitude,local_slope,unsettled\n";
  for (const auto& p : points) {
    os << format_g17(p.amplitude_in) << ',' << format_g17(p.amplitude_out) << ','
       << (std::isnan(p.local_slope) ? std::string() : format_g17(p.local_slope)) << ','
       << (p.unsettled ? "1" : "0") << '\n';
  }
  return os.str();
}

}  // namespace biftune
