#pragma once

// Empirical falsifiers for the practical/semiglobal stability notions used
// by the perturbed-system results. A numerical search can only disprove a
// universally quantified stability property, so outcomes are "falsified"
// (with a replayable witness) or "not falsified within budget" - never a
// claim of proof.
//
// Distances to the attractor are measured in the proof charts:
// sqrt(q^2 + p^2), with q the log-amplitude offset and p = mu - mu0.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "biftune/adaptation.hpp"
#include "biftune/dynamics.hpp"
#include "biftune/errors.hpp"
#include "biftune/ode.hpp"
#include "biftune/smallmat.hpp"

namespace biftune {

struct FalsifyBudget {
  std::vector<double> epsilons{1e-1, 3e-2, 1e-2, 3e-3};
  int points_per_shell = 24;
  int shells = 3;        // candidate U1 (or K sampling) radii per check
  int start_times = 4;
  double horizon = 500.0;
  double abs_tol = 1e-9;
  double rel_tol = 1e-9;
  std::uint64_t max_steps = 100'000'000;
};

struct Witness {
  double epsilon = 0.0;
  double t0 = 0.0;
  std::vector<double> initial_state;  // original coordinates
  double shell_radius = 0.0;          // chart radius the start was sampled on
  double threshold = 0.0;             // distance bound that was crossed
  double escape_time = 0.0;
  double escape_distance = 0.0;
  std::vector<double> excerpt_times;
  std::vector<std::vector<double>> excerpt_states;
};

struct ClauseResult {
  std::string clause;
  bool falsified = false;
  std::optional<Witness> witness;
  std::uint64_t trajectories = 0;
  double worst_value = 0.0;  // clause diagnostic: max distance / latest settle time
  std::string note;
};

struct Verdict {
  bool falsified = false;
  std::vector<ClauseResult> clauses;
  std::vector<double> tested_epsilons;
  std::vector<double> u1_radii;  // candidate inner radii (or K shells)
  double u2_radius = 0.0;
  double k_radius = 0.0;
  double u_radius = 0.0;
  double horizon = 0.0;
  std::uint64_t trajectories = 0;
  std::vector<std::string> notes;  // integration failures etc.

  bool not_falsified() const { return !falsified; }
};

// ---- families: a closed loop with the perturbation magnitude left free ----

struct FirstOrderFamily {
  static constexpr std::size_t dim = 2;
  using Loop = FirstOrderLoop;

  FirstOrderModel model;
  AdaptationLaw law;
  Signal perturbation_shape;
  double x_star;

  FirstOrderFamily(FirstOrderModel m, AdaptationLaw l, Signal shape)
      : model(std::move(m)),
        law(std::move(l)),
        perturbation_shape(std::move(shape)),
        x_star(equilibrium_point(law, model.mu0)) {}

  FirstOrderLoop loop(double eps) const {
    return FirstOrderLoop(model, law, Perturbation(eps, perturbation_shape));
  }

  double distance(const State<2>& y) const {
    const double q = std::log(y[0]) - std::log(x_star);
    const double p = y[1] - model.mu0;
    return std::hypot(q, p);
  }

  // k-th of n points on the chart circle of the given radius.
  State<2> shell_point(double radius, int k, int n) const {
    const double th = 2.0 * M_PI * double(k) / double(n);
    const double q = radius * std::cos(th), p = radius * std::sin(th);
    return {x_star * std::exp(q), model.mu0 + p};
  }

  State<2> residual_start() const { return {x_star * std::exp(0.5), model.mu0 + 0.5}; }

  std::optional<double> time_period() const { return perturbation_shape.time_period(); }

  static bool guard(const State<2>& y) { return FirstOrderLoop::guard(y); }
};

struct OscillatorFamily {
  static constexpr std::size_t dim = 3;
  using Loop = OscillatorLoop;

  OscillatorModel model;
  AdaptationLaw law;
  Signal perturbation_shape;
  double r_star;

  OscillatorFamily(OscillatorModel m, AdaptationLaw l, Signal shape)
      : model(std::move(m)),
        law(std::move(l)),
        perturbation_shape(std::move(shape)),
        r_star(equilibrium_point(law, model.mu0)) {}

  OscillatorLoop loop(double eps) const {
    return OscillatorLoop(model, law, Perturbation(eps, perturbation_shape));
  }

  // Distance in the (q, p) chart; the phase is free on the orbit.
  double distance(const State<3>& y) const {
    const double r = std::hypot(y[0], y[1] / model.omega);
    const double q = std::log(r) - std::log(r_star);
    const double p = y[2] - model.mu0;
    return std::hypot(q, p);
  }

  // Chart circle in (q, p) paired with a golden-angle phase sweep.
  State<3> shell_point(double radius, int k, int n) const {
    const double th = 2.0 * M_PI * double(k) / double(n);
    const double golden = 0.6180339887498949;
    const double phi = 2.0 * M_PI * std::fmod(golden * double(k), 1.0);
    const double q = radius * std::cos(th), p = radius * std::sin(th);
    const auto [x, xdot] = polar_chart_inverse(r_star * std::exp(q), phi, model.omega);
    return {x, xdot, model.mu0 + p};
  }

  State<3> residual_start() const {
    const auto [x, xdot] = polar_chart_inverse(r_star * std::exp(0.5), 0.0, model.omega);
    return {x, xdot, model.mu0 + 0.5};
  }

  std::optional<double> time_period() const { return perturbation_shape.time_period(); }

  static bool guard(const State<3>& y) { return OscillatorLoop::guard(y); }
};

namespace detail {

inline std::vector<double> start_time_grid(const std::optional<double>& period, int count) {
  if (period && *period == 0.0) return {0.0};  // time-invariant perturbation
  if (period && *period > 0.0) {
    std::vector<double> g;
    for (int i = 0; i < count; ++i) g.push_back(*period * double(i) / double(count));
    return g;
  }
  std::vector<double> g{0.0, 1.0, 10.0, 100.0};
  g.resize(std::min<std::size_t>(g.size(), std::size_t(count)));
  return g;
}

template <class Family>
struct TrajectoryProbe {
  bool escaped = false;
  double escape_time = 0.0;
  double max_distance = 0.0;
  double last_outside = -1.0;  // last time (relative to t0) the distance exceeded `inner`
  bool failed = false;
  std::string failure;
  Trajectory<Family::dim> traj;
};

// Runs one trajectory of family.loop(eps) from y0 at t0 for `horizon` time
// units, streaming distance diagnostics. `escape_at` > 0 stops the run once
// the distance exceeds it; `inner` >= 0 tracks the last exit time from the
// inner ball.
template <class Family>
TrajectoryProbe<Family> probe_trajectory(const Family& fam, double eps,
                                         const State<Family::dim>& y0, double t0,
                                         const FalsifyBudget& budget, double escape_at,
                                         double inner) {
  constexpr std::size_t N = Family::dim;
  TrajectoryProbe<Family> out;
  RunHooks<N> hooks;
  hooks.guard = [](const State<N>& y) { return Family::guard(y); };
  hooks.stop = [&](const State<N>& y, double t) {
    const double d = fam.distance(y);
    out.max_distance = std::max(out.max_distance, d);
    if (inner >= 0.0 && d > inner) out.last_outside = t - t0;
    if (escape_at > 0.0 && d > escape_at) {
      out.escaped = true;
      out.escape_time = t;
      return true;
    }
    return false;
  };
  const auto loop = fam.loop(eps);
  try {
    out.traj = integrate_adaptive<N>([&loop](const State<N>& y, double t) { return loop(y, t); },
                                     y0, t0, t0 + budget.horizon, budget.abs_tol, budget.rel_tol,
                                     hooks, 0.0, budget.max_steps);
  } catch (const Error& e) {
    out.failed = true;
    out.failure = e.what();
  }
  return out;
}

template <class Family>
Witness make_witness(const Family& fam, double eps, double t0, const State<Family::dim>& y0,
                     double shell_radius, double threshold,
                     const TrajectoryProbe<Family>& probe) {
  Witness w;
  w.epsilon = eps;
  w.t0 = t0;
  w.initial_state.assign(y0.begin(), y0.end());
  w.shell_radius = shell_radius;
  w.threshold = threshold;
  w.escape_time = probe.escape_time;
  w.escape_distance = fam.distance(probe.traj.back());
  const std::size_t n = probe.traj.size();
  const std::size_t first = (n > 10) ? n - 10 : 0;
  for (std::size_t i = first; i < n; ++i) {
    w.excerpt_times.push_back(probe.traj.times[i]);
    w.excerpt_states.emplace_back(probe.traj.states[i].begin(), probe.traj.states[i].end());
  }
  return w;
}

}  // namespace detail

// Uniform practical stability (neighborhood-to-neighborhood containment):
// starts are sampled on candidate inner shells U1 = u2_radius/4 * 2^-i; a
// run escapes when its chart distance exceeds u2_radius before the horizon.
// Falsified only if, at the smallest tested epsilon, every candidate U1
// produced an escape.
template <class Family>
Verdict falsify_practical_stability(const Family& fam, double u2_radius,
                                    const FalsifyBudget& budget = {}) {
  if (!(u2_radius > 0.0))
    throw ValidationError("falsify_practical_stability: u2_radius must be > 0");
  if (budget.epsilons.empty())
    throw ValidationError("falsify_practical_stability: epsilon list must not be empty");

  Verdict verdict;
  verdict.u2_radius = u2_radius;
  verdict.horizon = budget.horizon;
  verdict.tested_epsilons = budget.epsilons;
  for (int i = 0; i < budget.shells; ++i)
    verdict.u1_radii.push_back(u2_radius / 4.0 * std::pow(2.0, -double(i)));

  double eps_min = budget.epsilons.front();
  for (double e : budget.epsilons) eps_min = std::min(eps_min, e);

  const auto t0s = detail::start_time_grid(fam.time_period(), budget.start_times);

  ClauseResult clause;
  clause.clause = "practical_stability";
  bool all_u1_escape_at_min_eps = !verdict.u1_radii.empty();
  std::optional<Witness> witness;

  for (double eps : budget.epsilons) {
    for (double u1 : verdict.u1_radii) {
      bool escaped_this_pair = false;
      for (double t0 : t0s) {
        for (int k = 0; k < budget.points_per_shell && !escaped_this_pair; ++k) {
          const auto y0 = fam.shell_point(u1, k, budget.points_per_shell);
          auto probe = detail::probe_trajectory(fam, eps, y0, t0, budget, u2_radius, -1.0);
          clause.trajectories++;
          if (probe.failed) {
            verdict.notes.push_back("integration_failure eps=" + std::to_string(eps) +
                                    " t0=" + std::to_string(t0) + ": " + probe.failure);
            continue;
          }
          clause.worst_value = std::max(clause.worst_value, probe.max_distance);
          if (probe.escaped) {
            escaped_this_pair = true;
            if (eps == eps_min && (!witness || u1 <= witness->shell_radius))
              witness = detail::make_witness(fam, eps, t0, y0, u1, u2_radius, probe);
          }
        }
        if (escaped_this_pair) break;
      }
      if (eps == eps_min && !escaped_this_pair) all_u1_escape_at_min_eps = false;
    }
  }

  clause.falsified = all_u1_escape_at_min_eps;
  clause.witness = witness;
  if (!clause.falsified)
    clause.note = "no candidate U1 escape pattern at eps=" + std::to_string(eps_min) +
                  "; max distance seen " + std::to_string(clause.worst_value);
  verdict.trajectories = clause.trajectories;
  verdict.falsified = clause.falsified;
  verdict.clauses.push_back(std::move(clause));
  return verdict;
}

// Uniform semiglobal practical asymptotic stability: three falsification
// clauses. (1) practical stability with U2 = u_radius; (2) semiglobal
// boundedness from shells covering the compact K (escape bound
// 20 k_radius + 10); (3) convergence from K into the U ball with the tail
// required to stay inside from 75% of the horizon on.
template <class Family>
Verdict falsify_semiglobal_practical(const Family& fam, double k_radius, double u_radius,
                                     const FalsifyBudget& budget = {}) {
  if (!(k_radius > u_radius) || !(u_radius > 0.0))
    throw ValidationError("falsify_semiglobal_practical: need k_radius > u_radius > 0");
  if (budget.epsilons.empty())
    throw ValidationError("falsify_semiglobal_practical: epsilon list must not be empty");

  Verdict verdict = falsify_practical_stability(fam, u_radius, budget);
  verdict.k_radius = k_radius;
  verdict.u_radius = u_radius;

  double eps_min = budget.epsilons.front();
  for (double e : budget.epsilons) eps_min = std::min(eps_min, e);
  const auto t0s = detail::start_time_grid(fam.time_period(), budget.start_times);

  std::vector<double> k_shells;
  for (int i = 0; i < budget.shells; ++i) k_shells.push_back(k_radius * std::pow(2.0, -double(i)));
  const double escape_bound = 20.0 * k_radius + 10.0;
  const double settle_deadline = 0.75 * budget.horizon;

  ClauseResult bounded;
  bounded.clause = "semiglobal_boundedness";
  ClauseResult converge;
  converge.clause = "convergence_from_K";

  std::optional<Witness> bounded_wit, converge_wit;
  bool bounded_falsified_at_min = false, converge_falsified_at_min = false;

  for (double eps : budget.epsilons) {
    for (double shell : k_shells) {
      for (double t0 : t0s) {
        for (int k = 0; k < budget.points_per_shell; ++k) {
          const auto y0 = fam.shell_point(shell, k, budget.points_per_shell);
          auto probe = detail::probe_trajectory(fam, eps, y0, t0, budget, escape_bound, u_radius);
          bounded.trajectories++;
          converge.trajectories++;
          if (probe.failed) {
            verdict.notes.push_back("integration_failure eps=" + std::to_string(eps) +
                                    " t0=" + std::to_string(t0) + ": " + probe.failure);
            continue;
          }
          bounded.worst_value = std::max(bounded.worst_value, probe.max_distance);
          if (probe.escaped && eps == eps_min) {
            bounded_falsified_at_min = true;
            if (!bounded_wit)
              bounded_wit = detail::make_witness(fam, eps, t0, y0, shell, escape_bound, probe);
          }
          // Last exit from the U ball, relative to t0.
          const double t_last = probe.escaped ? budget.horizon : probe.last_outside;
          converge.worst_value = std::max(converge.worst_value, t_last);
          if (t_last > settle_deadline && eps == eps_min) {
            converge_falsified_at_min = true;
            if (!converge_wit) {
              converge_wit = detail::make_witness(fam, eps, t0, y0, shell, u_radius, probe);
              converge_wit->escape_time = t0 + t_last;
            }
          }
        }
      }
    }
  }

  bounded.falsified = bounded_falsified_at_min;
  bounded.witness = bounded_wit;
  bounded.note = "escape bound " + std::to_string(escape_bound) + "; max distance seen " +
                 std::to_string(bounded.worst_value) + " (K2 estimate)";
  converge.falsified = converge_falsified_at_min;
  converge.witness = converge_wit;
  converge.note = "latest exit from U at t0+" + std::to_string(converge.worst_value) +
                  "; deadline t0+" + std::to_string(settle_deadline);

  verdict.trajectories += bounded.trajectories + converge.trajectories;
  verdict.clauses.push_back(std::move(bounded));
  verdict.clauses.push_back(std::move(converge));
  verdict.falsified = false;
  for (const auto& c : verdict.clauses) verdict.falsified = verdict.falsified || c.falsified;
  return verdict;
}

// Residual size of the attractor neighborhood as a function of epsilon:
// simulate from a fixed chart offset, report the sup of the chart distance
// over the last quarter of the horizon.
template <class Family>
std::vector<std::pair<double, double>> epsilon_residual_sweep(const Family& fam,
                                                              const std::vector<double>& epsilons,
                                                              double horizon = 200.0,
                                                              double abs_tol = 1e-9,
                                                              double rel_tol = 1e-9) {
  constexpr std::size_t N = Family::dim;
  std::vector<std::pair<double, double>> out;
  for (double eps : epsilons) {
    const auto loop = fam.loop(eps);
    RunHooks<N> hooks;
    hooks.guard = [](const State<N>& y) { return Family::guard(y); };
    const auto traj =
        integrate_adaptive<N>([&loop](const State<N>& y, double t) { return loop(y, t); },
                              fam.residual_start(), 0.0, horizon, abs_tol, rel_tol, hooks);
    double residual = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
      if (traj.times[i] < 0.75 * horizon) continue;
      residual = std::max(residual, fam.distance(traj.states[i]));
    }
    out.emplace_back(eps, residual);
  }
  return out;
}

// Re-simulates a falsified witness and reports whether the recorded escape
// reproduces (same threshold crossing within the original horizon).
template <class Family>
bool replay_witness(const Family& fam, const Witness& w, const FalsifyBudget& budget = {}) {
  constexpr std::size_t N = Family::dim;
  State<N> y0{};
  if (w.initial_state.size() != N)
    throw ValidationError("replay_witness: state dimension mismatch");
  for (std::size_t i = 0; i < N; ++i) y0[i] = w.initial_state[i];
  auto probe = detail::probe_trajectory(fam, w.epsilon, y0, w.t0, budget, w.threshold, -1.0);
  return probe.escaped;
}

}  // namespace biftune
