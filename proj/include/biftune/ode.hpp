#pragma once

// Explicit integrators for small non-stiff systems: classic RK4 on a fixed
// grid and a Dormand-Prince 5(4) embedded pair with PI step control, plus
// joint integration of the variational (fundamental matrix) equations.

#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "biftune/errors.hpp"
#include "biftune/smallmat.hpp"

namespace biftune {

struct StepStats {
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
};

template <std::size_t N>
struct Trajectory {
  std::vector<double> times;
  std::vector<State<N>> states;
  StepStats stats;
  bool stopped_early = false;  // a stop predicate ended the run before t1

  std::size_t size() const { return times.size(); }
  const State<N>& back() const { return states.back(); }
  double t_back() const { return times.back(); }
};

struct IntegratorConfig {
  enum class Mode { fixed, adaptive };
  Mode mode = Mode::adaptive;
  double step = 1e-3;       // fixed mode
  double abs_tol = 1e-9;    // adaptive mode
  double rel_tol = 1e-9;
  double initial_step = 0.0;  // 0 = choose automatically
  std::uint64_t max_steps = 100'000'000;
  bool domain_guard = false;
};

// Optional per-run hooks. `guard` returns true while the state is
// admissible; `stop` ends the run early once it returns true.
template <std::size_t N>
struct RunHooks {
  std::function<bool(const State<N>&)> guard;
  std::function<bool(const State<N>&, double)> stop;
};

namespace detail {

template <std::size_t N, class Rhs>
State<N> rk4_step(Rhs& rhs, const State<N>& y, double t, double h) {
  const State<N> k1 = rhs(y, t);
  const State<N> k2 = rhs(axpy(y, h / 2.0, k1), t + h / 2.0);
  const State<N> k3 = rhs(axpy(y, h / 2.0, k2), t + h / 2.0);
  const State<N> k4 = rhs(axpy(y, h, k3), t + h);
  State<N> out;
  for (std::size_t i = 0; i < N; ++i)
    out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

// Dormand-Prince 5(4) coefficients.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
  static constexpr double a21 = 1.0 / 5.0;
  static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                          a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
  static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                          a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
  static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                          b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
  static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                          e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
};

// One DP5 attempt from (t, y) with step h. k1 must hold rhs(y, t) on entry
// (FSAL). On exit ynew/k7/err_norm are filled; k7 is rhs at (t+h, ynew).
template <std::size_t N, class Rhs>
void dopri5_attempt(Rhs& rhs, const State<N>& y, double t, double h, const State<N>& k1,
                    State<N>& ynew, State<N>& k7, double& err_norm, double abs_tol,
                    double rel_tol) {
  using D = Dopri5;
  State<N> tmp;
  for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * D::a21 * k1[i];
  const State<N> k2 = rhs(tmp, t + D::c2 * h);
  for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (D::a31 * k1[i] + D::a32 * k2[i]);
  const State<N> k3 = rhs(tmp, t + D::c3 * h);
  for (std::size_t i = 0; i < N; ++i)
    tmp[i] = y[i] + h * (D::a41 * k1[i] + D::a42 * k2[i] + D::a43 * k3[i]);
  const State<N> k4 = rhs(tmp, t + D::c4 * h);
  for (std::size_t i = 0; i < N; ++i)
    tmp[i] = y[i] + h * (D::a51 * k1[i] + D::a52 * k2[i] + D::a53 * k3[i] + D::a54 * k4[i]);
  const State<N> k5 = rhs(tmp, t + D::c5 * h);
  for (std::size_t i = 0; i < N; ++i)
    tmp[i] = y[i] + h * (D::a61 * k1[i] + D::a62 * k2[i] + D::a63 * k3[i] + D::a64 * k4[i] +
                         D::a65 * k5[i]);
  const State<N> k6 = rhs(tmp, t + h);
  for (std::size_t i = 0; i < N; ++i)
    ynew[i] = y[i] + h * (D::b1 * k1[i] + D::b3 * k3[i] + D::b4 * k4[i] + D::b5 * k5[i] +
                          D::b6 * k6[i]);
  k7 = rhs(ynew, t + h);

  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double e = h * (D::e1 * k1[i] + D::e3 * k3[i] + D::e4 * k4[i] + D::e5 * k5[i] +
                          D::e6 * k6[i] + D::e7 * k7[i]);
    const double sc = abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
    acc += (e / sc) * (e / sc);
  }
  err_norm = std::sqrt(acc / double(N));
}

// Hairer's starting-step heuristic.
template <std::size_t N, class Rhs>
double initial_step_guess(Rhs& rhs, const State<N>& y0, double t0, double span, double abs_tol,
                          double rel_tol) {
  State<N> f0 = rhs(y0, t0);
  double d0 = 0.0, d1 = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double sc = abs_tol + rel_tol * std::abs(y0[i]);
    d0 = std::max(d0, std::abs(y0[i]) / sc);
    d1 = std::max(d1, std::abs(f0[i]) / sc);
  }
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, span);
  State<N> y1 = axpy(y0, h0, f0);
  if (!all_finite(y1)) return std::min(1e-6, span);
  State<N> f1 = rhs(y1, t0 + h0);
  double d2 = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double sc = abs_tol + rel_tol * std::abs(y0[i]);
    d2 = std::max(d2, std::abs(f1[i] - f0[i]) / sc);
  }
  d2 /= h0;
  const double dm = std::max(d1, d2);
  const double h1 = (dm <= 1e-15) ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
  return std::min({100.0 * h0, h1, span});
}

}  // namespace detail

// Classic fixed-step RK4 from t0 to t1; the last step is shortened to land
// on t1 exactly.
template <std::size_t N, class Rhs>
Trajectory<N> integrate_fixed(Rhs&& rhs, const State<N>& y0, double t0, double t1, double h,
                              const RunHooks<N>& hooks = {}) {
  if (!(h > 0.0)) throw ValidationError("integrate_fixed: step must be > 0");
  if (!(t1 >= t0)) throw ValidationError("integrate_fixed: t1 must be >= t0");
  if (!all_finite(y0)) throw NonFiniteState("integrate_fixed: non-finite initial state");
  if (hooks.guard && !hooks.guard(y0))
    throw DomainViolation("integrate_fixed: initial state violates the domain guard");

  Trajectory<N> out;
  out.times.push_back(t0);
  out.states.push_back(y0);
  if (t1 == t0) return out;

  State<N> y = y0;
  double t = t0;
  const double eps_t = 1e-12 * std::max(1.0, std::abs(t1 - t0));
  while (t < t1 - eps_t) {
    const double hs = std::min(h, t1 - t);
    y = detail::rk4_step(rhs, y, t, hs);
    t += hs;
    if (!all_finite(y)) throw NonFiniteState("integrate_fixed: non-finite state at t=" + std::to_string(t));
    if (hooks.guard && !hooks.guard(y))
      throw DomainViolation("integrate_fixed: domain guard violated at t=" + std::to_string(t));
    out.stats.accepted++;
    out.times.push_back(t);
    out.states.push_back(y);
    if (hooks.stop && hooks.stop(y, t)) {
      out.stopped_early = true;
      break;
    }
  }
  return out;
}

// Embedded 5(4) pair with PI step control. Samples are the accepted steps
// plus t1. Guard violations reject the step and halve it; only when the
// step underflows while the guard keeps failing does DomainViolation
// propagate.
template <std::size_t N, class Rhs>
Trajectory<N> integrate_adaptive(Rhs&& rhs, const State<N>& y0, double t0, double t1,
                                 double abs_tol, double rel_tol, const RunHooks<N>& hooks = {},
                                 double initial_step = 0.0,
                                 std::uint64_t max_steps = 100'000'000) {
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
    throw ValidationError("integrate_adaptive: tolerances must be > 0");
  if (!(t1 >= t0)) throw ValidationError("integrate_adaptive: t1 must be >= t0");
  if (!all_finite(y0)) throw NonFiniteState("integrate_adaptive: non-finite initial state");
  if (hooks.guard && !hooks.guard(y0))
    throw DomainViolation("integrate_adaptive: initial state violates the domain guard");

  Trajectory<N> out;
  out.times.push_back(t0);
  out.states.push_back(y0);
  if (t1 == t0) return out;

  const double span = t1 - t0;
  const double h_min = 1e-14 * span;

  State<N> y = y0;
  double t = t0;
  State<N> k1 = rhs(y, t);
  double h = (initial_step > 0.0) ? std::min(initial_step, span)
                                  : detail::initial_step_guess(rhs, y0, t0, span, abs_tol, rel_tol);

  // PI controller (Hairer): fac = safety * err^-alpha * err_prev^beta.
  constexpr double kBeta = 0.04;
  constexpr double kAlpha = 0.2 - 0.75 * kBeta;
  constexpr double kSafety = 0.9;
  double err_prev = 1e-4;

  std::uint64_t steps = 0;
  while (t < t1) {
    if (++steps > max_steps)
      throw StepBudgetExceeded("integrate_adaptive: exceeded max_steps=" + std::to_string(max_steps));
    const bool last = (t + h >= t1);
    const double hs = last ? (t1 - t) : h;

    State<N> ynew, k7;
    double err = 0.0;
    detail::dopri5_attempt(rhs, y, t, hs, k1, ynew, k7, err, abs_tol, rel_tol);

    const bool finite = std::isfinite(err) && all_finite(ynew);
    bool guard_ok = true;
    if (finite && err <= 1.0 && hooks.guard) guard_ok = hooks.guard(ynew);

    if (finite && err <= 1.0 && guard_ok) {
      t += hs;
      y = ynew;
      k1 = k7;
      out.stats.accepted++;
      out.times.push_back(t);
      out.states.push_back(y);
      if (hooks.stop && hooks.stop(y, t)) {
        out.stopped_early = true;
        break;
      }
      const double ers = std::max(err, 1e-10);
      double fac = kSafety * std::pow(ers, -kAlpha) * std::pow(err_prev, kBeta);
      fac = std::min(6.0, std::max(0.2, fac));
      h = std::min(hs * fac, span);
      err_prev = ers;
    } else {
      out.stats.rejected++;
      double fac;
      if (!finite) {
        fac = 0.1;
      } else if (!guard_ok) {
        fac = 0.5;  // halve on guard violation
      } else {
        fac = std::max(0.2, kSafety * std::pow(err, -0.2));
      }
      h = hs * fac;
      if (h < h_min) {
        if (!guard_ok)
          throw DomainViolation("integrate_adaptive: domain guard violated at t=" +
                                std::to_string(t) + " and step underflowed");
        throw StepUnderflow("integrate_adaptive: step underflow at t=" + std::to_string(t));
      }
    }
  }
  return out;
}

// Config-driven entry point used by the scenario runner.
template <std::size_t N, class Rhs>
Trajectory<N> integrate(Rhs&& rhs, const State<N>& y0, double t0, double t1,
                        const IntegratorConfig& cfg, const RunHooks<N>& hooks = {}) {
  RunHooks<N> h = hooks;
  if (!cfg.domain_guard) h.guard = nullptr;
  if (cfg.mode == IntegratorConfig::Mode::fixed)
    return integrate_fixed<N>(std::forward<Rhs>(rhs), y0, t0, t1, cfg.step, h);
  return integrate_adaptive<N>(std::forward<Rhs>(rhs), y0, t0, t1, cfg.abs_tol, cfg.rel_tol, h,
                               cfg.initial_step, cfg.max_steps);
}

// Verifies the supplied Jacobian against central differences at (y0, t0).
// Tolerance is relative to the Jacobian's scale.
template <std::size_t N, class Rhs, class Jac>
void check_jacobian_consistency(Rhs& rhs, Jac& jac, const State<N>& y0, double t0,
                                double rel_tol = 1e-4) {
  const Mat<N> ja = jac(y0, t0);
  Mat<N> jn{};
  for (std::size_t j = 0; j < N; ++j) {
    const double hj = 1e-6 * (1.0 + std::abs(y0[j]));
    State<N> yp = y0, ym = y0;
    yp[j] += hj;
    ym[j] -= hj;
    const State<N> fp = rhs(yp, t0);
    const State<N> fm = rhs(ym, t0);
    for (std::size_t i = 0; i < N; ++i) jn[i][j] = (fp[i] - fm[i]) / (2.0 * hj);
  }
  double scale = 1.0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) scale = std::max(scale, std::abs(ja[i][j]));
  if (max_abs_diff(ja, jn) > rel_tol * scale)
    throw JacobianMismatch("jacobian disagrees with central differences at y0 (max diff " +
                           std::to_string(max_abs_diff(ja, jn)) + ")");
}

// Integrates ydot = rhs(y,t) jointly with the variational equations
// Phidot = J(y,t) Phi, Phi(t0) = I. The trajectory and the fundamental
// matrix share one step sequence; error control covers all components.
template <std::size_t N, class Rhs, class Jac>
std::pair<Trajectory<N>, Mat<N>> integrate_with_variational(Rhs&& rhs, Jac&& jac,
                                                            const State<N>& y0, double t0,
                                                            double t1,
                                                            const IntegratorConfig& cfg) {
  check_jacobian_consistency<N>(rhs, jac, y0, t0);

  constexpr std::size_t M = N + N * N;
  State<M> z0{};
  for (std::size_t i = 0; i < N; ++i) z0[i] = y0[i];
  for (std::size_t i = 0; i < N; ++i) z0[N + i * N + i] = 1.0;

  auto aug = [&](const State<M>& z, double t) {
    State<N> y;
    for (std::size_t i = 0; i < N; ++i) y[i] = z[i];
    const State<N> f = rhs(y, t);
    const Mat<N> J = jac(y, t);
    State<M> dz{};
    for (std::size_t i = 0; i < N; ++i) dz[i] = f[i];
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < N; ++k) acc += J[i][k] * z[N + k * N + j];
        dz[N + i * N + j] = acc;
      }
    return dz;
  };

  Trajectory<M> zt = (cfg.mode == IntegratorConfig::Mode::fixed)
                         ? integrate_fixed<M>(aug, z0, t0, t1, cfg.step)
                         : integrate_adaptive<M>(aug, z0, t0, t1, cfg.abs_tol, cfg.rel_tol, {},
                                                 cfg.initial_step, cfg.max_steps);

  Trajectory<N> traj;
  traj.times = zt.times;
  traj.stats = zt.stats;
  traj.states.reserve(zt.states.size());
  for (const auto& z : zt.states) {
    State<N> y;
    for (std::size_t i = 0; i < N; ++i) y[i] = z[i];
    traj.states.push_back(y);
  }
  Mat<N> phi{};
  const auto& zf = zt.states.back();
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) phi[i][j] = zf[N + i * N + j];
  return {std::move(traj), phi};
}

}  // namespace biftune
