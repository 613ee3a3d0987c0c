#pragma once

// Numerical counterparts of the stability arguments: the integral Lyapunov
// function of the first-order loop, the positive-real / KYP storage check
// for the oscillator loop, the feedback sector identity, equilibrium
// linearization, and Floquet multipliers of the periodic variational
// system.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "biftune/adaptation.hpp"
#include "biftune/dynamics.hpp"
#include "biftune/errors.hpp"
#include "biftune/ode.hpp"
#include "biftune/optim.hpp"
#include "biftune/rng.hpp"
#include "biftune/smallmat.hpp"

namespace biftune {

namespace detail {

// Adaptive Simpson quadrature, absolute tolerance, bounded recursion depth.
template <class F>
double simpson_rec(F& f, double a, double b, double fa, double fm, double fb, double whole,
                   double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-11, int max_depth = 40) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace detail

// ---- Lyapunov function of the first-order loop in the (q, p) chart ----
//
// V(q, p) = integral_0^q ftilde(s) ds + p^2/2 with
// ftilde(q) = -f(e^q x*) + g(mu0) and gtilde(p) = g(p + mu0) - g(mu0).
// Along the nominal loop Vdot = -p gtilde(p) <= 0.
class FirstOrderLyapunov {
 public:
  FirstOrderLyapunov(const AdaptationLaw& law, double mu0)
      : law_(law), mu0_(mu0), x_star_(equilibrium_point(law, mu0)), g_mu0_(law.g(mu0)) {}

  double ftilde(double q) const { return -law_.f(x_star_ * std::exp(q)) + g_mu0_; }
  double gtilde(double p) const { return law_.g(p + mu0_) - g_mu0_; }

  double value(double q, double p) const {
    auto integrand = [this](double s) { return ftilde(s); };
    return detail::adaptive_simpson(integrand, 0.0, q) + 0.5 * p * p;
  }

  double x_star() const { return x_star_; }

 private:
  AdaptationLaw law_;
  double mu0_;
  double x_star_;
  double g_mu0_;
};

inline double lyapunov_value(double q, double p, const AdaptationLaw& law, double mu0) {
  return FirstOrderLyapunov(law, mu0).value(q, p);
}

inline double max_consecutive_increase(const std::vector<double>& values) {
  double m = 0.0;
  for (std::size_t i = 1; i < values.size(); ++i) m = std::max(m, values[i] - values[i - 1]);
  return m;
}

// Largest increase of V between consecutive samples of a trajectory in the
// (q, p) chart. For trajectories of the closed loop this stays within a
// few integrator tolerances of zero.
inline double lyapunov_monotonicity(const ChartTrajectory<2>& traj, const AdaptationLaw& law,
                                    double mu0) {
  if (traj.chart != Chart::log)
    throw ChartMismatch("lyapunov_monotonicity expects a trajectory in the log (q,p) chart, got " +
                        std::string(chart_name(traj.chart)));
  FirstOrderLyapunov V(law, mu0);
  std::vector<double> vals;
  vals.reserve(traj.traj.size());
  for (const auto& z : traj.traj.states) vals.push_back(V.value(z[0], z[1]));
  return max_consecutive_increase(vals);
}

// ---- positive realness and KYP storage ----

// inf over w >= 0 of Re[H(jw) + 1] for H(s) = a/(s(s+b)); equals 1 - a/b^2,
// attained at w = 0. Nonnegative exactly when a <= b^2.
inline double positive_real_margin(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("positive_real_margin: a, b must be > 0");
  return 1.0 - a / (b * b);
}

struct QuadraticForm {
  Mat<2> P{};

  double value(double q, double p) const {
    return 0.5 * (P[0][0] * q * q + 2.0 * P[0][1] * q * p + P[1][1] * p * p);
  }
  bool positive_definite() const {
    return P[0][0] > 0.0 && P[0][0] * P[1][1] - P[0][1] * P[1][0] > 0.0;
  }
};

// Symmetric block matrix of the storage inequality: with V = 0.5 z'Pz along
// qdot = -u, pdot = -a q - b p and output y = p, the form
// Vdot - u p - u^2 equals (q,p,u) M (q,p,u)'.
inline Mat<3> kyp_block(const Mat<2>& P, double a, double b) {
  // A = [[0,0],[-a,-b]], B = (-1,0)', C = (0,1)
  const double s11 = -a * P[0][1];
  const double s12 = -0.5 * (b * P[0][1] + a * P[1][1]);
  const double s22 = -b * P[1][1];
  const double c1 = -0.5 * P[0][0];
  const double c2 = -0.5 * (P[0][1] + 1.0);
  return {{{s11, s12, c1}, {s12, s22, c2}, {c1, c2, -1.0}}};
}

inline double kyp_residual(const Mat<2>& P, double a, double b, double q, double p, double u) {
  const Mat<3> M = kyp_block(P, a, b);
  const State<3> z{q, p, u};
  double acc = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) acc += z[i] * M[i][j] * z[j];
  return acc;
}

struct KypResult {
  QuadraticForm storage;
  double lambda_max = 0.0;  // certified max eigenvalue of the block matrix
};

// Searches for P > 0 with the KYP block matrix negative semidefinite by
// direct minimization of its maximum eigenvalue over (p11, p12, p22):
// multi-start Nelder-Mead, then restarts at shrinking scales, then a
// compass-search polish. The minimum is exactly zero on feasible instances
// (the plant has a pole at s = 0, so the LMI is never strictly feasible);
// feasibility is certified at 1e-9.
inline KypResult kyp_storage(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("kyp_storage: a, b must be > 0");

  auto objective = [a, b](const std::array<double, 3>& v) {
    const Mat<2> P{{{v[0], v[1]}, {v[1], v[2]}}};
    const double m1 = P[0][0];
    const double m2 = P[0][0] * P[1][1] - P[0][1] * P[1][0];
    double pen = 0.0;
    if (m1 < 1e-6) pen += 1e3 * (1e-6 - m1);
    if (m2 < 1e-6) pen += 1e3 * (1e-6 - m2);
    return sym_eigenvalues<3>(kyp_block(P, a, b))[2] + pen;
  };

  std::vector<std::array<double, 3>> starts;
  starts.push_back({1.0, 0.5, 1.0});
  starts.push_back({2.0 * std::sqrt(a), 1.0, 1.0 / b});
  Rng rng(0x5eedULL);
  for (int k = 0; k < 10; ++k)
    starts.push_back({std::exp(rng.uniform(-1.5, 1.5)), rng.uniform(-1.0, 1.0),
                      std::exp(rng.uniform(-1.5, 1.5))});

  std::array<double, 3> best{};
  double best_f = std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    auto [x, fx] = nelder_mead<3>(objective, s, 0.5, 300);
    if (fx < best_f) {
      best = x;
      best_f = fx;
    }
  }
  for (double scale : {1e-2, 1e-5, 1e-8}) {
    auto [x, fx] = nelder_mead<3>(objective, best, scale, 300);
    if (fx < best_f) {
      best = x;
      best_f = fx;
    }
  }
  auto [x, fx] = compass_search<3>(objective, best, best_f, 1e-2, 1e-15);

  QuadraticForm Q{Mat<2>{{{x[0], x[1]}, {x[1], x[2]}}}};
  const double lam = sym_eigenvalues<3>(kyp_block(Q.P, a, b))[2];
  if (!(lam <= 1e-9) || !Q.positive_definite())
    throw Infeasible("kyp_storage: could not certify feasibility for a=" + std::to_string(a) +
                     ", b=" + std::to_string(b) + " (lambda_max=" + std::to_string(lam) +
                     "); a <= b^2 violated or optimizer failure");
  return {Q, lam};
}

// ---- sector identity of the feedback u = -sin^2(phi) p ----
// lhs: u p + u^2 computed literally; rhs: -(sin(phi) cos(phi) p)^2.
inline std::pair<double, double> sector_identity(double phi, double p) {
  const double u = -std::sin(phi) * std::sin(phi) * p;
  const double lhs = u * p + u * u;
  const double sc = std::sin(phi) * std::cos(phi) * p;
  return {lhs, -sc * sc};
}

// ---- linearization of the first-order loop about its equilibrium ----

struct Linearization {
  Mat<2> A{};
  std::complex<double> eig1, eig2;
  bool stable = false;  // both real parts strictly negative
  double x_star = 0.0;
};

// In the (q, p) chart the linearized loop is
//   qdot = p, pdot = f'(x*) x* q - g'(mu0) p.
inline Linearization linearize_equilibrium(const AdaptationLaw& law, double mu0) {
  Linearization lin;
  lin.x_star = equilibrium_point(law, mu0);
  lin.A = {{{0.0, 1.0}, {law.df(lin.x_star) * lin.x_star, -law.dg(mu0)}}};
  auto [e1, e2] = eig2(lin.A);
  lin.eig1 = e1;
  lin.eig2 = e2;
  lin.stable = e1.real() < 0.0 && e2.real() < 0.0;
  return lin;
}

// ---- Floquet multipliers of the periodic variational system ----

enum class FloquetMode { reduced, full };

struct FloquetResult {
  double period = 0.0;
  Mat<2> monodromy{};
  std::complex<double> multiplier1, multiplier2;
  double spectral_radius = 0.0;
  double a_eff = 0.0, b_eff = 0.0;
  double phase_multiplier = 1.0;  // full mode: multiplier along the orbit, = 1 analytically
};

namespace detail {

inline FloquetResult floquet_from_monodromy(const Mat<2>& M, double T, double a_eff,
                                            double b_eff) {
  FloquetResult res;
  res.period = T;
  res.monodromy = M;
  auto [m1, m2] = eig2(M);
  res.multiplier1 = m1;
  res.multiplier2 = m2;
  res.spectral_radius = std::max(std::abs(m1), std::abs(m2));
  res.a_eff = a_eff;
  res.b_eff = b_eff;
  return res;
}

}  // namespace detail

// Monodromy of qdot = sin^2(w t) p, pdot = -a_eff q - b_eff p over one
// orbit period T = 2 pi / w. No hypothesis gate: callers probing unstable
// configurations use this entry point directly.
inline FloquetResult floquet_reduced(double a_eff, double b_eff, double omega,
                                     double tol = 1e-12) {
  if (!(omega > 0.0)) throw ValidationError("floquet_reduced: omega must be > 0");
  const double T = 2.0 * M_PI / omega;
  auto rhs = [a_eff, b_eff, omega](const State<4>& m, double t) -> State<4> {
    const double s2 = std::sin(omega * t) * std::sin(omega * t);
    // m holds Phi row-major: [[m0, m1], [m2, m3]]
    return {s2 * m[2], s2 * m[3], -a_eff * m[0] - b_eff * m[1], -a_eff * m[2] - b_eff * m[3]};
  };
  const State<4> id{1.0, 0.0, 0.0, 1.0};
  const auto traj = integrate_adaptive<4>(rhs, id, 0.0, T, tol, tol);
  const auto& m = traj.back();
  return detail::floquet_from_monodromy({{{m[0], m[1]}, {m[2], m[3]}}}, T, a_eff, b_eff);
}

// Multipliers for a law: `reduced` integrates the constant-coefficient
// variational pair (a_eff, b_eff) from the law's derivatives; `full`
// linearizes the (q, phi, p) system about the orbit, integrates the 3x3
// variational equations and extracts the decoupled (q, p) block (the phase
// direction carries the trivial unit multiplier).
inline FloquetResult floquet_multipliers(const AdaptationLaw& law, double mu0, double omega,
                                         FloquetMode mode = FloquetMode::reduced,
                                         bool enforce_hypotheses = true, double tol = 1e-12) {
  const HypothesisReport hyp = validate_theorem3_4(law, mu0, omega);
  if (enforce_hypotheses && !hyp.all_passed()) {
    std::string failed;
    for (const auto& c : hyp.conditions)
      if (!c.passed) failed += (failed.empty() ? "" : ", ") + c.name;
    throw HypothesisViolation("floquet_multipliers: theorem hypotheses fail (" + failed + ")");
  }
  if (mode == FloquetMode::reduced)
    return floquet_reduced(hyp.a_eff, hyp.b_eff, omega, tol);

  const double T = 2.0 * M_PI / omega;
  const double r_star = hyp.r_star;
  const AdaptationLaw lw = law;
  // z holds the 3x3 fundamental matrix row-major, state order (q, phi, p).
  auto rhs = [lw, r_star, mu0, omega](const State<9>& z, double t) -> State<9> {
    const double s = std::sin(omega * t), c = std::cos(omega * t);
    const double s2 = s * s, sc = s * c;
    const double jq = lw.df(r_star) * r_star;  // d pdot / d q at the orbit
    const double jp = -lw.dg(mu0);
    State<9> dz{};
    for (int col = 0; col < 3; ++col) {
      const double vq = z[0 + col], vphi = z[3 + col], vp = z[6 + col];
      (void)vphi;  // phi column of the Jacobian vanishes on the orbit
      dz[0 + col] = s2 * vp;
      dz[3 + col] = sc * vp;
      dz[6 + col] = jq * vq + jp * vp;
    }
    return dz;
  };
  State<9> id{};
  id[0] = id[4] = id[8] = 1.0;
  const auto traj = integrate_adaptive<9>(rhs, id, 0.0, T, tol, tol);
  const auto& z = traj.back();
  FloquetResult res = detail::floquet_from_monodromy({{{z[0], z[2]}, {z[6], z[8]}}}, T, hyp.a_eff,
                                                     hyp.b_eff);
  res.phase_multiplier = z[4];
  return res;
}

// ---- exponential-rate fit from a simulated trajectory ----

// Least-squares slope of ln(values(t)) over [t_lo, t_hi], resampled on a
// uniform grid by linear interpolation. Values must be positive on the
// window.
inline double fit_decay_rate(const std::vector<double>& times, const std::vector<double>& values,
                             double t_lo, double t_hi, int grid_points = 2048) {
  if (times.size() != values.size() || times.size() < 4)
    throw ValidationError("fit_decay_rate: need matching times/values with >= 4 samples");
  if (!(t_hi > t_lo) || t_lo < times.front() || t_hi > times.back())
    throw ValidationError("fit_decay_rate: window outside the sampled range");
  std::size_t k = 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < grid_points; ++i) {
    const double t = t_lo + (t_hi - t_lo) * double(i) / double(grid_points - 1);
    while (k + 2 < times.size() && times[k + 1] < t) ++k;
    const double t0 = times[k], t1 = times[k + 1];
    const double w = (t1 > t0) ? (t - t0) / (t1 - t0) : 0.0;
    const double v = values[k] + w * (values[k + 1] - values[k]);
    if (!(v > 0.0)) throw ValidationError("fit_decay_rate: values must stay positive");
    const double y = std::log(v);
    sx += t;
    sy += y;
    sxx += t * t;
    sxy += t * y;
  }
  const double n = double(grid_points);
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace biftune
