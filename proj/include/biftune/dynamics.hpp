#pragma once

// Right-hand sides of the first-order and oscillator families, their closed
// loops with an adaptation law, and the coordinate charts used for
// analysis: the log chart (q, p) for first-order loops and the polar /
// (q, phi, p) charts for oscillator loops.
//
// Conventions:
//   first-order state  (x, mu),           x > 0
//   oscillator state   (x, xdot, mu),     (x, xdot) != (0, 0)
//   polar chart        x = r cos(phi), xdot = -r w sin(phi)

#include <cmath>
#include <functional>
#include <optional>
#include <utility>

#include "biftune/adaptation.hpp"
#include "biftune/errors.hpp"
#include "biftune/ode.hpp"
#include "biftune/signal.hpp"
#include "biftune/smallmat.hpp"

namespace biftune {

struct Perturbation {
  double epsilon = 0.0;
  Signal p;  // bounded by construction

  Perturbation() = default;
  Perturbation(double eps, Signal sig) : epsilon(eps), p(std::move(sig)) {
    if (!(eps >= 0.0)) throw ValidationError("perturbation: epsilon must be >= 0");
  }
};

struct FirstOrderModel {
  double mu0 = 0.0;
  std::optional<Signal> input;  // u(t), time-only

  FirstOrderModel() = default;
  explicit FirstOrderModel(double mu0_, std::optional<Signal> u = std::nullopt)
      : mu0(mu0_), input(std::move(u)) {
    if (input && input->uses_state())
      throw ValidationError("first-order model: forcing u may depend on t only");
  }
};

struct OscillatorModel {
  double mu0 = 0.0;
  double omega = 1.0;
  double lambda = 0.0;  // cubic damping; 0 selects the reduced model
  std::optional<Signal> input;

  OscillatorModel() = default;
  OscillatorModel(double mu0_, double omega_, double lambda_ = 0.0,
                  std::optional<Signal> u = std::nullopt)
      : mu0(mu0_), omega(omega_), lambda(lambda_), input(std::move(u)) {
    if (!(omega > 0.0)) throw ValidationError("oscillator model: omega must be > 0");
    if (!(lambda >= 0.0)) throw ValidationError("oscillator model: lambda must be >= 0");
    if (input && input->uses_state())
      throw ValidationError("oscillator model: forcing u may depend on t only");
  }
};

// xdot = (mu - mu0) x + u(t) [+ eps*p(x, mu, t)]
inline double first_order_rhs(const FirstOrderModel& model, double x, double mu, double t,
                              const Perturbation* pert = nullptr) {
  if (!(x > 0.0))
    throw DomainViolation("first_order_rhs: x must be > 0, got " + std::to_string(x));
  double u = 0.0;
  if (model.input) {
    SignalContext c;
    c.t = t;
    u = model.input->eval(c);
  }
  double w = 0.0;
  if (pert && pert->epsilon != 0.0) {
    SignalContext c;
    c.t = t;
    c.x = x;
    c.mu = mu;
    w = pert->epsilon * pert->p.eval(c);
  }
  return (mu - model.mu0) * x + u + w;
}

// (xdot, xddot) with xddot = -(mu0 - mu) xdot - lambda xdot^3 - w^2 x + u
// [+ eps*p(x, xdot, mu, t)]
inline std::pair<double, double> oscillator_rhs(const OscillatorModel& model, double x,
                                                double xdot, double mu, double t,
                                                const Perturbation* pert = nullptr) {
  double u = 0.0;
  if (model.input) {
    SignalContext c;
    c.t = t;
    u = model.input->eval(c);
  }
  double w = 0.0;
  if (pert && pert->epsilon != 0.0) {
    SignalContext c;
    c.t = t;
    c.x = x;
    c.xdot = xdot;
    c.mu = mu;
    w = pert->epsilon * pert->p.eval(c);
  }
  const double xddot = -(model.mu0 - mu) * xdot - model.lambda * xdot * xdot * xdot -
                       model.omega * model.omega * x + u + w;
  return {xdot, xddot};
}

// ---- charts ----

// q = ln(x) - ln(x_star)
inline double log_chart(double x, double x_star) {
  if (!(x > 0.0) || !(x_star > 0.0))
    throw DomainViolation("log_chart: requires x > 0 and x_star > 0");
  return std::log(x) - std::log(x_star);
}

inline double log_chart_inverse(double q, double x_star) {
  if (!(x_star > 0.0)) throw DomainViolation("log_chart_inverse: requires x_star > 0");
  return x_star * std::exp(q);
}

inline double wrap_angle(double phi) {
  const double two_pi = 2.0 * M_PI;
  double w = std::fmod(phi, two_pi);
  if (w < 0.0) w += two_pi;
  return w;
}

// (r, phi) with r > 0 and phi in [0, 2*pi).
inline std::pair<double, double> polar_chart(double x, double xdot, double omega) {
  if (!(omega > 0.0)) throw ValidationError("polar_chart: omega must be > 0");
  if (x == 0.0 && xdot == 0.0)
    throw DomainViolation("polar_chart: (x, xdot) = (0, 0) is not admissible");
  const double s = -xdot / omega;
  const double r = std::hypot(x, s);
  const double phi = wrap_angle(std::atan2(s, x));
  return {r, phi};
}

inline std::pair<double, double> polar_chart_inverse(double r, double phi, double omega) {
  if (!(omega > 0.0)) throw ValidationError("polar_chart_inverse: omega must be > 0");
  if (!(r > 0.0)) throw DomainViolation("polar_chart_inverse: r must be > 0");
  return {r * std::cos(phi), -r * omega * std::sin(phi)};
}

// ---- closed loops ----

// State y = (x, mu): xdot as above, mudot = f(x) - g(mu).
struct FirstOrderLoop {
  FirstOrderModel model;
  AdaptationLaw law;
  std::optional<Perturbation> perturbation;

  FirstOrderLoop(FirstOrderModel m, AdaptationLaw l,
                 std::optional<Perturbation> pert = std::nullopt)
      : model(std::move(m)), law(std::move(l)), perturbation(std::move(pert)) {}

  State<2> operator()(const State<2>& y, double t) const {
    const double x = y[0], mu = y[1];
    const Perturbation* p = perturbation ? &*perturbation : nullptr;
    return {first_order_rhs(model, x, mu, t, p), law_rate(law, x, mu)};
  }

  static bool guard(const State<2>& y) { return y[0] > 0.0; }

  double x_star() const { return equilibrium_point(law, model.mu0); }
};

// State y = (x, xdot, mu): mudot = f(r) - g(mu) with r the polar radius.
struct OscillatorLoop {
  OscillatorModel model;
  AdaptationLaw law;
  std::optional<Perturbation> perturbation;

  OscillatorLoop(OscillatorModel m, AdaptationLaw l,
                 std::optional<Perturbation> pert = std::nullopt)
      : model(std::move(m)), law(std::move(l)), perturbation(std::move(pert)) {}

  State<3> operator()(const State<3>& y, double t) const {
    const double x = y[0], xd = y[1], mu = y[2];
    const double r = std::hypot(x, xd / model.omega);
    const Perturbation* p = perturbation ? &*perturbation : nullptr;
    auto [dx, dxd] = oscillator_rhs(model, x, xd, mu, t, p);
    return {dx, dxd, law_rate(law, r, mu)};
  }

  static bool guard(const State<3>& y) { return y[0] != 0.0 || y[1] != 0.0; }

  double r_star() const { return equilibrium_point(law, model.mu0); }
};

// ---- transformed systems ----

enum class Chart { original, log, polar, qphi_p };

inline const char* chart_name(Chart c) {
  switch (c) {
    case Chart::original: return "original";
    case Chart::log: return "log";
    case Chart::polar: return "polar";
    case Chart::qphi_p: return "qphi_p";
  }
  return "?";
}

// A closed loop expressed in a proof chart: the transformed vector field
// together with the chart map, its inverse, and its Jacobian. The defining
// contract is the pushforward identity
//     field(T(y), t) == DT(y) * original_field(y, t).
template <std::size_t N>
struct TransformedSystem {
  Chart chart;
  std::function<State<N>(const State<N>&, double)> field;
  std::function<State<N>(const State<N>&)> to_chart;
  std::function<State<N>(const State<N>&)> from_chart;
  std::function<Mat<N>(const State<N>&)> chart_jacobian;  // DT at an original-coordinates point
};

// First-order loop in the log chart z = (q, p):
//   q = ln(x) - ln(x*), p = mu - mu0
//   qdot = p + w(t, x, mu)/x,  pdot = f(e^q x*) - g(p + mu0)
// where w collects forcing and perturbation. With the nominal loop this is
// exactly qdot = p, pdot = -ftilde(q) - gtilde(p).
inline TransformedSystem<2> log_chart_system(const FirstOrderLoop& loop) {
  const double x_star = loop.x_star();
  const double mu0 = loop.model.mu0;
  const FirstOrderLoop lp = loop;

  TransformedSystem<2> sys;
  sys.chart = Chart::log;
  sys.field = [lp, x_star, mu0](const State<2>& z, double t) -> State<2> {
    const double x = log_chart_inverse(z[0], x_star);
    const double mu = z[1] + mu0;
    const Perturbation* p = lp.perturbation ? &*lp.perturbation : nullptr;
    const double xdot = first_order_rhs(lp.model, x, mu, t, p);
    return {xdot / x, law_rate(lp.law, x, mu)};
  };
  sys.to_chart = [x_star, mu0](const State<2>& y) -> State<2> {
    return {log_chart(y[0], x_star), y[1] - mu0};
  };
  sys.from_chart = [x_star, mu0](const State<2>& z) -> State<2> {
    return {log_chart_inverse(z[0], x_star), z[1] + mu0};
  };
  sys.chart_jacobian = [](const State<2>& y) -> Mat<2> {
    if (!(y[0] > 0.0)) throw DomainViolation("log chart jacobian: x must be > 0");
    return {{{1.0 / y[0], 0.0}, {0.0, 1.0}}};
  };
  return sys;
}

namespace detail {

// Shared polar-coordinate derivative: given the original oscillator field
// at (x, xdot), returns (rdot, phidot) from
//   rdot   = (x xdot + xdot xddot / w^2) / r
//   phidot = (xdot^2 - x xddot) / (w r^2)
inline std::pair<double, double> polar_rates(double x, double xdot, double xddot, double omega,
                                             double r) {
  const double rdot = (x * xdot + xdot * xddot / (omega * omega)) / r;
  const double phidot = (xdot * xdot - x * xddot) / (omega * r * r);
  return {rdot, phidot};
}

}  // namespace detail

// Oscillator loop in polar coordinates z = (r, phi, mu). For the nominal
// reduced loop this is rdot = (mu-mu0) r sin^2, phidot = w + (mu-mu0)
// sin cos, mudot = f(r) - g(mu); forcing, cubic damping and perturbation
// terms transport through the same chart.
inline TransformedSystem<3> polar_chart_system(const OscillatorLoop& loop) {
  const OscillatorLoop lp = loop;
  const double w = loop.model.omega;

  TransformedSystem<3> sys;
  sys.chart = Chart::polar;
  sys.field = [lp, w](const State<3>& z, double t) -> State<3> {
    const double r = z[0], phi = z[1], mu = z[2];
    if (!(r > 0.0)) throw DomainViolation("polar field: r must be > 0");
    const auto [x, xdot] = polar_chart_inverse(r, phi, w);
    const Perturbation* p = lp.perturbation ? &*lp.perturbation : nullptr;
    const auto [dx, xddot] = oscillator_rhs(lp.model, x, xdot, mu, t, p);
    (void)dx;
    const auto [rdot, phidot] = detail::polar_rates(x, xdot, xddot, w, r);
    return {rdot, phidot, law_rate(lp.law, r, mu)};
  };
  sys.to_chart = [w](const State<3>& y) -> State<3> {
    const auto [r, phi] = polar_chart(y[0], y[1], w);
    return {r, phi, y[2]};
  };
  sys.from_chart = [w](const State<3>& z) -> State<3> {
    const auto [x, xdot] = polar_chart_inverse(z[0], z[1], w);
    return {x, xdot, z[2]};
  };
  sys.chart_jacobian = [w](const State<3>& y) -> Mat<3> {
    const double x = y[0], xdot = y[1];
    const double s = -xdot / w;
    const double r2 = x * x + s * s;
    if (r2 == 0.0) throw DomainViolation("polar chart jacobian: origin is not admissible");
    const double r = std::sqrt(r2);
    // r = sqrt(x^2 + (xdot/w)^2), phi = atan2(-xdot/w, x)
    return {{{x / r, xdot / (w * w * r), 0.0},
             {-s / r2, -x / (w * r2), 0.0},
             {0.0, 0.0, 1.0}}};
  };
  return sys;
}

// Oscillator loop in z = (q, phi, p) with q = ln(r) - ln(r*), p = mu - mu0.
// Nominal reduced loop: qdot = p sin^2(phi), phidot = w + p sin cos,
// pdot = f(e^q r*) - g(p + mu0).
inline TransformedSystem<3> qphi_p_chart_system(const OscillatorLoop& loop) {
  const OscillatorLoop lp = loop;
  const double w = loop.model.omega;
  const double r_star = loop.r_star();
  const double mu0 = loop.model.mu0;

  TransformedSystem<3> sys;
  sys.chart = Chart::qphi_p;
  sys.field = [lp, w, r_star, mu0](const State<3>& z, double t) -> State<3> {
    const double r = r_star * std::exp(z[0]);
    const double phi = z[1];
    const double mu = z[2] + mu0;
    const auto [x, xdot] = polar_chart_inverse(r, phi, w);
    const Perturbation* p = lp.perturbation ? &*lp.perturbation : nullptr;
    const auto [dx, xddot] = oscillator_rhs(lp.model, x, xdot, mu, t, p);
    (void)dx;
    const auto [rdot, phidot] = detail::polar_rates(x, xdot, xddot, w, r);
    return {rdot / r, phidot, law_rate(lp.law, r, mu)};
  };
  sys.to_chart = [w, r_star, mu0](const State<3>& y) -> State<3> {
    const auto [r, phi] = polar_chart(y[0], y[1], w);
    return {std::log(r) - std::log(r_star), phi, y[2] - mu0};
  };
  sys.from_chart = [w, r_star, mu0](const State<3>& z) -> State<3> {
    const auto [x, xdot] = polar_chart_inverse(r_star * std::exp(z[0]), z[1], w);
    return {x, xdot, z[2] + mu0};
  };
  sys.chart_jacobian = [w](const State<3>& y) -> Mat<3> {
    const double x = y[0], xdot = y[1];
    const double s = -xdot / w;
    const double r2 = x * x + s * s;
    if (r2 == 0.0) throw DomainViolation("qphi_p chart jacobian: origin is not admissible");
    // q = ln(r) - ln(r*): dq = (x dx + xdot/w^2 dxdot) / r^2
    return {{{x / r2, xdot / (w * w * r2), 0.0},
             {-s / r2, -x / (w * r2), 0.0},
             {0.0, 0.0, 1.0}}};
  };
  return sys;
}

inline TransformedSystem<2> transformed_rhs(Chart chart, const FirstOrderLoop& loop) {
  if (chart == Chart::log) return log_chart_system(loop);
  if (chart == Chart::original) {
    TransformedSystem<2> sys;
    sys.chart = Chart::original;
    const FirstOrderLoop lp = loop;
    sys.field = [lp](const State<2>& y, double t) { return lp(y, t); };
    sys.to_chart = [](const State<2>& y) { return y; };
    sys.from_chart = [](const State<2>& y) { return y; };
    sys.chart_jacobian = [](const State<2>&) { return identity<2>(); };
    return sys;
  }
  throw ChartMismatch(std::string("chart '") + chart_name(chart) +
                      "' is not admissible for a first-order loop");
}

inline TransformedSystem<3> transformed_rhs(Chart chart, const OscillatorLoop& loop) {
  switch (chart) {
    case Chart::polar: return polar_chart_system(loop);
    case Chart::qphi_p: return qphi_p_chart_system(loop);
    case Chart::original: {
      TransformedSystem<3> sys;
      sys.chart = Chart::original;
      const OscillatorLoop lp = loop;
      sys.field = [lp](const State<3>& y, double t) { return lp(y, t); };
      sys.to_chart = [](const State<3>& y) { return y; };
      sys.from_chart = [](const State<3>& y) { return y; };
      sys.chart_jacobian = [](const State<3>&) { return identity<3>(); };
      return sys;
    }
    case Chart::log:
      throw ChartMismatch("chart 'log' is not admissible for an oscillator loop");
  }
  throw ChartMismatch("unknown chart");
}

// A trajectory tagged with the chart its samples live in.
template <std::size_t N>
struct ChartTrajectory {
  Chart chart = Chart::original;
  Trajectory<N> traj;
};

// Maps an original-coordinates trajectory through a chart, sample by
// sample. Angles are wrapped to [0, 2*pi) by the chart map itself.
template <std::size_t N>
ChartTrajectory<N> to_chart_trajectory(const TransformedSystem<N>& sys,
                                       const Trajectory<N>& traj) {
  ChartTrajectory<N> out;
  out.chart = sys.chart;
  out.traj.times = traj.times;
  out.traj.stats = traj.stats;
  out.traj.stopped_early = traj.stopped_early;
  out.traj.states.reserve(traj.states.size());
  for (const auto& y : traj.states) out.traj.states.push_back(sys.to_chart(y));
  return out;
}

}  // namespace biftune
