#include "biftune/dynamics.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "biftune/rng.hpp"

using namespace biftune;

namespace {

FirstOrderLoop nominal_first_order(double mu0, AdaptationLaw law) {
  return FirstOrderLoop(FirstOrderModel(mu0), std::move(law));
}

OscillatorLoop nominal_oscillator(double mu0, double omega, AdaptationLaw law) {
  return OscillatorLoop(OscillatorModel(mu0, omega), std::move(law));
}

TEST(FirstOrderRhs, Examples) {
  FirstOrderModel model(0.3);
  EXPECT_DOUBLE_EQ(first_order_rhs(model, 1.0, 0.3, 0.0), 0.0);  // equilibrium
  EXPECT_DOUBLE_EQ(first_order_rhs(model, 2.0, 0.8, 0.0), 1.0);  // (mu-mu0) x = 0.5*2

  FirstOrderModel forced(0.3, Signal::parse("1"));
  EXPECT_DOUBLE_EQ(first_order_rhs(forced, 2.0, 0.3, 5.0), 1.0);  // perfect integrator
}

TEST(FirstOrderRhs, RejectsNonpositiveX) {
  FirstOrderModel model(0.0);
  EXPECT_THROW(first_order_rhs(model, 0.0, 0.0, 0.0), DomainViolation);
  EXPECT_THROW(first_order_rhs(model, -1.0, 0.0, 0.0), DomainViolation);
}

TEST(OscillatorRhs, Examples) {
  {
    OscillatorModel model(0.5, 2.0);
    const auto [dx, dxd] = oscillator_rhs(model, 1.0, 0.0, 0.5, 0.0);
    EXPECT_DOUBLE_EQ(dx, 0.0);
    EXPECT_DOUBLE_EQ(dxd, -4.0);  // -omega^2 x
  }
  {
    OscillatorModel model(0.5, 1.0);
    const auto [dx, dxd] = oscillator_rhs(model, 0.0, 0.0, 0.0, 0.0);
    EXPECT_DOUBLE_EQ(dx, 0.0);
    EXPECT_DOUBLE_EQ(dxd, 0.0);  // rest state
  }
  {
    OscillatorModel model(0.5, 1.0, 1.0);
    const auto [dx, dxd] = oscillator_rhs(model, 0.0, 1.0, 0.5, 0.0);
    EXPECT_DOUBLE_EQ(dx, 1.0);
    EXPECT_DOUBLE_EQ(dxd, -1.0);  // -lambda xdot^3 at x = 0
  }
}

TEST(LogChart, ExamplesAndRoundtrip) {
  EXPECT_DOUBLE_EQ(log_chart(2.5, 2.5), 0.0);
  EXPECT_NEAR(log_chart(M_E * 0.7, 0.7), 1.0, 1e-14);
  for (double x : {0.1, 1.0, 10.0}) {
    const double q = log_chart(x, 0.37);
    EXPECT_NEAR(log_chart_inverse(q, 0.37), x, 1e-14 * x);
  }
  EXPECT_THROW(log_chart(0.0, 1.0), DomainViolation);
  EXPECT_THROW(log_chart(1.0, -2.0), DomainViolation);
}

TEST(PolarChart, ExamplesAndRoundtrip) {
  {
    const auto [r, phi] = polar_chart(1.0, 0.0, 3.0);
    EXPECT_DOUBLE_EQ(r, 1.0);
    EXPECT_DOUBLE_EQ(phi, 0.0);
  }
  {
    const double w = 1.7;
    const auto [r, phi] = polar_chart(0.0, -w, w);
    EXPECT_NEAR(r, 1.0, 1e-15);
    EXPECT_NEAR(phi, M_PI / 2.0, 1e-15);
  }
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const double w = std::exp(rng.uniform(-1.0, 1.0));
    const double x = rng.uniform(-5.0, 5.0);
    const double xd = rng.uniform(-5.0, 5.0);
    if (x == 0.0 && xd == 0.0) continue;
    const auto [r, phi] = polar_chart(x, xd, w);
    EXPECT_GT(r, 0.0);
    EXPECT_GE(phi, 0.0);
    EXPECT_LT(phi, 2.0 * M_PI);
    const auto [xr, xdr] = polar_chart_inverse(r, phi, w);
    const double scale = std::hypot(x, xd);
    EXPECT_NEAR(xr, x, 1e-13 * scale);
    EXPECT_NEAR(xdr, xd, 1e-13 * scale);
  }
  EXPECT_THROW(polar_chart(0.0, 0.0, 1.0), DomainViolation);
}

// With the log law (a = b = 1, mu0 = 0) the transformed first-order loop is
// exactly the linear pair qdot = p, pdot = -q - p.
TEST(TransformedRhs, LogLawGivesLinearPair) {
  const auto loop = nominal_first_order(0.0, AdaptationLaw::log_law(1.0, 1.0));
  const auto sys = log_chart_system(loop);
  for (double q : {-2.0, -0.5, 0.0, 1.0, 3.0}) {
    for (double p : {-1.0, 0.0, 0.7}) {
      const auto f = sys.field({q, p}, 0.0);
      EXPECT_NEAR(f[0], p, 1e-13);
      EXPECT_NEAR(f[1], -q - p, 1e-13 * (1.0 + std::abs(q) + std::abs(p)));
    }
  }
}

TEST(TransformedRhs, OscillatorChartOnOrbit) {
  const auto loop = nominal_oscillator(0.3, 1.3, AdaptationLaw::log_law(1.0, 1.0));
  const auto sys = qphi_p_chart_system(loop);
  for (double phi : {0.0, 0.9, 2.5, 5.0}) {
    const auto f = sys.field({0.0, phi, 0.0}, 0.0);
    EXPECT_NEAR(f[0], 0.0, 1e-12);
    EXPECT_NEAR(f[1], 1.3, 1e-12);
    EXPECT_NEAR(f[2], 0.0, 1e-12);
  }
}

TEST(TransformedRhs, ChartMismatch) {
  const auto fo = nominal_first_order(0.0, AdaptationLaw::sigmoid());
  EXPECT_THROW(transformed_rhs(Chart::polar, fo), ChartMismatch);
  EXPECT_THROW(transformed_rhs(Chart::qphi_p, fo), ChartMismatch);
  const auto osc = nominal_oscillator(0.0, 1.0, AdaptationLaw::log_law(1.0, 1.0));
  EXPECT_THROW(transformed_rhs(Chart::log, osc), ChartMismatch);
}

// Central-difference Jacobian of a chart map.
template <std::size_t N, class F>
Mat<N> numeric_jacobian(F&& map, const State<N>& y) {
  Mat<N> J{};
  for (std::size_t j = 0; j < N; ++j) {
    const double h = 1e-7 * (1.0 + std::abs(y[j]));
    State<N> yp = y, ym = y;
    yp[j] += h;
    ym[j] -= h;
    const State<N> fp = map(yp), fm = map(ym);
    for (std::size_t i = 0; i < N; ++i) J[i][j] = (fp[i] - fm[i]) / (2.0 * h);
  }
  return J;
}

// Core chart contract: field(T(y)) == DT(y) * original_field(y), with the
// analytic DT cross-checked against central differences.
TEST(TransformedRhs, ConjugacyFirstOrderLogChart) {
  const FirstOrderLoop loop(FirstOrderModel(0.4, Signal::parse("0.3*sin(2*t)")),
                            AdaptationLaw::sigmoid(),
                            Perturbation(0.05, Signal::parse("x/(1+x^2)")));
  const auto sys = transformed_rhs(Chart::log, loop);
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const State<2> y{std::exp(rng.uniform(-2.0, 2.0)), rng.uniform(-2.0, 2.0)};
    const double t = rng.uniform(0.0, 10.0);
    const auto chart_field = sys.field(sys.to_chart(y), t);
    const auto pushed = matvec(sys.chart_jacobian(y), loop(y, t));
    for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(chart_field[k], pushed[k], 1e-10);

    const auto J_num = numeric_jacobian<2>([&](const State<2>& z) { return sys.to_chart(z); }, y);
    EXPECT_LT(max_abs_diff(sys.chart_jacobian(y), J_num), 1e-6);
  }
}

TEST(TransformedRhs, ConjugacyOscillatorCharts) {
  const OscillatorLoop loop(OscillatorModel(0.2, 1.4, 0.3, Signal::parse("0.2*cos(1.4*t)")),
                            AdaptationLaw::bounded_osc(1.0, 1.0),
                            Perturbation(0.02, Signal::parse("sin(t)*xdot/(1+xdot^2)")));
  Rng rng(13);
  for (Chart chart : {Chart::polar, Chart::qphi_p}) {
    const auto sys = transformed_rhs(chart, loop);
    for (int i = 0; i < 200; ++i) {
      const double r = std::exp(rng.uniform(-2.0, 2.0));
      const double phi = rng.uniform(0.0, 2.0 * M_PI);
      const auto [x, xd] = polar_chart_inverse(r, phi, 1.4);
      const State<3> y{x, xd, 0.2 + rng.uniform(-1.0, 1.0)};
      const double t = rng.uniform(0.0, 10.0);
      const auto chart_field = sys.field(sys.to_chart(y), t);
      const auto pushed = matvec(sys.chart_jacobian(y), loop(y, t));
      for (std::size_t k = 0; k < 3; ++k)
        EXPECT_NEAR(chart_field[k], pushed[k], 1e-9) << chart_name(chart) << " comp " << k;

      const auto J_num =
          numeric_jacobian<3>([&](const State<3>& z) { return sys.to_chart(z); }, y);
      // Skip the finite-difference cross-check next to the phi wrap seam.
      if (phi > 1e-3 && std::abs(phi - 2.0 * M_PI) > 1e-3)
        EXPECT_LT(max_abs_diff(sys.chart_jacobian(y), J_num), 1e-5);
    }
  }
}

// {x > 0} is forward invariant for the nominal loop: guarded integration
// never trips from admissible starts.
TEST(ClosedLoop, PositivityForwardInvariant) {
  const auto loop = nominal_first_order(0.5, AdaptationLaw::log_law(1.0, 1.0));
  RunHooks<2> hooks;
  hooks.guard = [](const State<2>& y) { return FirstOrderLoop::guard(y); };
  for (double x0 : {0.05, 1.0, 20.0}) {
    const auto traj = integrate_adaptive<2>(
        [&loop](const State<2>& y, double t) { return loop(y, t); }, {x0, -1.0}, 0.0, 50.0, 1e-9,
        1e-9, hooks);
    for (const auto& y : traj.states) EXPECT_GT(y[0], 0.0);
  }
}

TEST(ClosedLoop, EpsilonZeroMatchesNominalBitForBit) {
  const auto nominal = nominal_first_order(0.3, AdaptationLaw::sigmoid());
  const FirstOrderLoop perturbed(FirstOrderModel(0.3), AdaptationLaw::sigmoid(),
                                 Perturbation(0.0, Signal::parse("sin(t)")));
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const State<2> y{std::exp(rng.uniform(-2.0, 2.0)), rng.uniform(-2.0, 2.0)};
    const double t = rng.uniform(0.0, 10.0);
    const auto f0 = nominal(y, t);
    const auto f1 = perturbed(y, t);
    EXPECT_EQ(f0[0], f1[0]);
    EXPECT_EQ(f0[1], f1[1]);
  }

  const OscillatorLoop osc_nominal(OscillatorModel(0.3, 1.0), AdaptationLaw::log_law(1.0, 1.0));
  const OscillatorLoop osc_perturbed(OscillatorModel(0.3, 1.0), AdaptationLaw::log_law(1.0, 1.0),
                                     Perturbation(0.0, Signal::parse("cos(t)")));
  const State<3> y{1.0, -0.5, 0.2};
  const auto g0 = osc_nominal(y, 1.0);
  const auto g1 = osc_perturbed(y, 1.0);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(g0[k], g1[k]);
}

// On the periodic orbit the phase advances by exactly 2*pi per period.
TEST(ClosedLoop, PhaseAdvancesOnePeriod) {
  const double w = 1.7;
  const auto loop = nominal_oscillator(0.25, w, AdaptationLaw::log_law(1.0, 1.0));
  const auto sys = qphi_p_chart_system(loop);
  const auto traj = integrate_adaptive<3>(
      [&sys](const State<3>& z, double t) { return sys.field(z, t); }, {0.0, 0.0, 0.0}, 0.0,
      2.0 * M_PI / w, 1e-11, 1e-11);
  EXPECT_NEAR(traj.back()[1], 2.0 * M_PI, 1e-8);
  EXPECT_NEAR(traj.back()[0], 0.0, 1e-9);
  EXPECT_NEAR(traj.back()[2], 0.0, 1e-9);
}

}  // namespace
