#include "biftune/ode.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace biftune;

namespace {

TEST(IntegrateFixed, ZeroFieldStaysConstant) {
  auto rhs = [](const State<1>&, double) { return State<1>{0.0}; };
  const auto traj = integrate_fixed<1>(rhs, {1.0}, 0.0, 1.0, 0.1);
  ASSERT_GE(traj.size(), 11u);
  for (const auto& y : traj.states) EXPECT_EQ(y[0], 1.0);
}

TEST(IntegrateFixed, ExponentialDecayClosedForm) {
  auto rhs = [](const State<1>& y, double) { return State<1>{-y[0]}; };
  const auto traj = integrate_fixed<1>(rhs, {1.0}, 0.0, 1.0, 1e-3);
  EXPECT_NEAR(traj.back()[0], std::exp(-1.0), 1e-8);
}

// Critically damped pair qdot = p, pdot = -q - 2p has A = [[0,1],[-1,-2]]
// with (A+I)^2 = 0, so exp(At) = e^-t (I + t(A+I)).
TEST(IntegrateFixed, CriticallyDampedMatrixExponential) {
  auto rhs = [](const State<2>& y, double) { return State<2>{y[1], -y[0] - 2.0 * y[1]}; };
  const auto traj = integrate_fixed<2>(rhs, {1.0, 0.0}, 0.0, 1.0, 1e-3);
  const double e = std::exp(-1.0);
  EXPECT_NEAR(traj.back()[0], e * 2.0, 1e-8);   // (1+t) q0 at t=1
  EXPECT_NEAR(traj.back()[1], e * (-1.0), 1e-8);  // -t q0
}

TEST(IntegrateFixed, FinalPartialStepLandsOnT1) {
  auto rhs = [](const State<1>& y, double) { return State<1>{-y[0]}; };
  const auto traj = integrate_fixed<1>(rhs, {1.0}, 0.0, 1.0, 0.3);
  EXPECT_DOUBLE_EQ(traj.t_back(), 1.0);
  EXPECT_NEAR(traj.back()[0], std::exp(-1.0), 1e-4);
}

// Observed order on ydot = 2y over [0, 2] across h = 1e-1, 1e-2, 1e-3.
TEST(IntegrateFixed, Rk4ConvergenceOrderIsFour) {
  auto rhs = [](const State<1>& y, double) { return State<1>{2.0 * y[0]}; };
  const double exact = std::exp(4.0);
  std::vector<double> errs;
  for (double h : {1e-1, 1e-2, 1e-3}) {
    const auto traj = integrate_fixed<1>(rhs, {1.0}, 0.0, 2.0, h);
    errs.push_back(std::abs(traj.back()[0] - exact));
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double order = std::log10(errs[i - 1] / errs[i]);
    EXPECT_NEAR(order, 4.0, 0.2) << "pair " << i;
  }
}

TEST(IntegrateAdaptive, ExponentialDecay) {
  auto rhs = [](const State<1>& y, double) { return State<1>{-y[0]}; };
  const auto traj = integrate_adaptive<1>(rhs, {1.0}, 0.0, 1.0, 1e-10, 1e-10);
  EXPECT_NEAR(traj.back()[0], std::exp(-1.0), 1e-9);
}

// Undamped oscillator returns to the start after one period 2*pi.
TEST(IntegrateAdaptive, HarmonicOscillatorPeriod) {
  auto rhs = [](const State<2>& y, double) { return State<2>{y[1], -y[0]}; };
  const auto traj = integrate_adaptive<2>(rhs, {1.0, 0.0}, 0.0, 2.0 * M_PI, 1e-9, 1e-9);
  EXPECT_NEAR(traj.back()[0], 1.0, 1e-6);
  EXPECT_NEAR(traj.back()[1], 0.0, 1e-6);
}

TEST(IntegrateAdaptive, EmptyIntervalSingleSample) {
  auto rhs = [](const State<1>& y, double) { return State<1>{-y[0]}; };
  const auto traj = integrate_adaptive<1>(rhs, {3.0}, 2.0, 2.0, 1e-9, 1e-9);
  ASSERT_EQ(traj.size(), 1u);
  EXPECT_EQ(traj.times[0], 2.0);
  EXPECT_EQ(traj.states[0][0], 3.0);
}

TEST(IntegrateAdaptive, ResultIndependentOfInitialStepGuess) {
  auto rhs = [](const State<1>& y, double) { return State<1>{-y[0]}; };
  const double tol = 1e-9;
  const double exact = std::exp(-1.0);
  for (double h0 : {0.0, 1e-6, 0.5}) {
    const auto traj = integrate_adaptive<1>(rhs, {1.0}, 0.0, 1.0, tol, tol, {}, h0);
    EXPECT_LE(std::abs(traj.back()[0] - exact), 10.0 * (tol + tol * exact)) << "h0=" << h0;
  }
}

TEST(IntegrateAdaptive, StopPredicateEndsRunEarly) {
  auto rhs = [](const State<1>& y, double) { return State<1>{y[0]}; };
  RunHooks<1> hooks;
  hooks.stop = [](const State<1>& y, double) { return y[0] > 5.0; };
  const auto traj = integrate_adaptive<1>(rhs, {1.0}, 0.0, 10.0, 1e-9, 1e-9, hooks);
  EXPECT_TRUE(traj.stopped_early);
  EXPECT_GT(traj.back()[0], 5.0);
  EXPECT_LT(traj.t_back(), 10.0);
}

TEST(IntegrateAdaptive, GuardHalvesThenThrowsDomainViolation) {
  // x crosses zero at t = 1; the positivity guard must reject the crossing.
  auto rhs = [](const State<1>&, double) { return State<1>{-1.0}; };
  RunHooks<1> hooks;
  hooks.guard = [](const State<1>& y) { return y[0] > 0.0; };
  EXPECT_THROW(integrate_adaptive<1>(rhs, {1.0}, 0.0, 2.0, 1e-9, 1e-9, hooks), DomainViolation);
}

TEST(IntegrateFixed, GuardViolationThrowsImmediately) {
  auto rhs = [](const State<1>&, double) { return State<1>{-1.0}; };
  RunHooks<1> hooks;
  hooks.guard = [](const State<1>& y) { return y[0] > 0.0; };
  EXPECT_THROW(integrate_fixed<1>(rhs, {1.0}, 0.0, 2.0, 0.25, hooks), DomainViolation);
}

TEST(IntegrateFixed, BlowupRaisesNonFiniteState) {
  // ydot = y^2 from y(0)=1 blows up at t = 1.
  auto rhs = [](const State<1>& y, double) { return State<1>{y[0] * y[0]}; };
  EXPECT_THROW(integrate_fixed<1>(rhs, {1.0}, 0.0, 2.0, 0.05), NonFiniteState);
}

TEST(IntegrateAdaptive, BlowupRaisesStepUnderflow) {
  auto rhs = [](const State<1>& y, double) { return State<1>{y[0] * y[0]}; };
  EXPECT_THROW(integrate_adaptive<1>(rhs, {1.0}, 0.0, 2.0, 1e-9, 1e-9), StepUnderflow);
}

TEST(IntegrateAdaptive, MaxStepsExceeded) {
  auto rhs = [](const State<1>& y, double) { return State<1>{-y[0]}; };
  EXPECT_THROW(integrate_adaptive<1>(rhs, {1.0}, 0.0, 100.0, 1e-12, 1e-12, {}, 0.0, 10),
               StepBudgetExceeded);
}

// ---- variational equations ----

TEST(Variational, ConstantRotationOverQuarterPeriod) {
  auto rhs = [](const State<2>& y, double) { return State<2>{y[1], -y[0]}; };
  auto jac = [](const State<2>&, double) { return Mat<2>{{{0.0, 1.0}, {-1.0, 0.0}}}; };
  IntegratorConfig cfg;
  cfg.abs_tol = cfg.rel_tol = 1e-11;
  const auto [traj, phi] = integrate_with_variational<2>(rhs, jac, {1.0, 0.0}, 0.0, M_PI / 2.0,
                                                         cfg);
  EXPECT_NEAR(phi[0][0], 0.0, 1e-8);
  EXPECT_NEAR(phi[0][1], 1.0, 1e-8);
  EXPECT_NEAR(phi[1][0], -1.0, 1e-8);
  EXPECT_NEAR(phi[1][1], 0.0, 1e-8);
}

TEST(Variational, ZeroFieldGivesIdentity) {
  auto rhs = [](const State<2>&, double) { return State<2>{0.0, 0.0}; };
  auto jac = [](const State<2>&, double) { return Mat<2>{}; };
  IntegratorConfig cfg;
  const auto [traj, phi] = integrate_with_variational<2>(rhs, jac, {0.3, -0.7}, 0.0, 5.0, cfg);
  EXPECT_NEAR(phi[0][0], 1.0, 1e-12);
  EXPECT_NEAR(phi[1][1], 1.0, 1e-12);
  EXPECT_NEAR(phi[0][1], 0.0, 1e-12);
  EXPECT_NEAR(phi[1][0], 0.0, 1e-12);
}

// The periodically damped pair qdot = sin^2(t) p, pdot = -q - p stays on
// the null solution, and its monodromy contracts over one period.
TEST(Variational, PeriodicPairMonodromyContracts) {
  auto rhs = [](const State<2>& y, double t) {
    const double s2 = std::sin(t) * std::sin(t);
    return State<2>{s2 * y[1], -y[0] - y[1]};
  };
  auto jac = [](const State<2>&, double t) {
    const double s2 = std::sin(t) * std::sin(t);
    return Mat<2>{{{0.0, s2}, {-1.0, -1.0}}};
  };
  IntegratorConfig cfg;
  cfg.abs_tol = cfg.rel_tol = 1e-12;
  const auto [traj, phi] =
      integrate_with_variational<2>(rhs, jac, {0.0, 0.0}, 0.0, 2.0 * M_PI, cfg);
  const auto [m1, m2] = eig2(phi);
  EXPECT_LT(std::abs(m1), 1.0);
  EXPECT_LT(std::abs(m2), 1.0);
}

TEST(Variational, CocycleProperty) {
  auto rhs = [](const State<2>& y, double t) {
    const double s2 = std::sin(t) * std::sin(t);
    return State<2>{s2 * y[1], -y[0] - y[1]};
  };
  auto jac = [](const State<2>&, double t) {
    const double s2 = std::sin(t) * std::sin(t);
    return Mat<2>{{{0.0, s2}, {-1.0, -1.0}}};
  };
  IntegratorConfig cfg;
  cfg.abs_tol = cfg.rel_tol = 1e-12;
  const State<2> y0{0.0, 0.0};
  const double t_mid = 0.7, t_end = M_PI;
  const auto [ta, full] = integrate_with_variational<2>(rhs, jac, y0, 0.0, t_end, cfg);
  const auto [tb, first] = integrate_with_variational<2>(rhs, jac, y0, 0.0, t_mid, cfg);
  const auto [tc, second] = integrate_with_variational<2>(rhs, jac, tb.back(), t_mid, t_end, cfg);
  const Mat<2> composed = matmul(second, first);
  EXPECT_LT(max_abs_diff(full, composed), 1e-8);
}

TEST(Variational, JacobianMismatchDetected) {
  auto rhs = [](const State<2>& y, double) { return State<2>{y[1], -y[0]}; };
  auto bad_jac = [](const State<2>&, double) { return Mat<2>{{{0.0, 1.0}, {1.0, 0.0}}}; };
  IntegratorConfig cfg;
  EXPECT_THROW(integrate_with_variational<2>(rhs, bad_jac, {1.0, 0.0}, 0.0, 1.0, cfg),
               JacobianMismatch);
}

}  // namespace
