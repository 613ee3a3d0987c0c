#include "biftune/signal.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace biftune;

namespace {

TEST(Signal, ConstantsAndArithmetic) {
  EXPECT_DOUBLE_EQ(Signal::parse("1").eval({}), 1.0);
  EXPECT_DOUBLE_EQ(Signal::parse("2*3 + 1").eval({}), 7.0);
  EXPECT_DOUBLE_EQ(Signal::parse("-0.5").eval({}), -0.5);
  EXPECT_DOUBLE_EQ(Signal::parse("1/4").eval({}), 0.25);
  EXPECT_NEAR(Signal::parse("pi").eval({}), M_PI, 1e-15);
}

TEST(Signal, SinusoidsEvaluate) {
  SignalContext c;
  c.t = 0.7;
  EXPECT_NEAR(Signal::parse("sin(t)").eval(c), std::sin(0.7), 1e-15);
  EXPECT_NEAR(Signal::parse("0.5*cos(2*t + 0.3)").eval(c), 0.5 * std::cos(2.0 * 0.7 + 0.3),
              1e-15);
  EXPECT_NEAR(Signal::parse("sin(t)*cos(t)").eval(c), std::sin(0.7) * std::cos(0.7), 1e-15);
}

TEST(Signal, BoundedRationalForms) {
  SignalContext c;
  c.x = 3.0;
  EXPECT_NEAR(Signal::parse("x/(1+x^2)").eval(c), 0.3, 1e-15);
  EXPECT_NEAR(Signal::parse("1/(1+x^2)").eval(c), 0.1, 1e-15);
  c.mu = -2.0;
  EXPECT_NEAR(Signal::parse("mu^2/(1+mu^2)").eval(c), 0.8, 1e-15);

  const Signal s = Signal::parse("x/(1+x^2)");
  EXPECT_GE(s.bound(), 0.5);
  EXPECT_LE(s.bound(), 0.6);
}

TEST(Signal, BoundsCompose) {
  EXPECT_DOUBLE_EQ(Signal::parse("2*sin(t)").bound(), 2.0);
  EXPECT_DOUBLE_EQ(Signal::parse("sin(t)+cos(3*t)").bound(), 2.0);
  EXPECT_DOUBLE_EQ(Signal::parse("sin(x)*cos(t)").bound(), 1.0);
}

TEST(Signal, UnboundedExpressionsRejected) {
  EXPECT_THROW(Signal::parse("t"), ValidationError);
  EXPECT_THROW(Signal::parse("x"), ValidationError);
  EXPECT_THROW(Signal::parse("x*sin(t)"), ValidationError);
  EXPECT_THROW(Signal::parse("x^2"), ValidationError);
  EXPECT_THROW(Signal::parse("1/x"), ValidationError);        // denominator vanishes
  EXPECT_THROW(Signal::parse("1/(1-x^2)"), ValidationError);  // sign change
  EXPECT_THROW(Signal::parse("x^3/(1+x^2)"), ValidationError);  // degree too high
}

TEST(Signal, ParseErrors) {
  EXPECT_THROW(Signal::parse("sin("), ValidationError);
  EXPECT_THROW(Signal::parse("1 +"), ValidationError);
  EXPECT_THROW(Signal::parse("foo(t)"), ValidationError);
  EXPECT_THROW(Signal::parse("1 2"), ValidationError);
}

TEST(Signal, TimePeriodDetection) {
  EXPECT_EQ(Signal::parse("1").time_period().value(), 0.0);
  EXPECT_NEAR(Signal::parse("sin(t)").time_period().value(), 2.0 * M_PI, 1e-12);
  EXPECT_NEAR(Signal::parse("sin(2*t)").time_period().value(), M_PI, 1e-12);
  EXPECT_NEAR(Signal::parse("0.3*cos(2*t + 1)").time_period().value(), M_PI, 1e-12);
  EXPECT_NEAR(Signal::parse("sin(t)*x/(1+x^2)").time_period().value(), 2.0 * M_PI, 1e-12);
  // mixed frequencies and non-sinusoidal time dependence: treated aperiodic
  EXPECT_FALSE(Signal::parse("sin(t)+sin(3*t)").time_period().has_value());
  EXPECT_FALSE(Signal::parse("1/(1+t^2)").time_period().has_value());
}

TEST(Signal, VariableUsageFlags) {
  const Signal s = Signal::parse("sin(t)*xdot/(1+xdot^2)");
  EXPECT_TRUE(s.uses_time());
  EXPECT_TRUE(s.uses_state());
  EXPECT_TRUE(s.uses_xdot());
  EXPECT_FALSE(Signal::parse("sin(t)").uses_state());
}

}  // namespace
