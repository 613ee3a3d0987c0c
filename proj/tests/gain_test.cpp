#include <gtest/gtest.h>

#include <cmath>

#include "biftune/scenario.hpp"

using namespace biftune;

namespace {

Scenario tuned_forced_scenario() {
  return scenario_from_text(R"(
[system]
kind = "oscillator_full"
mu0 = 0.3
omega = 1.0
lambda = 1.0

[law]
kind = "log"
a = 1.0
b = 1.0

[initial]
x = 1.0
xdot = 0.0
mu = 0.0

[run]
horizon = 300.0
seed = 5

[forcing]
frequency = 1.0
)");
}

// Self-tuned at the bifurcation point: response to resonant forcing is
// strongly compressive (local log-log slope well below 1), and the F = 0
// row reports the free-running limit amplitude.
TEST(GainCurve, TunedResponseIsCompressive) {
  const auto points = gain_curve(tuned_forced_scenario(), {0.0, 0.01, 0.02, 0.04});
  ASSERT_EQ(points.size(), 4u);
  // Unforced self-tuned limit amplitude (energy balance of the cubic
  // damping against (mu - mu0)): ~0.579 for these parameters.
  EXPECT_NEAR(points[0].amplitude_out, 0.579, 0.05);
  for (std::size_t i = 2; i < points.size(); ++i) {
    ASSERT_FALSE(std::isnan(points[i].local_slope));
    EXPECT_LT(points[i].local_slope, 0.5) << "F=" << points[i].amplitude_in;
    EXPECT_GT(points[i].amplitude_out, points[i - 1].amplitude_out);
  }
}

// Frozen detuned parameter (mu = mu0 - 1): the loop is an ordinary damped
// oscillator, responding linearly (slope ~ 1) to weak forcing.
TEST(GainCurve, DetunedResponseIsLinear) {
  Scenario sc = tuned_forced_scenario();
  sc.law_kind = "custom";
  sc.law_f = "0";
  sc.law_g = "0";
  sc.mu_init = sc.mu0 - 1.0;
  const auto points = gain_curve(sc, {0.001, 0.002, 0.004});
  ASSERT_EQ(points.size(), 3u);
  for (std::size_t i = 1; i < points.size(); ++i) {
    ASSERT_FALSE(std::isnan(points[i].local_slope));
    EXPECT_NEAR(points[i].local_slope, 1.0, 0.05);
    EXPECT_FALSE(points[i].unsettled);
  }
  // Damping coefficient 1 at resonance: steady amplitude ~ F.
  EXPECT_NEAR(points[0].amplitude_out, 0.001, 2e-4);
}

TEST(GainCurve, Validation) {
  Scenario sc = tuned_forced_scenario();
  EXPECT_THROW(gain_curve(sc, {}), ValidationError);
  EXPECT_THROW(gain_curve(sc, {0.2, 0.1}), ValidationError);
  sc.lambda = 0.0;
  EXPECT_THROW(gain_curve(sc, {0.1}), ValidationError);
  Scenario fo = scenario_from_text("[system]\nkind = \"first_order\"\n[initial]\nx = 1.0\n");
  EXPECT_THROW(gain_curve(fo, {0.1}), ValidationError);
}

}  // namespace
