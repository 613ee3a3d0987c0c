#pragma once

// Adaptation laws mudot = f(amplitude) - g(mu) and numerical validators for
// the hypotheses under which they tune a system to its bifurcation point.
// Built-in variants:
//   log_law(a,b):      f(x) = -a*ln(x),     g(mu) = b*mu          (a, b > 0)
//   sigmoid:           f(x) = 1/(1+x^2),    g(mu) = 1/(1+e^-mu)
//   bounded_osc(a,b):  f(r) = 1/(1+r^a),    g(mu) = b*mu          (a, b > 0)
//   custom:            callables or grammar expressions

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "biftune/errors.hpp"
#include "biftune/signal.hpp"

namespace biftune {

class AdaptationLaw {
 public:
  enum class Kind { log_law, sigmoid, bounded_osc, custom };

  static AdaptationLaw log_law(double a, double b) {
    require_positive(a, b, "log_law");
    AdaptationLaw law(Kind::log_law, a, b);
    return law;
  }

  static AdaptationLaw sigmoid() { return AdaptationLaw(Kind::sigmoid, 0.0, 0.0); }

  static AdaptationLaw bounded_osc(double a, double b) {
    require_positive(a, b, "bounded_osc");
    return AdaptationLaw(Kind::bounded_osc, a, b);
  }

  // Custom law from callables; analytic derivatives optional.
  static AdaptationLaw custom(std::function<double(double)> f, std::function<double(double)> g,
                              std::function<double(double)> df = nullptr,
                              std::function<double(double)> dg = nullptr) {
    AdaptationLaw law(Kind::custom, 0.0, 0.0);
    law.f_fn_ = std::move(f);
    law.g_fn_ = std::move(g);
    law.df_fn_ = std::move(df);
    law.dg_fn_ = std::move(dg);
    return law;
  }

  // Custom law from grammar expressions; `x` is the amplitude in f_expr,
  // `mu` the parameter in g_expr.
  static AdaptationLaw custom_expr(const Signal& f_expr, const Signal& g_expr) {
    if (f_expr.uses_time() || g_expr.uses_time())
      throw ValidationError("custom law: f/g must not depend on t");
    AdaptationLaw law = custom(
        [f_expr](double amp) {
          SignalContext c;
          c.x = amp;
          return f_expr.eval(c);
        },
        [g_expr](double mu) {
          SignalContext c;
          c.mu = mu;
          return g_expr.eval(c);
        });
    law.f_source_ = f_expr.source();
    law.g_source_ = g_expr.source();
    return law;
  }

  double f(double amplitude) const {
    if (!(amplitude > 0.0))
      throw DomainViolation("adaptation law: amplitude must be > 0, got " +
                            std::to_string(amplitude));
    switch (kind_) {
      case Kind::log_law: return -a_ * std::log(amplitude);
      case Kind::sigmoid: return 1.0 / (1.0 + amplitude * amplitude);
      case Kind::bounded_osc: return 1.0 / (1.0 + std::pow(amplitude, a_));
      case Kind::custom: return f_fn_(amplitude);
    }
    return 0.0;
  }

  double g(double mu) const {
    switch (kind_) {
      case Kind::log_law:
      case Kind::bounded_osc: return b_ * mu;
      case Kind::sigmoid: return 1.0 / (1.0 + std::exp(-mu));
      case Kind::custom: return g_fn_(mu);
    }
    return 0.0;
  }

  // df/damplitude; analytic for the built-in variants, central differences
  // for custom laws without a supplied derivative.
  double df(double amplitude) const {
    if (!(amplitude > 0.0)) throw DomainViolation("adaptation law: df needs amplitude > 0");
    switch (kind_) {
      case Kind::log_law: return -a_ / amplitude;
      case Kind::sigmoid: {
        const double d = 1.0 + amplitude * amplitude;
        return -2.0 * amplitude / (d * d);
      }
      case Kind::bounded_osc: {
        const double ra = std::pow(amplitude, a_);
        const double d = 1.0 + ra;
        return -a_ * ra / (amplitude * d * d);
      }
      case Kind::custom: {
        if (df_fn_) return df_fn_(amplitude);
        const double h = std::min(1e-6 * (1.0 + amplitude), 0.5 * amplitude);
        return (f_fn_(amplitude + h) - f_fn_(amplitude - h)) / (2.0 * h);
      }
    }
    return 0.0;
  }

  double dg(double mu) const {
    switch (kind_) {
      case Kind::log_law:
      case Kind::bounded_osc: return b_;
      case Kind::sigmoid: {
        const double s = 1.0 / (1.0 + std::exp(-mu));
        return s * (1.0 - s);
      }
      case Kind::custom: {
        if (dg_fn_) return dg_fn_(mu);
        const double h = 1e-6 * (1.0 + std::abs(mu));
        return (g_fn_(mu + h) - g_fn_(mu - h)) / (2.0 * h);
      }
    }
    return 0.0;
  }

  Kind kind() const { return kind_; }
  double a() const { return a_; }
  double b() const { return b_; }
  const std::string& f_source() const { return f_source_; }
  const std::string& g_source() const { return g_source_; }

  std::string kind_name() const {
    switch (kind_) {
      case Kind::log_law: return "log";
      case Kind::sigmoid: return "sigmoid";
      case Kind::bounded_osc: return "bounded_osc";
      case Kind::custom: return "custom";
    }
    return "?";
  }

 private:
  AdaptationLaw(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {}

  static void require_positive(double a, double b, const char* name) {
    if (!(a > 0.0) || !(b > 0.0))
      throw ValidationError(std::string(name) + " law requires a > 0 and b > 0");
  }

  Kind kind_;
  double a_, b_;
  std::function<double(double)> f_fn_, g_fn_, df_fn_, dg_fn_;
  std::string f_source_, g_source_;
};

inline double law_rate(const AdaptationLaw& law, double amplitude, double mu) {
  if (!(amplitude > 0.0))
    throw DomainViolation("law_rate: amplitude must be > 0, got " + std::to_string(amplitude));
  return law.f(amplitude) - law.g(mu);
}

// Solves f(x*) = g(mu0) for x* > 0 by bracket scan over a geometric grid
// followed by bisection. Works for monotone f in either direction.
inline double equilibrium_point(const AdaptationLaw& law, double mu0) {
  const double target = law.g(mu0);
  auto h = [&](double x) { return law.f(x) - target; };

  double lo = 0.0, hi = 0.0;
  double xp = 1e-12;
  double hp = h(xp);
  for (int k = 1; k <= 24; ++k) {
    const double xn = xp * 10.0;  // bracket expansion factor 10
    const double hn = h(xn);
    if (hp == 0.0) {
      lo = hi = xp;
      break;
    }
    if (std::isfinite(hp) && std::isfinite(hn) && hp * hn <= 0.0) {
      lo = xp;
      hi = xn;
      break;
    }
    xp = xn;
    hp = hn;
  }
  if (hi == 0.0 && lo == 0.0)
    throw NotInImage("equilibrium_point: g(mu0)=" + std::to_string(target) +
                     " has no bracket in [1e-12, 1e12]");
  if (lo == hi) return lo;

  double hlo = h(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double hm = h(mid);
    if (std::abs(hm) <= 1e-15) {
      lo = hi = mid;
      break;
    }
    if (hlo * hm <= 0.0) {
      hi = mid;
    } else {
      lo = mid;
      hlo = hm;
    }
  }
  const double x_star = 0.5 * (lo + hi);
  if (std::abs(h(x_star)) > 1e-9)
    throw NotInImage("equilibrium_point: bisection did not reach a root (residual " +
                     std::to_string(h(x_star)) + ")");
  return x_star;
}

struct ConditionCheck {
  std::string name;
  bool passed = false;
  double margin = 0.0;                  // > 0 means satisfied with room
  std::optional<double> witness;        // sample where the condition failed
};

struct HypothesisReport {
  std::string theorem;  // "T1" or "T3/T4"
  std::vector<ConditionCheck> conditions;
  std::string grid_note;
  double check_tolerance = 1e-12;
  // T3/T4 quantities; NaN for T1 reports.
  double a_eff = std::numeric_limits<double>::quiet_NaN();
  double b_eff = std::numeric_limits<double>::quiet_NaN();
  double r_star = std::numeric_limits<double>::quiet_NaN();

  bool all_passed() const {
    for (const auto& c : conditions)
      if (!c.passed) return false;
    return true;
  }

  const ConditionCheck* find(const std::string& name) const {
    for (const auto& c : conditions)
      if (c.name == name) return &c;
    return nullptr;
  }
};

// Sampled check of the first theorem's hypotheses: f strictly decreasing on
// a log grid, g strictly increasing, g(mu0) in the image of f for each mu0
// in [mu0_lo, mu0_hi]. The parenthetical exponential-stability variant
// (derivatives bounded away from zero sign) is reported as separate entries.
inline HypothesisReport validate_theorem1(const AdaptationLaw& law, double mu0_lo = -5.0,
                                          double mu0_hi = 5.0, double mu0_step = 0.1) {
  constexpr int kPoints = 400;
  HypothesisReport rep;
  rep.theorem = "T1";
  rep.grid_note = "f: 400 log-spaced points in [1e-6,1e6]; g: 400 points in [-20,20]";

  double max_fp = -std::numeric_limits<double>::infinity();
  std::optional<double> f_witness;
  for (int i = 0; i < kPoints; ++i) {
    const double x = std::pow(10.0, -6.0 + 12.0 * double(i) / double(kPoints - 1));
    const double fp = law.df(x);
    if (fp > max_fp) max_fp = fp;
    if (fp >= 0.0 && !f_witness) f_witness = x;
  }
  rep.conditions.push_back(
      {"f_strictly_decreasing", max_fp < 0.0, -max_fp, max_fp < 0.0 ? std::nullopt : f_witness});
  rep.conditions.push_back({"f_derivative_strictly_negative (exp. stability)", max_fp < 0.0,
                            -max_fp, max_fp < 0.0 ? std::nullopt : f_witness});

  double min_gp = std::numeric_limits<double>::infinity();
  std::optional<double> g_witness;
  for (int i = 0; i < kPoints; ++i) {
    const double mu = -20.0 + 40.0 * double(i) / double(kPoints - 1);
    const double gp = law.dg(mu);
    if (gp < min_gp) min_gp = gp;
    if (gp <= 0.0 && !g_witness) g_witness = mu;
  }
  rep.conditions.push_back(
      {"g_strictly_increasing", min_gp > 0.0, min_gp, min_gp > 0.0 ? std::nullopt : g_witness});
  rep.conditions.push_back({"g_derivative_strictly_positive (exp. stability)", min_gp > 0.0,
                            min_gp, min_gp > 0.0 ? std::nullopt : g_witness});

  // Image condition over the requested mu0 range, via the same bracket the
  // equilibrium solver uses.
  bool image_ok = true;
  double image_margin = std::numeric_limits<double>::infinity();
  std::optional<double> image_witness;
  const double f_left = law.f(1e-12), f_right = law.f(1e12);
  const double f_min = std::min(f_left, f_right), f_max = std::max(f_left, f_right);
  for (double mu0 = mu0_lo; mu0 <= mu0_hi + 1e-12; mu0 += mu0_step) {
    const double gv = law.g(mu0);
    const double m = std::min(gv - f_min, f_max - gv);
    if (m < image_margin) image_margin = m;
    if (m <= 0.0 && !image_witness) {
      image_ok = false;
      image_witness = mu0;
    }
  }
  rep.conditions.push_back({"g(mu0)_in_image_of_f", image_ok, image_margin, image_witness});
  return rep;
}

// Hypotheses of the local oscillator result: with a_eff = -f'(r*) r* and
// b_eff = g'(mu0), requires b_eff > 0 and 0 < a_eff <= b_eff^2.
inline HypothesisReport validate_theorem3_4(const AdaptationLaw& law, double mu0, double omega,
                                            std::optional<double> r_star_hint = std::nullopt) {
  if (!(omega > 0.0)) throw ValidationError("validate_theorem3_4: omega must be > 0");
  HypothesisReport rep;
  rep.theorem = "T3/T4";
  rep.grid_note = "derivatives at r*, mu0 (analytic for built-in variants)";

  const double r_star = r_star_hint ? *r_star_hint : equilibrium_point(law, mu0);
  const double a_eff = -law.df(r_star) * r_star;
  const double b_eff = law.dg(mu0);
  rep.r_star = r_star;
  rep.a_eff = a_eff;
  rep.b_eff = b_eff;

  rep.conditions.push_back({"b_eff_positive", b_eff > 0.0, b_eff, std::nullopt});
  rep.conditions.push_back({"a_eff_positive", a_eff > 0.0, a_eff, std::nullopt});
  const double m = b_eff * b_eff - a_eff;
  rep.conditions.push_back({"a_eff_at_most_b_eff_squared", m >= 0.0, m, std::nullopt});
  return rep;
}

}  // namespace biftune
