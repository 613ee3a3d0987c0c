#pragma once

// A small closed-form expression grammar for forcing and perturbation
// signals: constants, sinusoids, sums, products, integer powers, and
// rational terms whose denominator is a positive polynomial. Every parsed
// signal carries a finite bound computed from its structure, so uniform
// boundedness is established at parse time rather than assumed.
//
// Grammar (usual precedence):
//   expr    := term (('+'|'-') term)*
//   term    := unary (('*'|'/') unary)*
//   unary   := '-' unary | postfix
//   postfix := primary ('^' integer)?
//   primary := number | 'pi' | 't' | 'x' | 'xdot' | 'mu'
//            | ('sin'|'cos') '(' expr ')' | '(' expr ')'
//
// Bare t/x/xdot/mu are admissible only inside sin/cos or inside a rational
// term that the bound analysis can certify; otherwise parsing fails.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "biftune/errors.hpp"

namespace biftune {

struct SignalContext {
  double t = 0.0;
  double x = 0.0;
  double xdot = 0.0;
  double mu = 0.0;
};

namespace detail {

enum class SigOp : std::uint8_t { kConst, kVar, kAdd, kSub, kMul, kDiv, kNeg, kSin, kCos, kPow };
enum class SigVar : std::uint8_t { kT, kX, kXdot, kMu };

struct SigNode {
  SigOp op;
  double value = 0.0;  // kConst: value; kPow: integer exponent
  SigVar var = SigVar::kT;
  int a = -1, b = -1;
};

using Poly = std::vector<double>;  // coefficients, ascending degree

inline Poly poly_add(const Poly& p, const Poly& q, double sq) {
  Poly r(std::max(p.size(), q.size()), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) r[i] += p[i];
  for (std::size_t i = 0; i < q.size(); ++i) r[i] += sq * q[i];
  return r;
}

inline std::optional<Poly> poly_mul(const Poly& p, const Poly& q) {
  if (p.size() + q.size() > 18) return std::nullopt;  // cap the degree
  Poly r(p.size() + q.size() - 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
  return r;
}

inline double poly_eval(const Poly& p, double v) {
  double acc = 0.0;
  for (std::size_t i = p.size(); i-- > 0;) acc = acc * v + p[i];
  return acc;
}

inline void poly_trim(Poly& p) {
  while (p.size() > 1 && p.back() == 0.0) p.pop_back();
}

}  // namespace detail

class Signal {
 public:
  Signal() = default;

  static Signal parse(const std::string& text) { return Signal(text); }

  // Constant signal helper.
  static Signal constant(double c) { return parse(format_double(c)); }

  double eval(const SignalContext& ctx) const {
    return root_ < 0 ? 0.0 : eval_node(root_, ctx);
  }

  double operator()(const SignalContext& ctx) const { return eval(ctx); }

  // Certified sup over all arguments (conservative for rational terms).
  double bound() const { return bound_; }

  bool uses_time() const { return uses_[0]; }
  bool uses_state() const { return uses_[1] || uses_[2] || uses_[3]; }
  bool uses_xdot() const { return uses_[2]; }
  bool empty() const { return root_ < 0; }
  const std::string& source() const { return source_; }

  // Period in t when the expression's time dependence is a single-frequency
  // sinusoid family; 0 when independent of t; nullopt otherwise.
  std::optional<double> time_period() const {
    if (root_ < 0 || !uses_time()) return 0.0;
    std::optional<double> period;
    if (!collect_period(root_, period)) return std::nullopt;
    return period;
  }

 private:
  using Node = detail::SigNode;
  using Op = detail::SigOp;
  using Var = detail::SigVar;

  explicit Signal(const std::string& text) : source_(text) {
    pos_ = 0;
    root_ = parse_expr();
    skip_ws();
    if (pos_ != source_.size())
      throw ValidationError("signal: trailing input at position " + std::to_string(pos_) +
                            " in '" + source_ + "'");
    auto b = bound_of(root_);
    if (!b)
      throw ValidationError(
          "signal: '" + source_ +
          "' is not bounded by construction (t/x/xdot/mu must appear inside sin/cos or a "
          "certified rational term)");
    bound_ = *b;
  }

  static std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }

  // ---- evaluation ----
  double eval_node(int id, const SignalContext& c) const {
    const Node& n = nodes_[id];
    switch (n.op) {
      case Op::kConst: return n.value;
      case Op::kVar:
        switch (n.var) {
          case Var::kT: return c.t;
          case Var::kX: return c.x;
          case Var::kXdot: return c.xdot;
          case Var::kMu: return c.mu;
        }
        return 0.0;
      case Op::kAdd: return eval_node(n.a, c) + eval_node(n.b, c);
      case Op::kSub: return eval_node(n.a, c) - eval_node(n.b, c);
      case Op::kMul: return eval_node(n.a, c) * eval_node(n.b, c);
      case Op::kDiv: return eval_node(n.a, c) / eval_node(n.b, c);
      case Op::kNeg: return -eval_node(n.a, c);
      case Op::kSin: return std::sin(eval_node(n.a, c));
      case Op::kCos: return std::cos(eval_node(n.a, c));
      case Op::kPow: {
        double base = eval_node(n.a, c);
        double acc = 1.0;
        for (int k = 0; k < int(n.value); ++k) acc *= base;
        return acc;
      }
    }
    return 0.0;
  }

  // ---- parser ----
  void skip_ws() {
    while (pos_ < source_.size() && std::isspace(static_cast<unsigned char>(source_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < source_.size() && source_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ValidationError("signal: " + msg + " at position " + std::to_string(pos_) + " in '" +
                          source_ + "'");
  }

  int push(Node n) {
    nodes_.push_back(n);
    return int(nodes_.size()) - 1;
  }

  int parse_expr() {
    int lhs = parse_term();
    for (;;) {
      if (eat('+')) lhs = push({Op::kAdd, 0.0, Var::kT, lhs, parse_term()});
      else if (eat('-')) lhs = push({Op::kSub, 0.0, Var::kT, lhs, parse_term()});
      else return lhs;
    }
  }

  int parse_term() {
    int lhs = parse_unary();
    for (;;) {
      if (eat('*')) lhs = push({Op::kMul, 0.0, Var::kT, lhs, parse_unary()});
      else if (eat('/')) lhs = push({Op::kDiv, 0.0, Var::kT, lhs, parse_unary()});
      else return lhs;
    }
  }

  int parse_unary() {
    if (eat('-')) return push({Op::kNeg, 0.0, Var::kT, parse_unary(), -1});
    return parse_postfix();
  }

  int parse_postfix() {
    int base = parse_primary();
    skip_ws();
    if (eat('^')) {
      skip_ws();
      std::size_t start = pos_;
      while (pos_ < source_.size() && std::isdigit(static_cast<unsigned char>(source_[pos_])))
        ++pos_;
      if (pos_ == start) fail("expected a nonnegative integer exponent after '^'");
      const int k = std::stoi(source_.substr(start, pos_ - start));
      if (k > 12) fail("exponent too large (max 12)");
      return push({Op::kPow, double(k), Var::kT, base, -1});
    }
    return base;
  }

  int parse_primary() {
    skip_ws();
    if (pos_ >= source_.size()) fail("unexpected end of input");
    const char c = source_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = std::stod(source_.substr(pos_), &used);
      pos_ += used;
      return push({Op::kConst, v, Var::kT, -1, -1});
    }
    if (c == '(') {
      ++pos_;
      int e = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < source_.size() &&
             (std::isalnum(static_cast<unsigned char>(source_[pos_])) || source_[pos_] == '_'))
        ++pos_;
      const std::string ident = source_.substr(start, pos_ - start);
      if (ident == "sin" || ident == "cos") {
        if (!eat('(')) fail("expected '(' after '" + ident + "'");
        int arg = parse_expr();
        if (!eat(')')) fail("expected ')'");
        return push({ident == "sin" ? Op::kSin : Op::kCos, 0.0, Var::kT, arg, -1});
      }
      if (ident == "pi") return push({Op::kConst, M_PI, Var::kT, -1, -1});
      if (ident == "t") return make_var(Var::kT);
      if (ident == "x") return make_var(Var::kX);
      if (ident == "xdot") return make_var(Var::kXdot);
      if (ident == "mu") return make_var(Var::kMu);
      fail("unknown identifier '" + ident + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  int make_var(Var v) {
    uses_[std::size_t(v)] = true;
    return push({Op::kVar, 0.0, v, -1, -1});
  }

  // ---- bound analysis ----
  std::optional<double> bound_of(int id) const {
    const Node& n = nodes_[id];
    switch (n.op) {
      case Op::kConst: return std::abs(n.value);
      case Op::kVar: return std::nullopt;
      case Op::kSin:
      case Op::kCos: return 1.0;
      case Op::kNeg: return bound_of(n.a);
      case Op::kAdd:
      case Op::kSub: {
        auto ba = bound_of(n.a), bb = bound_of(n.b);
        if (ba && bb) return *ba + *bb;
        return std::nullopt;
      }
      case Op::kMul: {
        auto ba = bound_of(n.a), bb = bound_of(n.b);
        if (ba && bb) return *ba * *bb;
        return std::nullopt;
      }
      case Op::kPow: {
        auto ba = bound_of(n.a);
        if (!ba) return std::nullopt;
        double acc = 1.0;
        for (int k = 0; k < int(n.value); ++k) acc *= *ba;
        return acc;
      }
      case Op::kDiv: return bound_of_div(n.a, n.b);
    }
    return std::nullopt;
  }

  // num/den is certified when den is a single-variable polynomial with a
  // strictly positive sampled minimum (or a nonzero constant), and num is
  // either bounded or a polynomial in the same variable of degree <= den's.
  std::optional<double> bound_of_div(int num, int den) const {
    auto bden_const = as_constant(den);
    if (bden_const) {
      if (*bden_const == 0.0) return std::nullopt;
      auto bnum = bound_of(num);
      if (bnum) return *bnum / std::abs(*bden_const);
      return std::nullopt;
    }
    for (Var v : {Var::kT, Var::kX, Var::kXdot, Var::kMu}) {
      auto pden = as_poly(den, v);
      if (!pden) continue;
      detail::poly_trim(*pden);
      if (pden->size() < 2) continue;
      const std::size_t deg_den = pden->size() - 1;
      if (deg_den % 2 != 0 || pden->back() <= 0.0) return std::nullopt;
      double den_min = sampled_min(*pden);
      if (den_min <= 0.0) return std::nullopt;

      auto bnum = bound_of(num);
      if (bnum) return *bnum / den_min;

      auto pnum = as_poly(num, v);
      if (!pnum) return std::nullopt;
      detail::poly_trim(*pnum);
      if (pnum->size() - 1 > deg_den) return std::nullopt;
      double sup = std::abs(pnum->back() / pden->back());
      for (double s : sample_grid())
        sup = std::max(sup, std::abs(detail::poly_eval(*pnum, s) / detail::poly_eval(*pden, s)));
      return 1.05 * sup;  // sampled estimate with headroom
    }
    return std::nullopt;
  }

  std::optional<double> as_constant(int id) const {
    const Node& n = nodes_[id];
    switch (n.op) {
      case Op::kConst: return n.value;
      case Op::kNeg: {
        auto a = as_constant(n.a);
        if (a) return -*a;
        return std::nullopt;
      }
      case Op::kAdd:
      case Op::kSub:
      case Op::kMul:
      case Op::kDiv: {
        auto a = as_constant(n.a), b = as_constant(n.b);
        if (!a || !b) return std::nullopt;
        switch (n.op) {
          case Op::kAdd: return *a + *b;
          case Op::kSub: return *a - *b;
          case Op::kMul: return *a * *b;
          default: return (*b == 0.0) ? std::nullopt : std::optional<double>(*a / *b);
        }
      }
      default: return std::nullopt;
    }
  }

  std::optional<detail::Poly> as_poly(int id, Var v) const {
    const Node& n = nodes_[id];
    switch (n.op) {
      case Op::kConst: return detail::Poly{n.value};
      case Op::kVar:
        if (n.var == v) return detail::Poly{0.0, 1.0};
        return std::nullopt;
      case Op::kNeg: {
        auto p = as_poly(n.a, v);
        if (!p) return std::nullopt;
        for (double& c : *p) c = -c;
        return p;
      }
      case Op::kAdd:
      case Op::kSub: {
        auto p = as_poly(n.a, v), q = as_poly(n.b, v);
        if (!p || !q) return std::nullopt;
        return detail::poly_add(*p, *q, n.op == Op::kAdd ? 1.0 : -1.0);
      }
      case Op::kMul: {
        auto p = as_poly(n.a, v), q = as_poly(n.b, v);
        if (!p || !q) return std::nullopt;
        return detail::poly_mul(*p, *q);
      }
      case Op::kPow: {
        auto p = as_poly(n.a, v);
        if (!p) return std::nullopt;
        detail::Poly acc{1.0};
        for (int k = 0; k < int(n.value); ++k) {
          auto r = detail::poly_mul(acc, *p);
          if (!r) return std::nullopt;
          acc = *r;
        }
        return acc;
      }
      default: return std::nullopt;
    }
  }

  static std::vector<double> sample_grid() {
    std::vector<double> g;
    g.push_back(0.0);
    for (int k = -80; k <= 80; ++k) {
      const double m = std::pow(10.0, double(k) / 10.0);  // 1e-8 .. 1e8
      g.push_back(m);
      g.push_back(-m);
    }
    return g;
  }

  static double sampled_min(const detail::Poly& p) {
    double m = detail::poly_eval(p, 0.0);
    for (double s : sample_grid()) m = std::min(m, detail::poly_eval(p, s));
    return m;
  }

  // ---- time-period detection ----
  bool node_uses_time(int id) const {
    const Node& n = nodes_[id];
    if (n.op == Op::kVar) return n.var == Var::kT;
    bool u = false;
    if (n.a >= 0) u = u || node_uses_time(n.a);
    if (n.op != Op::kPow && n.b >= 0) u = u || node_uses_time(n.b);
    return u;
  }

  // True when every t occurrence sits under sin/cos with argument linear in
  // t; accumulates the common period.
  bool collect_period(int id, std::optional<double>& period) const {
    const Node& n = nodes_[id];
    if (n.op == Op::kVar) return n.var != Var::kT;
    if (n.op == Op::kSin || n.op == Op::kCos) {
      if (!node_uses_time(n.a)) return true;
      auto p = as_poly(n.a, Var::kT);
      if (!p) return false;
      detail::poly_trim(*p);
      if (p->size() != 2) return false;  // need w*t + c with w != 0
      const double w = std::abs((*p)[1]);
      if (w == 0.0) return true;
      const double tp = 2.0 * M_PI / w;
      if (!period) {
        period = tp;
        return true;
      }
      return std::abs(*period - tp) <= 1e-9 * std::max(1.0, std::abs(tp));
    }
    bool ok = true;
    if (n.a >= 0) ok = ok && collect_period(n.a, period);
    if (n.op != Op::kPow && n.b >= 0) ok = ok && collect_period(n.b, period);
    return ok;
  }

  std::string source_;
  std::vector<Node> nodes_;
  int root_ = -1;
  std::size_t pos_ = 0;
  double bound_ = 0.0;
  bool uses_[4] = {false, false, false, false};
};

}  // namespace biftune
