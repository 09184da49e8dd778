#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "chisq/errors.hpp"
#include "chisq/model.hpp"
#include "chisq/point.hpp"

namespace chisq {

// Small expression language over t:
//   numbers, t, pi, e, + - * / ^, ln, exp, pow(a,b), sqrt, loglog(x) = ln(ln(x)).
// Logarithms of t and 1-t are routed through the Point fields, so expressions
// such as ln(1/t) stay accurate arbitrarily close to the endpoints.
class Expression {
 public:
  enum class Op { num, var, add, sub, mul, div, neg, ln, exp, pow, sqrt, loglog };

  struct Node {
    Op op = Op::num;
    double value = 0;
    std::shared_ptr<const Node> a;
    std::shared_ptr<const Node> b;
  };
  using NodePtr = std::shared_ptr<const Node>;

  static Expression parse(const std::string& text) {
    Parser p{text, 0};
    Expression e;
    e.text_ = text;
    e.root_ = p.expr();
    p.skip();
    if (p.pos != text.size()) throw ParseError("unexpected '" + std::string(1, text[p.pos]) + "'", p.pos);
    return e;
  }

  [[nodiscard]] const std::string& text() const { return text_; }
  [[nodiscard]] double operator()(const Point& p) const { return eval(*root_, p); }
  [[nodiscard]] double operator()(double t) const { return eval(*root_, Point::at(t)); }
  [[nodiscard]] double log_value(const Point& p) const { return eval_log(*root_, p); }

  [[nodiscard]] TrendFunction as_trend() const {
    TrendFunction g;
    g.g = [e = *this](const Point& p) { return e(p); };
    g.name = "expr:" + text_;
    return g;
  }

  // C(t) as a singular power form. The endpoint exponents are read off the
  // log-slope deep inside each end; the remainder is frozen below 1e-300.
  [[nodiscard]] LocalVariance as_local_variance() const {
    const auto slope = [this](bool right) {
      const Point p1 = right ? Point::near1_x(200 * M_LN10) : Point::near0_x(200 * M_LN10);
      const Point p2 = right ? Point::near1_x(100 * M_LN10) : Point::near0_x(100 * M_LN10);
      const double l1 = log_value(p1);
      const double l2 = log_value(p2);
      const double d = right ? p1.log_1mt - p2.log_1mt : p1.log_t - p2.log_t;
      const double a = -(l1 - l2) / d;
      const double r = std::round(a * 1e6) / 1e6;
      return std::isfinite(r) ? r : 0.0;
    };
    const double a0 = slope(false);
    const double a1 = slope(true);
    LocalVariance v;
    v.name = "expr:" + text_;
    v.c.pow0 = a0;
    v.c.pow1 = a1;
    v.c.log_rest = [e = *this, a0, a1](const Point& p) {
      const double floor = 300 * M_LN10;
      Point q = p;
      if (-p.log_t > floor) q = Point::near0_x(floor);
      if (-p.log_1mt > floor) q = Point::near1_x(floor);
      return e.log_value(q) + a0 * q.log_t + a1 * q.log_1mt;
    };
    if (!(v(0.5) > 0)) throw DomainError("local variance must be positive");
    return v;
  }

 private:
  static bool is(const Node& n, Op op) { return n.op == op; }
  static bool is_one_minus_t(const Node& n) {
    return n.op == Op::sub && n.a->op == Op::num && n.a->value == 1 && n.b->op == Op::var;
  }

  static double eval(const Node& n, const Point& p) {
    switch (n.op) {
      case Op::num: return n.value;
      case Op::var: return p.t;
      case Op::add: return eval(*n.a, p) + eval(*n.b, p);
      case Op::sub: return is_one_minus_t(n) ? p.one_minus_t() : eval(*n.a, p) - eval(*n.b, p);
      case Op::mul: return eval(*n.a, p) * eval(*n.b, p);
      case Op::div: return eval(*n.a, p) / eval(*n.b, p);
      case Op::neg: return -eval(*n.a, p);
      case Op::ln:
        if (is(*n.a, Op::ln)) return eval_loglog(*n.a->a, p);
        if (is(*n.a, Op::loglog)) return std::log(eval_loglog(*n.a->a, p));
        return eval_log(*n.a, p);
      case Op::exp: return std::exp(eval(*n.a, p));
      case Op::pow: return std::pow(eval(*n.a, p), eval(*n.b, p));
      case Op::sqrt: return std::sqrt(eval(*n.a, p));
      case Op::loglog: return eval_loglog(*n.a, p);
    }
    return std::nan("");
  }

  // ln of the node value, exact in the endpoint fields where the structure allows.
  static double eval_log(const Node& n, const Point& p) {
    switch (n.op) {
      case Op::num: return std::log(n.value);
      case Op::var: return p.log_t;
      case Op::sub:
        if (is_one_minus_t(n)) return p.log_1mt;
        break;
      case Op::mul: return eval_log(*n.a, p) + eval_log(*n.b, p);
      case Op::div: return eval_log(*n.a, p) - eval_log(*n.b, p);
      case Op::exp: return eval(*n.a, p);
      case Op::pow: return eval(*n.b, p) * eval_log(*n.a, p);
      case Op::sqrt: return 0.5 * eval_log(*n.a, p);
      default: break;
    }
    return std::log(eval(n, p));
  }

  // ln ln of the node value; ln(c/t) -> ll0 once ln(1/t) overflows.
  static double eval_loglog(const Node& n, const Point& p) {
    const double l = eval_log(n, p);
    if (std::isfinite(l)) return std::log(l);
    if (n.op == Op::div && n.b->op == Op::var && l > 0) return p.ll0;
    if (n.op == Op::div && is_one_minus_t(*n.b) && l > 0) return p.ll1;
    return std::log(l);
  }

  struct Parser {
    const std::string& s;
    std::size_t pos;

    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool accept(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    void expect(char c) {
      if (!accept(c)) throw ParseError(std::string("expected '") + c + "'", pos);
    }
    static NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr, double v = 0) {
      auto n = std::make_shared<Node>();
      n->op = op;
      n->a = std::move(a);
      n->b = std::move(b);
      n->value = v;
      return n;
    }

    NodePtr expr() {
      NodePtr lhs = term();
      for (;;) {
        if (accept('+')) {
          lhs = make(Op::add, lhs, term());
        } else if (accept('-')) {
          lhs = make(Op::sub, lhs, term());
        } else {
          return lhs;
        }
      }
    }
    NodePtr term() {
      NodePtr lhs = unary();
      for (;;) {
        if (accept('*')) {
          lhs = make(Op::mul, lhs, unary());
        } else if (accept('/')) {
          lhs = make(Op::div, lhs, unary());
        } else {
          return lhs;
        }
      }
    }
    NodePtr unary() {
      if (accept('-')) return make(Op::neg, unary());
      if (accept('+')) return unary();
      NodePtr base = primary();
      if (accept('^')) return make(Op::pow, base, unary());
      return base;
    }
    NodePtr primary() {
      skip();
      if (pos >= s.size()) throw ParseError("unexpected end of expression", pos);
      const char c = s[pos];
      if (c == '(') {
        ++pos;
        NodePtr e = expr();
        expect(')');
        return e;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const char* begin = s.c_str() + pos;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) throw ParseError("malformed number", pos);
        pos += static_cast<std::size_t>(end - begin);
        return make(Op::num, nullptr, nullptr, v);
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        const std::size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
        const std::string id = s.substr(start, pos - start);
        if (id == "t") return make(Op::var);
        if (id == "pi") return make(Op::num, nullptr, nullptr, M_PI);
        if (id == "e") return make(Op::num, nullptr, nullptr, M_E);
        Op op;
        if (id == "ln" || id == "log") {
          op = Op::ln;
        } else if (id == "exp") {
          op = Op::exp;
        } else if (id == "sqrt") {
          op = Op::sqrt;
        } else if (id == "loglog") {
          op = Op::loglog;
        } else if (id == "pow") {
          op = Op::pow;
        } else {
          throw ParseError("unknown identifier '" + id + "'", start);
        }
        expect('(');
        NodePtr a = expr();
        NodePtr b;
        if (op == Op::pow) {
          expect(',');
          b = expr();
        }
        expect(')');
        return make(op, a, b);
      }
      throw ParseError(std::string("unexpected '") + c + "'", pos);
    }
  };

  std::string text_;
  NodePtr root_;
};

}  // namespace chisq
