#pragma once

#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "chisq/catalog.hpp"
#include "chisq/errors.hpp"
#include "chisq/expression.hpp"
#include "chisq/kernel.hpp"
#include "chisq/model.hpp"

// String ids for catalog models and trends, as used on the command line.
namespace chisq::registry {

inline double parse_number(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw ParseError(what + ": not a number '" + s + "'", 0);
  return v;
}

inline int parse_int(const std::string& s, const std::string& what) {
  const double v = parse_number(s, what);
  if (v != static_cast<int>(v)) throw DomainError(what + ": expected an integer, got '" + s + "'");
  return static_cast<int>(v);
}

inline std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item, what));
  if (out.empty()) throw DomainError(what + ": empty list");
  return out;
}

// "(0,1]", "[1e-4,1]", "(0,1)"
inline Interval parse_interval(const std::string& s) {
  if (s.size() < 5) throw ParseError("interval: expected e.g. (0,1] or [0.001,0.999]", 0);
  const char l = s.front();
  const char r = s.back();
  if ((l != '(' && l != '[') || (r != ')' && r != ']')) throw ParseError("interval: bad brackets in '" + s + "'", 0);
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw ParseError("interval: missing comma in '" + s + "'", 0);
  Interval e{parse_number(s.substr(1, comma - 1), "interval"), parse_number(s.substr(comma + 1, s.size() - comma - 2), "interval"),
             l == '(', r == ')'};
  e.validate();
  return e;
}

namespace detail {

inline std::pair<std::string, std::optional<std::string>> split_id(const std::string& id) {
  const auto c = id.find(':');
  if (c == std::string::npos) return {id, std::nullopt};
  return {id.substr(0, c), id.substr(c + 1)};
}

inline const std::string& need(const std::optional<std::string>& arg, const std::string& id) {
  if (!arg) throw ParseError("'" + id + "' needs a parameter after ':'", id.size());
  return *arg;
}

}  // namespace detail

// Locally stationary component given by expressions: C(t) and K(t) = t^{alpha/2} (ln 1/t)^beta.
struct CustomComponent {
  std::string c_expr = "1";
  double alpha = 1;
  double beta = 0;
};

struct ModelRequest {
  std::string id = "bridge";
  std::optional<Interval> interval;
  int n = 1;  // number of squared coordinates for ou and custom models
  CustomComponent custom;
};

inline ChiSquareModel make_model(const ModelRequest& r) {
  const auto [name, arg] = detail::split_id(r.id);
  ChiSquareModel m;
  if (name == "bridge") {
    m = catalog::bridge_model();
  } else if (name == "bessel") {
    m = catalog::bessel_model(parse_int(detail::need(arg, r.id), "bessel order"));
  } else if (name == "fbm") {
    m = catalog::fbm_model(parse_number(detail::need(arg, r.id), "Hurst index"));
  } else if (name == "ou") {
    m = catalog::ou_model(parse_number(detail::need(arg, r.id), "OU rate"), r.n);
  } else if (name == "mixed") {
    m = catalog::bridge_bm_fbm_model(parse_number(detail::need(arg, r.id), "Hurst index"));
  } else if (name == "custom") {
    if (r.n < 1) throw DomainError("custom model needs n >= 1");
    Component c;
    c.kernel = r.custom.beta == 0 ? RegVarKernel::power(r.custom.alpha)
                                  : RegVarKernel::power_log(r.custom.alpha, r.custom.beta);
    c.c = Expression::parse(r.custom.c_expr).as_local_variance();
    c.id = "custom";
    m = ChiSquareModel::homogeneous(c, std::vector<double>(r.n, 1.0), Interval::open(0, 1));
    m.name = "custom[C=" + r.custom.c_expr + "]";
  } else {
    throw ParseError("unknown model '" + r.id + "' (bridge, bessel:n, fbm:H, ou:lambda, mixed:H, custom)", 0);
  }
  if (r.interval) m = m.with_interval(*r.interval);
  return m;
}

inline TrendFunction make_trend(const std::string& id, const std::string& expr = "") {
  const auto [name, arg] = detail::split_id(id);
  if (name == "zero") return trends::zero();
  if (name == "const") return trends::constant(parse_number(detail::need(arg, id), "constant trend"));
  if (name == "gnu") return trends::gnu(parse_number(detail::need(arg, id), "nu"));
  if (name == "gnu_plain") return trends::gnu_plain(parse_number(detail::need(arg, id), "nu"));
  if (name == "grho") return trends::grho(parse_number(detail::need(arg, id), "rho"));
  if (name == "lnln") return trends::lnln(parse_number(detail::need(arg, id), "lnln factor"));
  if (name == "custom") {
    if (expr.empty()) throw ConfigurationError("trend 'custom' needs an expression (--g)");
    return Expression::parse(expr).as_trend();
  }
  throw ParseError("unknown trend '" + id + "' (zero, const:c, gnu:nu, gnu_plain:nu, grho:rho, lnln:a, custom)", 0);
}

}  // namespace chisq::registry
