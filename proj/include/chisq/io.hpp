#pragma once

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "chisq/admissibility.hpp"
#include "chisq/asymptotics.hpp"
#include "chisq/gof.hpp"
#include "chisq/montecarlo.hpp"
#include "chisq/pickands.hpp"

namespace chisq {

using json = nlohmann::ordered_json;

// JSON has no infinities; they are written as strings.
inline json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline json to_json(const Integral& i) {
  return {{"value", num(i.value)}, {"error", num(i.error)}, {"status", to_string(i.status)}};
}

inline json to_json(const PickandsValue& p) {
  return {{"value", num(p.value)},
          {"ci_low", num(p.ci_low)},
          {"ci_high", num(p.ci_high)},
          {"exact", p.exact},
          {"source", p.source}};
}

inline json to_json(const ExtendedValue& v) { return {{"value", num(v.value)}, {"status", to_string(v.status)}}; }

inline json to_json(const AdmissibilityReport& r) {
  json conds = json::array();
  for (const auto& c : r.conditions) {
    json ev = json::array();
    for (double e : c.evidence) ev.push_back(num(e));
    conds.push_back({{"condition", c.condition},
                     {"side", c.side},
                     {"verdict", to_string(c.verdict)},
                     {"evidence", ev},
                     {"note", c.note}});
  }
  return {{"scenario", to_string(r.scenario)},
          {"overall", to_string(r.overall)},
          {"f0", to_json(r.f0)},
          {"f1", to_json(r.f1)},
          {"conditions", conds}};
}

inline json to_json(const TailApprox& a) {
  json meta = json::object();
  for (const auto& [k, v] : a.meta) meta[k] = v;
  json j = {{"pickands", to_json(a.pickands)},
            {"gb", num(a.gb)},
            {"j_integral", to_json(a.j)},
            {"poly_exponent", num(a.poly_exponent)},
            {"kernel", a.kernel.describe()},
            {"coefficient", num(a.coefficient())},
            {"formula", a.formula},
            {"meta", meta}};
  if (a.report) j["admissibility"] = to_json(*a.report);
  return j;
}

inline json to_json(const ClosedFormValue& v) {
  return {{"u", num(v.u)},
          {"prefactor", num(v.prefactor)},
          {"integral", to_json(v.integral)},
          {"value", num(v.value)},
          {"formula", v.formula}};
}

inline json to_json(const MCEstimate& e) {
  return {{"p_hat", num(e.p_hat)},
          {"ci_low", num(e.ci_low)},
          {"ci_high", num(e.ci_high)},
          {"n_paths", e.n_paths},
          {"hits", e.hits},
          {"grid", e.grid},
          {"seed", e.seed},
          {"mesh", num(e.mesh)},
          {"below_floor", e.below_floor}};
}

inline json to_json(const TailEstimate& t) {
  return {{"u", num(t.u)},
          {"coarse", to_json(t.coarse)},
          {"fine", to_json(t.fine)},
          {"extrapolated", num(t.extrapolated)},
          {"extrapolated_ci", {num(t.extrapolated_low), num(t.extrapolated_high)}},
          {"mesh_converged", t.mesh_converged},
          {"argmax_histogram", t.argmax_histogram}};
}

inline json to_json(const Comparison& c) {
  json rows = json::array();
  for (const auto& r : c.rows)
    rows.push_back({{"u", num(r.u)},
                    {"asymptotic", num(r.asymptotic)},
                    {"mc", to_json(r.mc)},
                    {"ratio", r.ratio ? num(*r.ratio) : json(nullptr)},
                    {"ratio_extrapolated", r.ratio_extrapolated ? num(*r.ratio_extrapolated) : json(nullptr)}});
  return {{"rows", rows},
          {"ratio_trend_to_one", c.ratio_trend_to_one},
          {"grid", c.grid},
          {"truncated", c.truncated},
          {"n_paths", c.n_paths},
          {"seed", c.seed}};
}

inline json to_json(const SlepianReport& r) {
  return {{"n", r.n},
          {"u", num(r.u)},
          {"factor", num(r.factor)},
          {"x", to_json(r.x)},
          {"y", to_json(r.y)},
          {"pairs_checked", r.pairs_checked},
          {"holds", r.holds},
          {"holds_with_margin", r.holds_with_margin},
          {"grid", r.grid}};
}

inline json to_json(const PickandsEstimate& e) {
  json lv = json::array();
  for (const auto& l : e.levels)
    lv.push_back({{"mesh", num(l.mesh)},
                  {"value", num(l.value)},
                  {"std_error", num(l.std_error)},
                  {"ci_low", num(l.ci_low)},
                  {"ci_high", num(l.ci_high)}});
  return {{"alpha", num(e.alpha)},
          {"horizon", num(e.horizon)},
          {"n_paths", e.n_paths},
          {"seed", e.seed},
          {"method", to_string(e.method)},
          {"levels", lv},
          {"value", num(e.primary().value)}};
}

inline json to_json(const GofResult& r) {
  return {{"L", num(r.L)}, {"nu", num(r.nu)}, {"n", r.n}, {"p_value", num(r.p_value)}, {"method", r.method}};
}

}  // namespace chisq
