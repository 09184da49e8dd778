// Command line front end: one subcommand per library operation.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chisq/chisq.hpp"

namespace {

using chisq::json;

struct ModelOptions {
  std::string model = "bridge";
  std::string interval;
  int n = 1;
  std::string c_expr = "1";
  double alpha = 1;
  double beta = 0;
  std::string trend = "zero";
  std::string g_expr;

  void add(CLI::App* app, bool with_trend = true) {
    app->add_option("--model", model, "bridge, bessel:n, fbm:H, ou:lambda, mixed:H or custom")->capture_default_str();
    app->add_option("--interval", interval, "override E, e.g. [1e-4,1] or (0,1]");
    app->add_option("--n", n, "number of squared coordinates (ou, custom)")->capture_default_str();
    app->add_option("--c", c_expr, "custom model: expression for C(t)")->capture_default_str();
    app->add_option("--alpha", alpha, "custom model: kernel index alpha")->capture_default_str();
    app->add_option("--beta", beta, "custom model: log power of the kernel")->capture_default_str();
    if (with_trend) {
      app->add_option("--trend", trend, "zero, const:c, gnu:nu, gnu_plain:nu, grho:rho, lnln:a or custom")
          ->capture_default_str();
      app->add_option("--g", g_expr, "custom trend expression in t");
    }
  }

  [[nodiscard]] chisq::ChiSquareModel build() const {
    chisq::registry::ModelRequest r;
    r.id = model;
    r.n = n;
    r.custom = {c_expr, alpha, beta};
    if (!interval.empty()) r.interval = chisq::registry::parse_interval(interval);
    return chisq::registry::make_model(r);
  }

  [[nodiscard]] chisq::TrendFunction trend_fn() const { return chisq::registry::make_trend(trend, g_expr); }
};

struct McOptions {
  std::size_t paths = 100000;
  std::optional<std::uint64_t> seed;
  std::optional<double> d;
  double d_divisor = 5;
  double truncation = 1e-4;
  std::size_t block = 4096;

  void add(CLI::App* app) {
    app->add_option("--paths", paths, "number of simulated paths")->capture_default_str();
    app->add_option("--seed", seed, "random seed (required)")->required();
    app->add_option("--d", d, "f-mesh of the coarse grid (default q(u)/d-divisor)");
    app->add_option("--d-divisor", d_divisor, "coarse f-mesh is q(u) divided by this")->capture_default_str();
    app->add_option("--truncation", truncation, "distance kept from a singular open end")->capture_default_str();
    app->add_option("--block", block, "paths per random-number block")->capture_default_str();
  }

  [[nodiscard]] chisq::MCConfig config(int threads) const {
    chisq::MCConfig c;
    c.n_paths = paths;
    c.seed = *seed;
    c.threads = threads;
    c.d = d;
    c.d_divisor = d_divisor;
    c.truncation = truncation;
    c.block = block;
    return c;
  }
};

struct Output {
  std::string out;
  std::string manifest;
};

std::string human(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw chisq::ConfigurationError("cannot write " + path);
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
}

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw chisq::ConfigurationError("cannot read " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw chisq::ParseError(std::string("manifest: ") + e.what(), e.byte);
  }
}

class Cli {
 public:
  int run(std::vector<std::string> args);

 private:
  int dispatch(CLI::App& app, const std::vector<std::string>& args);
  json manifest(const std::string& command, const CLI::App& sub) const;
  void finish(const std::string& command, const CLI::App& sub, json body, const std::string& text = "");

  int threads_ = 0;
  Output io_;
  std::vector<std::string> args_;
  std::optional<std::string> stdin_;  // sample text read from stdin, kept for the manifest
};

bool is_destination(const std::string& a) { return a == "--out" || a == "--manifest"; }

bool is_destination_assignment(const std::string& a) {
  return a.rfind("--out=", 0) == 0 || a.rfind("--manifest=", 0) == 0;
}

// Arguments without the output destinations, which are not part of the configuration.
std::vector<std::string> configuration_args(const std::vector<std::string>& args) {
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (is_destination(args[i])) {
      ++i;
      continue;
    }
    if (!is_destination_assignment(args[i])) kept.push_back(args[i]);
  }
  return kept;
}

json Cli::manifest(const std::string& command, const CLI::App& sub) const {
  json m;
  m["tool"] = "chisq";
  m["version"] = chisq::kVersion;
  m["command"] = command;
  m["argv"] = configuration_args(args_);
  std::istringstream resolved(sub.config_to_str(true, false));
  std::string cfg;
  for (std::string line; std::getline(resolved, line);)
    if (line.rfind("out=", 0) != 0 && line.rfind("manifest=", 0) != 0) cfg += line + '\n';
  m["resolved"] = cfg;
  if (stdin_) m["stdin"] = *stdin_;
  return m;
}

// Writes the JSON body (or `text` when given) and the manifest. The embedded
// copy leaves out the destinations so a replay reproduces the file exactly.
void Cli::finish(const std::string& command, const CLI::App& sub, json body, const std::string& text) {
  json man = manifest(command, sub);
  if (text.empty()) {
    body["manifest"] = man;
    emit(body.dump(2), io_.out);
  } else {
    emit(text, io_.out);
  }
  if (!io_.manifest.empty()) {
    man["outputs"] = {{"out", io_.out}};
    emit(man.dump(2), io_.manifest);
  }
}

int Cli::run(std::vector<std::string> args) {
  args_ = args;
  CLI::App app{"Tail asymptotics and Monte Carlo for suprema of chi-square processes with trend"};
  app.require_subcommand(1);
  app.set_version_flag("--version", chisq::kVersion);
  try {
    return dispatch(app, args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const chisq::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

int Cli::dispatch(CLI::App& app, const std::vector<std::string>& args) {
  ModelOptions mo;
  McOptions mc;
  std::string u_list;
  app.add_option("--threads", threads_, "worker threads (default: CHISQ_THREADS or all cores)");
  auto common = [&](CLI::App* s) {
    s->add_option("--out", io_.out, "write the result here instead of stdout");
    s->add_option("--manifest", io_.manifest, "write the run manifest here");
  };

  // approx
  auto* approx = app.add_subcommand("approx", "asymptotic tail P(sup(chi^2 - g) > u)");
  mo.add(approx);
  approx->add_option("--u", u_list, "comma separated levels")->required();
  bool assume = false;
  approx->add_flag("--assume-admissible", assume, "skip the admissibility gate");
  common(approx);

  // admissible
  auto* adm = app.add_subcommand("admissible", "check the conditions for the open-interval asymptotics");
  ModelOptions mo_adm;
  mo_adm.add(adm);
  common(adm);

  // mc
  auto* mcs = app.add_subcommand("mc", "Monte Carlo tail estimate at mesh d and d/2");
  ModelOptions mo_mc;
  mo_mc.add(mcs);
  mcs->add_option("--u", u_list, "comma separated levels")->required();
  mc.add(mcs);
  common(mcs);

  // compare
  auto* cmp = app.add_subcommand("compare", "asymptotic vs Monte Carlo table (CSV)");
  ModelOptions mo_cmp;
  McOptions mc_cmp;
  mo_cmp.add(cmp);
  cmp->add_option("--u", u_list, "increasing comma separated levels")->required();
  mc_cmp.add(cmp);
  bool cmp_json = false;
  cmp->add_flag("--json", cmp_json, "emit JSON instead of CSV");
  common(cmp);

  // critical
  auto* crit = app.add_subcommand("critical", "level u at which the asymptotic tail equals p");
  ModelOptions mo_crit;
  mo_crit.add(crit);
  std::string p_list;
  crit->add_option("--p", p_list, "comma separated probabilities")->required();
  common(crit);

  // pickands
  auto* pk = app.add_subcommand("pickands", "Monte Carlo estimate of the Pickands constant");
  double alpha = 1, horizon = 50, mesh = 0.01;
  std::size_t pk_paths = 100000;
  std::optional<std::uint64_t> pk_seed;
  std::string method = "dieker-yakir";
  bool doubling = false;
  pk->add_option("--alpha", alpha, "index in (0,2]")->capture_default_str();
  pk->add_option("--horizon", horizon, "T")->capture_default_str();
  pk->add_option("--mesh", mesh, "coarsest mesh m; levels m, m/2, m/4 are reported")->capture_default_str();
  pk->add_option("--paths", pk_paths, "number of paths")->capture_default_str();
  pk->add_option("--seed", pk_seed, "random seed (required)")->required();
  pk->add_option("--method", method, "dieker-yakir or truncated")
      ->check(CLI::IsMember({"dieker-yakir", "truncated"}))
      ->capture_default_str();
  pk->add_flag("--doubling", doubling, "also estimate at 2T and report stability");
  common(pk);

  // gof
  auto* gof = app.add_subcommand("gof", "goodness-of-fit statistic and asymptotic p-value");
  std::string input = "-", column;
  double nu = 1;
  gof->add_option("--input", input, "sample file, one value per line or CSV; - for stdin")->capture_default_str();
  gof->add_option("--column", column, "CSV column name or 0-based index");
  gof->add_option("--nu", nu, "trend parameter nu > 3/4")->capture_default_str();
  common(gof);

  // slepian
  auto* sl = app.add_subcommand("slepian", "empirical check of P(sup X^2 > u) <= 2^n P(sup Y^2 > u)");
  std::string mx = "ou:1", my = "ou:2", sl_interval = "[0,1]";
  int sl_n = 1;
  double sl_u = 8;
  McOptions mc_sl;
  sl->add_option("--model-x", mx, "catalog component X (ou:lambda)")->capture_default_str();
  sl->add_option("--model-y", my, "catalog component Y (ou:lambda)")->capture_default_str();
  sl->add_option("--n", sl_n, "number of squared coordinates")->capture_default_str();
  sl->add_option("--u", sl_u, "level")->capture_default_str();
  sl->add_option("--interval", sl_interval, "E")->capture_default_str();
  mc_sl.add(sl);
  common(sl);

  // simulate
  auto* sim = app.add_subcommand("simulate", "write sample paths of the chi-square process");
  ModelOptions mo_sim;
  mo_sim.add(sim, false);
  std::size_t sim_paths = 10, sim_points = 100;
  std::optional<std::uint64_t> sim_seed;
  std::string sim_format = "csv";
  double sim_trunc = 1e-4;
  sim->add_option("--paths", sim_paths, "number of paths")->capture_default_str();
  sim->add_option("--points", sim_points, "uniform grid steps")->capture_default_str();
  sim->add_option("--seed", sim_seed, "random seed (required)")->required();
  sim->add_option("--truncation", sim_trunc, "distance kept from a singular open end")->capture_default_str();
  sim->add_option("--format", sim_format, "csv or binary")->check(CLI::IsMember({"csv", "binary"}))->capture_default_str();
  sim->add_option("--out", io_.out, "output file")->required();
  sim->add_option("--manifest", io_.manifest, "write the run manifest here");

  // replay
  auto* rep = app.add_subcommand("replay", "re-run a command from its manifest");
  std::string manifest_path, replay_out;
  rep->add_option("manifest", manifest_path, "manifest JSON")->required();
  rep->add_option("--out", replay_out, "redirect the result (default: where the original run wrote it)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  app.parse(rev);

  if (*rep) {
    const json m = read_json(manifest_path);
    if (!m.contains("argv") || !m["argv"].is_array()) throw chisq::ConfigurationError("manifest has no argv");
    if (m.value("version", "") != chisq::kVersion)
      std::cerr << "warning: manifest version " << m.value("version", "?") << " differs from " << chisq::kVersion
                << '\n';
    auto argv = configuration_args(m["argv"].get<std::vector<std::string>>());
    std::string out = replay_out;
    if (out.empty() && m.contains("outputs")) out = m["outputs"].value("out", "");
    if (!out.empty()) {
      argv.push_back("--out");
      argv.push_back(out);
    }
    Cli again;
    if (m.contains("stdin")) again.stdin_ = m["stdin"].get<std::string>();
    return again.run(argv);
  }

  if (*approx) {
    const auto model = mo.build();
    const auto g = mo.trend_fn();
    chisq::AsymptoticsOptions ao;
    if (assume) ao.gate = chisq::Gate::assume;
    const auto a = chisq::approximate(model, g, ao);
    json body;
    body["model"] = model.name;
    body["trend"] = g.name;
    body["approx"] = chisq::to_json(a);
    json vals = json::array();
    for (double u : chisq::registry::parse_list(u_list, "u")) {
      vals.push_back({{"u", u}, {"value", chisq::num(a.evaluate(u))}});
      std::cerr << "u=" << human(u) << "  P ~ " << human(a.evaluate(u)) << '\n';
    }
    body["values"] = vals;
    // The Bessel model (and fBm with H = 1/2, the same process) has two
    // published constants that differ by a factor 2; show both.
    const auto [name, arg] = chisq::registry::detail::split_id(mo.model);
    int bessel_n = 0;
    if (name == "bessel") bessel_n = model.n();
    if (name == "fbm" && model.component().parameter == 0.5) bessel_n = 1;
    if (bessel_n > 0) {
      chisq::ClosedFormParams prm;
      prm.n = bessel_n;
      prm.g = g;
      prm.hurst = 0.5;
      if (!mo.interval.empty()) prm.interval = model.interval();
      json d = json::array();
      for (double u : chisq::registry::parse_list(u_list, "u")) {
        const double th0 = a.evaluate(u);
        const double lit = chisq::closed_form(chisq::ClosedFormCase::bessel, prm, u).value;
        json row = {{"u", u}, {"th0_derived", chisq::num(th0)}, {"bessel_literal", chisq::num(lit)},
                    {"ratio_literal_over_derived", chisq::num(lit / th0)}};
        if (bessel_n == 1) row["fbm_half"] = chisq::num(chisq::closed_form(chisq::ClosedFormCase::fbm, prm, u).value);
        d.push_back(row);
        std::cerr << "DISCREPANCY u=" << human(u) << ": derived " << human(th0) << ", Bessel literal " << human(lit)
                  << " (ratio " << human(lit / th0) << ")\n";
      }
      body["discrepancy"] = {{"note",
                              "the Bessel-process closed form carries 2^{1-n/2}; the general theorem and the fBm "
                              "H=1/2 formula give 2^{-n/2}"},
                             {"rows", d}};
    }
    finish("approx", *approx, body);
    return 0;
  }

  if (*adm) {
    const auto model = mo_adm.build();
    const auto g = mo_adm.trend_fn();
    const auto r = chisq::run_admissibility(model, g);
    json body = {{"model", model.name}, {"trend", g.name}, {"report", chisq::to_json(r)}};
    std::cerr << r.summary() << '\n';
    finish("admissible", *adm, body);
    if (r.overall == chisq::Overall::applicable) return 0;
    return r.overall == chisq::Overall::not_applicable ? 2 : 3;
  }

  if (*mcs) {
    const auto model = mo_mc.build();
    const auto g = mo_mc.trend_fn();
    auto us = chisq::registry::parse_list(u_list, "u");
    std::sort(us.begin(), us.end());
    const auto cfg = mc.config(threads_);
    std::string note;
    const auto grid = chisq::model_grid(model, us.back(), cfg, &note);
    const auto run = chisq::estimate_tails(model, g, us, grid, cfg);
    json tails = json::array();
    for (const auto& t : run.tails) {
      tails.push_back(chisq::to_json(t));
      std::cerr << "u=" << human(t.u) << "  p(d)=" << human(t.coarse.p_hat) << "  p(d/2)=" << human(t.fine.p_hat)
                << " [" << human(t.fine.ci_low) << ", " << human(t.fine.ci_high) << "]  extrapolated "
                << human(t.extrapolated) << (t.fine.below_floor ? "  (below 1e-5 floor)" : "") << '\n';
    }
    json body = {{"model", model.name},
                 {"trend", g.name},
                 {"coarse_grid", run.coarse_grid.describe()},
                 {"fine_grid", run.fine_grid.describe()},
                 {"truncated", note},
                 {"tails", tails}};
    finish("mc", *mcs, body);
    return 0;
  }

  if (*cmp) {
    const auto model = mo_cmp.build();
    const auto g = mo_cmp.trend_fn();
    const auto us = chisq::registry::parse_list(u_list, "u");
    const auto c = chisq::compare(model, g, us, mc_cmp.config(threads_));
    for (const auto& r : c.rows)
      std::cerr << "u=" << human(r.u) << "  asymptotic " << human(r.asymptotic) << "  MC " << human(r.mc.fine.p_hat)
                << "  ratio " << (r.ratio ? human(*r.ratio) : "N/A") << "  extrapolated ratio "
                << (r.ratio_extrapolated ? human(*r.ratio_extrapolated) : "N/A") << '\n';
    std::cerr << "ratio trend towards 1: " << (c.ratio_trend_to_one ? "yes" : "no") << '\n';
    if (cmp_json) {
      finish("compare", *cmp, {{"model", model.name}, {"trend", g.name}, {"comparison", chisq::to_json(c)}});
    } else {
      finish("compare", *cmp, {}, chisq::comparison_csv(c));
    }
    return 0;
  }

  if (*crit) {
    const auto model = mo_crit.build();
    const auto g = mo_crit.trend_fn();
    const auto a = chisq::approximate(model, g);
    json rows = json::array();
    for (double p : chisq::registry::parse_list(p_list, "p")) {
      const auto cv = chisq::critical_value(a, p);
      rows.push_back({{"p", p}, {"u", chisq::num(cv.u)}, {"achieved", chisq::num(cv.achieved)}});
      std::cerr << "p=" << human(p) << "  u=" << human(cv.u) << '\n';
    }
    finish("critical", *crit, {{"model", model.name}, {"trend", g.name}, {"critical", rows}});
    return 0;
  }

  if (*pk) {
    chisq::PickandsOptions po;
    po.method = method == "truncated" ? chisq::PickandsMethod::truncated : chisq::PickandsMethod::dieker_yakir;
    po.threads = threads_;
    const auto e = chisq::estimate_pickands(alpha, horizon, mesh, pk_paths, *pk_seed, po);
    json body = {{"estimate", chisq::to_json(e)}};
    for (const auto& l : e.levels)
      std::cerr << "mesh " << human(l.mesh) << "  H=" << human(l.value) << " [" << human(l.ci_low) << ", "
                << human(l.ci_high) << "]\n";
    if (doubling) {
      const auto e2 = chisq::estimate_pickands(alpha, 2 * horizon, mesh, pk_paths, *pk_seed, po);
      const double diff = std::abs(e2.primary().value - e.primary().value);
      const double comb = chisq::kZ95 * std::hypot(e.primary().std_error, e2.primary().std_error);
      body["doubled"] = chisq::to_json(e2);
      body["doubling_stable"] = diff <= comb;
      std::cerr << "T=" << human(2 * horizon) << "  H=" << human(e2.primary().value) << "  stable: "
                << (diff <= comb ? "yes" : "no") << '\n';
    }
    finish("pickands", *pk, body);
    return 0;
  }

  if (*gof) {
    chisq::Sample s;
    if (input == "-") {
      if (!stdin_) {
        std::ostringstream all;
        all << std::cin.rdbuf();
        stdin_ = all.str();
      }
      std::istringstream in(*stdin_);
      s = chisq::read_sample(in, column);
    } else {
      std::ifstream f(input);
      if (!f) throw chisq::ConfigurationError("cannot read " + input);
      s = chisq::read_sample(f, column);
    }
    const auto r = chisq::goodness_of_fit(s, nu);
    std::cerr << "n=" << r.n << "  L=" << human(r.L) << "  p=" << human(r.p_value) << " (asymptotic, not exact)\n";
    finish("gof", *gof, chisq::to_json(r));
    return 0;
  }

  if (*sl) {
    auto component = [](const std::string& id) {
      const auto [name, arg] = chisq::registry::detail::split_id(id);
      if (name != "ou") throw chisq::DomainError("slepian compares catalog OU components (ou:lambda)");
      return chisq::catalog::ou(chisq::registry::parse_number(chisq::registry::detail::need(arg, id), "OU rate"));
    };
    const auto r = chisq::slepian_check(component(mx), component(my), sl_n, chisq::registry::parse_interval(sl_interval),
                                        sl_u, mc_sl.config(threads_));
    std::cerr << "p_X=" << human(r.x.fine.p_hat) << "  2^n p_Y=" << human(r.factor * r.y.fine.p_hat)
              << "  holds: " << (r.holds ? "yes" : "no") << "  with margin: " << (r.holds_with_margin ? "yes" : "no")
              << '\n';
    finish("slepian", *sl, chisq::to_json(r));
    return 0;
  }

  if (*sim) {
    const auto model = mo_sim.build();
    auto f = chisq::FTransform(chisq::c_star(model));
    std::string note;
    const auto e = chisq::mc_detail::simulation_interval(model, f, sim_trunc, note);
    const auto grid = chisq::TimeGrid::uniform(e.lo, e.hi, sim_points);
    std::vector<chisq::PathBatch> batches;
    for (int i = 0; i < model.n(); ++i) {
      auto sampler = chisq::make_sampler(model.component(i), grid);
      batches.push_back(chisq::sample(*sampler, grid, sim_paths, *sim_seed, static_cast<std::uint64_t>(i)));
    }
    chisq::PathBatch chi = chisq::chi_square_path(model.b(), batches);
    chi.process = "chi-square " + model.name;
    if (sim_format == "csv") {
      chisq::write_paths_csv(chi, io_.out);
    } else {
      chisq::write_paths_binary(chi, io_.out);
    }
    if (!io_.manifest.empty()) {
      json man = manifest("simulate", *sim);
      man["outputs"] = {{"out", io_.out}};
      emit(man.dump(2), io_.manifest);
    }
    std::cerr << "wrote " << sim_paths << " paths on " << grid.describe() << (note.empty() ? "" : " (" + note + ")")
              << '\n';
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return Cli{}.run(args);
}
