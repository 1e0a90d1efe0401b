// piac: validate, analyze, sweep and simulate PIAC closed loops.
//
// Exit codes: 0 ok, 2 usage/format, 3 connectivity, 4 gains, 5 analysis
// error, 6 closed form refused, 7 numerical failure.

#include "piac/case_io.hpp"
#include "piac/errors.hpp"
#include "piac/h2.hpp"
#include "piac/parallel.hpp"
#include "piac/sim.hpp"
#include "report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>

using json = nlohmann::ordered_json;

namespace {

using namespace piac;
using piac::cli::fmt;

enum Exit { kOk = 0, kUsage = 2, kConnectivity = 3, kGains = 4, kAnalysis = 5, kRefused = 6, kNumerical = 7 };

struct ExitError : std::runtime_error {
  ExitError(int c, const std::string& m) : std::runtime_error(m), code(c) {}
  int code;
};

struct Common {
  std::string case_path;
  std::string law = "dpiac";
  std::optional<double> k1, k2, k3;
  std::string selector = "omega";
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
};

void add_common(CLI::App* app, Common& c, bool needs_selector) {
  app->add_option("--case", c.case_path, "case file")->required()->check(CLI::ExistingFile);
  app->add_option("--law", c.law, "control law")->check(CLI::IsMember({"gbpiac", "dpiac", "decpiac"}));
  app->add_option("--k1", c.k1, "gain k1 (overrides the case)");
  app->add_option("--k2", c.k2, "gain k2 (default 4 k1)");
  app->add_option("--k3", c.k3, "gain k3");
  if (needs_selector)
    app->add_option("--selector", c.selector, "output")->check(CLI::IsMember({"omega", "u", "us", "spread"}));
  app->add_option("--seed", c.seed, "random seed for stochastic runs");
  app->add_option("--out", c.out, "output file (stdout when empty)");
  app->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json"}));
}

// Loading maps format problems to 2 and connectivity to 3.
CaseBundle load(const Common& c) {
  try {
    CaseBundle b = load_case(c.case_path);
    if (c.k1) {
      b.gains.k1 = *c.k1;
      if (!c.k2 && b.gains.analytic_mode) b.gains.k2 = 4.0 * *c.k1;
    }
    if (c.k2) {
      b.gains.k2 = *c.k2;
      b.gains.analytic_mode = b.gains.k2 == 4.0 * b.gains.k1;
    }
    if (c.k3) b.gains.k3 = *c.k3;
    if (c.seed) b.scenario.seed = *c.seed;
    return b;
  } catch (const DisconnectedNetwork& e) {
    throw ExitError(kConnectivity, e.what());
  } catch (const Error& e) {
    throw ExitError(kUsage, e.what());
  }
}

void check_gains(const GainSchedule& g, bool strict) {
  try {
    g.validate(strict);
  } catch (const GainError& e) {
    throw ExitError(kGains, e.what());
  }
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) std::cout << text;
  else cli::write_atomic(c.out, text);
}

json num(double v) { return std::isfinite(v) ? json(std::stod(fmt(v))) : json(nullptr); }

// ---- validate ---------------------------------------------------------

int cmd_validate(const Common& c) {
  const CaseBundle b = load(c);
  const Law law = parse_law(c.law);
  const auto homog = check_homogeneous(b.net, law == Law::Dpiac ? b.comm : CommunicationGraph::mirror(b.net));
  const bool comm_ok = b.comm.connected();

  json j;
  j["case"] = c.case_path;
  j["nodes"] = b.net.size();
  j["edges"] = b.net.edges().size();
  j["machines"] = b.net.count(NodeKind::Machine);
  j["freqdep"] = b.net.count(NodeKind::FreqDependent);
  j["passive"] = b.net.count(NodeKind::Passive);
  j["controllers"] = b.net.controllers().size();
  j["comm_connected"] = comm_ok;
  j["homogeneous"] = homog.passed;
  j["homogeneity_reasons"] = homog.reasons;
  j["k1"] = num(b.gains.k1);
  j["k2"] = num(b.gains.k2);
  j["k3"] = num(b.gains.k3);
  j["analytic_mode"] = b.gains.analytic_mode;

  std::string text;
  if (c.format == "json") {
    text = j.dump(2) + "\n";
  } else {
    text = "key,value\n";
    for (auto it = j.begin(); it != j.end(); ++it) {
      std::string v;
      if (it->is_array()) {
        for (const auto& r : *it) v += (v.empty() ? "" : ";") + r.get<std::string>();
      } else if (it->is_string()) {
        v = it->get<std::string>();
      } else if (it->is_number_float()) {
        v = fmt(it->get<double>());
      } else {
        v = it->dump();
      }
      text += it.key() + "," + v + "\n";
    }
  }
  emit(c, text);

  if (law == Law::Dpiac && !comm_ok)
    throw ExitError(kConnectivity, "communication graph over the controllers is not connected");
  check_gains(b.gains, true);
  return kOk;
}

// ---- analyze ----------------------------------------------------------

int cmd_analyze(const Common& c, bool require_analytic, bool limits, const std::vector<double>& b_diag) {
  const CaseBundle b = load(c);
  const Law law = parse_law(c.law);
  check_gains(b.gains, false);
  const OutputSelector sel = parse_selector(c.selector);

  if (require_analytic) {
    const auto homog = check_homogeneous(b.net, law == Law::Dpiac ? b.comm : CommunicationGraph::mirror(b.net));
    std::string why;
    for (const auto& r : homog.reasons) why += (why.empty() ? "" : "; ") + r;
    if (!b.gains.analytic_mode) why += (why.empty() ? "" : "; ") + std::string("k2 != 4 k1");
    if (!why.empty()) throw ExitError(kRefused, "closed form does not apply: " + why);
  }

  AnalysisOptions opt;
  opt.limits = limits;
  if (!b_diag.empty()) {
    if (static_cast<int>(b_diag.size()) != b.net.size())
      throw ExitError(kUsage, "--b-diag needs one entry per node");
    opt.input = Eigen::VectorXd::Map(b_diag.data(), b_diag.size()).asDiagonal().toDenseMatrix();
  }

  H2Report r;
  try {
    r = analyze(law, b.net, b.comm, b.gains, sel, opt);
  } catch (const Error& e) {
    throw ExitError(kAnalysis, e.what());
  }

  const double nan = std::nan("");
  json j;
  j["law"] = to_string(law);
  j["selector"] = c.selector;
  j["nodes"] = r.nodes;
  j["k1"] = num(b.gains.k1);
  j["k2"] = num(b.gains.k2);
  j["k3"] = num(b.gains.k3);
  j["numeric"] = num(r.numeric.value);
  j["dual"] = num(r.numeric.dual);
  j["condition"] = num(r.numeric.condition_estimate);
  j["analytic"] = num(r.analytic ? r.analytic->value : nan);
  j["overall"] = num(r.analytic ? r.analytic->overall : nan);
  j["relative"] = num(r.analytic ? r.analytic->relative : nan);
  j["relative_gap"] = num(r.relative_gap());
  j["bound_lo"] = num(r.bounds ? r.bounds->lo : nan);
  j["bound_hi"] = num(r.bounds ? r.bounds->hi : nan);
  j["limit_k1"] = num(r.limit_k1.value_or(nan));
  j["limit_k3"] = num(r.limit_k3.value_or(nan));

  if (c.format == "json") {
    emit(c, j.dump(2) + "\n");
  } else {
    std::string head, row;
    for (auto it = j.begin(); it != j.end(); ++it) {
      head += (head.empty() ? "" : ",") + it.key();
      std::string v = it->is_string() ? it->get<std::string>() : it->is_null() ? "nan" : it->is_number_integer() ? it->dump() : fmt(it->get<double>());
      row += (row.empty() ? "" : ",") + v;
    }
    emit(c, head + "\n" + row + "\n");
  }
  return kOk;
}

// ---- sweep ------------------------------------------------------------

int cmd_sweep(const Common& c, const std::string& axis, const std::vector<double>& grid, bool simulate) {
  if (grid.empty()) throw ExitError(kUsage, "empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0)) throw ExitError(kUsage, "grid values must be positive");
    if (i && !(grid[i] > grid[i - 1])) throw ExitError(kUsage, "grid must be strictly increasing");
  }
  const CaseBundle b = load(c);
  SweepRequest req;
  req.law = parse_law(c.law);
  req.axis = parse_axis(axis);
  req.grid = grid;
  req.base = b.gains;
  for (double v : grid) check_gains(gains_at(b.gains, req.axis, v), false);
  const bool noise = b.scenario.kind == ScenarioKind::WhiteNoise;
  if (simulate) {
    if (noise && !b.scenario.seed) throw ExitError(kUsage, "stochastic sweep needs --seed");
    req.scenario = b.scenario;
  }

  std::vector<SweepPoint> pts;
  try {
    pts = run_sweep(b.net, b.comm, req);
  } catch (const NumericalBlowup& e) {
    throw ExitError(kNumerical, e.what());
  } catch (const DAESolveError& e) {
    throw ExitError(kNumerical, e.what());
  } catch (const Error& e) {
    throw ExitError(kAnalysis, e.what());
  }

  std::string text;
  if (c.format == "json") {
    json rows = json::array();
    for (const auto& p : pts) {
      json r;
      r[axis] = num(p.param);
      r["omega_norm"] = num(p.omega_norm);
      r["u_norm"] = num(p.u_norm);
      r["spread_norm"] = num(p.spread_norm);
      if (p.metrics && !noise) {
        r["S"] = num(p.metrics->S);
        r["C"] = num(p.metrics->C);
      } else if (p.metrics) {
        r["E_S"] = num(p.metrics->E_S);
        r["E_C"] = num(p.metrics->E_C);
        r["E_S_stderr"] = num(p.metrics->E_S_stderr);
        r["E_C_stderr"] = num(p.metrics->E_C_stderr);
      }
      rows.push_back(r);
    }
    json j;
    j["law"] = c.law;
    j["axis"] = axis;
    j["rows"] = rows;
    text = j.dump(2) + "\n";
  } else {
    text = axis + ",omega_norm,u_norm,spread_norm";
    if (simulate) text += noise ? ",E_S,E_C,E_S_stderr,E_C_stderr" : ",S,C";
    text += "\n";
    for (const auto& p : pts) {
      text += fmt(p.param) + "," + fmt(p.omega_norm) + "," + fmt(p.u_norm) + "," + fmt(p.spread_norm);
      if (p.metrics && !noise) text += "," + fmt(p.metrics->S) + "," + fmt(p.metrics->C);
      else if (p.metrics)
        text += "," + fmt(p.metrics->E_S) + "," + fmt(p.metrics->E_C) + "," + fmt(p.metrics->E_S_stderr) +
                "," + fmt(p.metrics->E_C_stderr);
      text += "\n";
    }
  }
  emit(c, text);
  return kOk;
}

// ---- simulate ---------------------------------------------------------

json trace_json(const Trace& t) {
  json samples = json::array();
  for (const auto& s : t.samples) {
    json row;
    row["t"] = num(s.t);
    auto vec = [](const Eigen::VectorXd& v) {
      json a = json::array();
      for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
      return a;
    };
    row["theta"] = vec(s.theta);
    row["omega"] = vec(s.omega);
    row["eta"] = vec(s.eta);
    row["xi"] = vec(s.xi);
    row["u"] = vec(s.u);
    row["mc"] = vec(s.marginal_cost);
    samples.push_back(row);
  }
  return samples;
}

std::string svg_of(const Trace& t) {
  std::vector<cli::Series> series;
  for (std::size_t i = 0; i < t.node_ids.size(); ++i) {
    if (!t.controller[i]) continue;
    cli::Series s;
    s.label = "node " + std::to_string(t.node_ids[i]);
    for (const auto& smp : t.samples) {
      s.x.push_back(smp.t);
      s.y.push_back(smp.omega(i));
    }
    series.push_back(std::move(s));
  }
  return cli::svg_chart(series, "frequency deviation", "t [s]", "omega");
}

int cmd_simulate(const Common& c, bool linearized, bool no_disturbance, std::optional<int> paths,
                 const std::string& svg) {
  CaseBundle b = load(c);
  const Law law = parse_law(c.law);
  check_gains(b.gains, false);
  Scenario& sc = b.scenario;
  if (linearized) sc.linearized = true;
  if (paths) sc.paths = *paths;
  if (no_disturbance) {
    sc.steps.clear();
    for (auto& w : sc.noise) w.sigma = 0.0;
  }
  const bool noise = sc.kind == ScenarioKind::WhiteNoise;
  if (noise && !sc.seed) throw ExitError(kUsage, "stochastic simulation needs --seed");
  if (!noise && sc.horizon < sc.metrics_window)
    throw ExitError(kUsage, "horizon is shorter than the metrics window");

  std::string body;
  json summary;
  summary["law"] = to_string(law);
  summary["kind"] = noise ? "noise" : "step";
  const Trace* first = nullptr;
  Trace det;
  Ensemble ens;
  try {
    if (!noise) {
      det = simulate_deterministic(b.net, b.comm, law, b.gains, sc);
      first = &det;
      const Metrics m = compute_metrics(det, controller_prices(b.net), sc.metrics_window);
      const SteadyState ss = check_steady_state(det, b.net, sc);
      summary["S"] = num(m.S);
      summary["C"] = num(m.C);
      summary["omega_syn"] = num(ss.omega_syn);
      summary["max_abs_omega"] = num(ss.max_abs_omega);
      summary["balance_residual"] = num(ss.balance_residual);
      summary["cost_spread"] = num(ss.cost_spread);
    } else {
      ens = simulate_stochastic(b.net, b.comm, law, b.gains, sc);
      if (!ens.paths.empty()) first = &ens.paths.front().trace;
      summary["seed"] = *sc.seed;
      summary["paths"] = sc.paths;
      summary["E_S"] = num(ens.metrics.E_S);
      summary["E_C"] = num(ens.metrics.E_C);
      summary["E_S_stderr"] = num(ens.metrics.E_S_stderr);
      summary["E_C_stderr"] = num(ens.metrics.E_C_stderr);
    }
  } catch (const NumericalBlowup& e) {
    throw ExitError(kNumerical, e.what());
  } catch (const DAESolveError& e) {
    throw ExitError(kNumerical, e.what());
  } catch (const DisconnectedNetwork& e) {
    throw ExitError(kConnectivity, e.what());
  } catch (const InsufficientHorizon& e) {
    throw ExitError(kUsage, e.what());
  } catch (const DomainError& e) {
    throw ExitError(kUsage, e.what());
  } catch (const Error& e) {
    throw ExitError(kNumerical, e.what());
  }

  if (c.format == "json") {
    json j;
    j["summary"] = summary;
    if (!noise) {
      j["trace"] = trace_json(det);
    } else {
      json p = json::array();
      for (const auto& pr : ens.paths) p.push_back(trace_json(pr.trace));
      j["paths"] = p;
    }
    body = j.dump(1) + "\n";
  } else if (!noise) {
    body = cli::trace_csv_header(false);
    cli::append_trace_csv(body, det);
  } else {
    body = cli::trace_csv_header(true);
    for (std::size_t p = 0; p < ens.paths.size(); ++p) cli::append_trace_csv(body, ens.paths[p].trace, p);
  }

  if (!svg.empty() && first) cli::write_atomic(svg, svg_of(*first));
  if (c.out.empty()) {
    std::cout << body;
    std::cerr << summary.dump() << "\n";
  } else {
    cli::write_atomic(c.out, body);
    std::string line;
    for (auto it = summary.begin(); it != summary.end(); ++it)
      line += (line.empty() ? "" : " ") + it.key() + "=" +
              (it->is_string() ? it->get<std::string>() : it->is_number_float() ? fmt(it->get<double>()) : it->dump());
    std::cout << line << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PIAC secondary frequency control: H2 analysis and simulation"};
  app.require_subcommand(1);

  Common cv, ca, cs, cm;
  auto* validate = app.add_subcommand("validate", "check a case file");
  add_common(validate, cv, false);

  auto* an = app.add_subcommand("analyze", "H2 norms of the closed loop");
  add_common(an, ca, true);
  bool require_analytic = false, limits = false;
  std::vector<double> b_diag;
  an->add_flag("--analytic", require_analytic, "fail unless the closed form applies");
  an->add_flag("--limits", limits, "report k1 and k3 limits");
  an->add_option("--b-diag", b_diag, "diagonal disturbance matrix")->delimiter(',');

  auto* sw = app.add_subcommand("sweep", "norms (and metrics) over a gain grid");
  add_common(sw, cs, false);
  std::string axis = "k1";
  std::vector<double> grid;
  bool sweep_sim = false;
  sw->add_option("--axis", axis, "swept gain")->check(CLI::IsMember({"k1", "k3"}));
  sw->add_option("--grid", grid, "grid values, comma separated")->delimiter(',');
  sw->add_flag("--simulate", sweep_sim, "add simulated metrics per point");

  auto* sim = app.add_subcommand("simulate", "time-domain simulation of the case scenario");
  add_common(sim, cm, false);
  bool linearized = false, quiet = false;
  std::optional<int> paths;
  std::string svg;
  sim->add_flag("--linearized", linearized, "replace sin coupling by its linearization");
  sim->add_flag("--no-disturbance", quiet, "drop load steps and noise");
  sim->add_option("--paths", paths, "sample paths for noise scenarios")->check(CLI::PositiveNumber);
  sim->add_option("--svg", svg, "write a frequency plot");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*validate) return cmd_validate(cv);
    if (*an) return cmd_analyze(ca, require_analytic, limits, b_diag);
    if (*sw) return cmd_sweep(cs, axis, grid, sweep_sim);
    if (*sim) return cmd_simulate(cm, linearized, quiet, paths, svg);
  } catch (const ExitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code;
  } catch (const piac::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kAnalysis;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
