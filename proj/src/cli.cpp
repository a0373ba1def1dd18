#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "polarsim/app.hpp"
#include "polarsim/equilibrium.hpp"
#include "polarsim/linearization.hpp"
#include "polarsim/parallel.hpp"

namespace polarsim {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Options shared by every subcommand.
struct Common {
  std::string config;
  std::vector<std::string> params;
  std::optional<std::uint64_t> seed;
  std::string mu2;
  std::optional<double> c4;
  std::optional<double> sigma;
  std::string out;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "Scenario file")->check(CLI::ExistingFile);
    cmd->add_option("--param", params, "Override as section.key=value (repeatable)");
    cmd->add_option("--seed", seed, "Seed of the initial perturbation");
    cmd->add_option("--mu2", mu2, "Eigenvalue used by condition checks")
        ->check(CLI::IsMember({"continuum", "discrete"}));
    cmd->add_option("--c4", c4, "Constant C4 of the homogenization condition");
    cmd->add_option("--sigma", sigma, "Override of the sufficient sigma");
    cmd->add_option("--out", out, "Output directory or file");
  }

  RawConfig overrides() const {
    RawConfig o;
    for (const auto& p : params) {
      auto [k, v] = parse_override(p);
      o[k] = v;
    }
    if (seed) o["initial.seed"] = std::to_string(*seed);
    if (!mu2.empty()) o["diagnostics.mu2"] = mu2;
    if (c4) o["diagnostics.c4"] = num(*c4);
    if (sigma) o["diagnostics.sigma"] = num(*sigma);
    return o;
  }

  ScenarioConfig scenario() const {
    ScenarioConfig cfg = config.empty() ? build_scenario(overrides()) : load_scenario(config, overrides());
    if (!out.empty()) cfg.output_dir = out;
    return cfg;
  }
};

const Model4Params& require_model4(const ScenarioConfig& cfg, const std::string& command) {
  const auto* p = std::get_if<Model4Params>(&cfg.params);
  if (!p) throw ConfigError("model.name: " + command + " needs model4 or model4-general-m");
  return *p;
}

// Writes to --out when given, otherwise to the console stream.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << text;
}

int cmd_simulate(const Common& c, std::ostream& out) {
  const ScenarioConfig cfg = c.scenario();
  const auto o = run_scenario(cfg);
  out << "status " << (o.ok ? "completed" : "failed") << "\n";
  if (!o.ok) out << "error " << o.error << "\n";
  out << "output " << cfg.output_dir << "\n";
  out << "records " << o.records.size() << "\n";
  out << "decay_rate " << num(o.decay.rate) << (o.decay.converged ? " (converged)" : "") << "\n";
  out << "f_lambda " << (o.omega.in_f_lambda ? "pass" : "fail") << " (mass defect " << num(o.omega.mass_defect)
      << ")\n";
  out << "distance_to_equilibrium " << num(o.omega.u_distance) << " " << num(o.omega.v_distance) << "\n";
  return o.ok ? 0 : 3;
}

int cmd_equilibrium(const Common& c, double lambda, std::ostream& out) {
  const ScenarioConfig cfg = c.scenario();
  const Model4Params& p = require_model4(cfg, "equilibrium");
  if (!(lambda > 0.0)) throw ParameterError("--lambda must be positive");
  const auto eq = solve_equilibrium(p, lambda);
  std::ostringstream os;
  os << provenance_header(cfg, "equilibrium");
  os << "# lambda " << num(lambda) << "\n";
  os << "# u_star " << num(eq.u_star) << "\n";
  os << "# v_star " << num(eq.v_star) << "\n";
  os << "# residual " << num(eq.residual) << "\n";
  os << "# sign_changes " << eq.sign_changes << "\n";
  os << "step\tlo\thi\tmid\tA\tB\tA_minus_B\n";
  for (std::size_t i = 0; i < eq.trace.size(); ++i) {
    const auto& s = eq.trace[i];
    os << i << '\t' << num(s.lo) << '\t' << num(s.hi) << '\t' << num(s.mid) << '\t' << num(s.A) << '\t' << num(s.B)
       << '\t' << num(s.A - s.B) << '\n';
  }
  emit(c.out, os.str(), out);
  return 0;
}

int cmd_ode(const Common& c, double lambda, double u0, std::optional<double> t_end, double dt, std::size_t stride,
            std::ostream& out) {
  ScenarioConfig cfg = c.scenario();
  const Model4Params& p = require_model4(cfg, "ode");
  if (!(lambda > 0.0)) throw ParameterError("--lambda must be positive");
  if (stride < 1) throw ParameterError("--stride must be at least 1");
  const double rate = std::min(p.delta, p.a0() / p.tau);
  const double T = t_end ? *t_end : (rate > 0.0 ? 50.0 / rate : 100.0);
  const auto tr = integrate_homogeneous_ode(p, lambda, u0, T, dt);
  std::ostringstream os;
  os << provenance_header(cfg, "ode");
  os << "# lambda " << num(lambda) << "\n# U0 " << num(u0) << "\n# t_end " << num(T) << "\n# dt " << num(dt) << "\n";
  try {
    const auto eq = solve_equilibrium(p, lambda);
    os << "# u_star " << num(eq.u_star) << "\n# final_distance " << num(std::abs(tr.U.back() - eq.u_star)) << "\n";
  } catch (const EquilibriumError& e) {
    os << "# u_star unavailable: " << e.what() << "\n";
  }
  os << "t\tU\tV\tG\n";
  for (std::size_t i = 0; i < tr.t.size(); ++i)
    if (i % stride == 0 || i + 1 == tr.t.size())
      os << num(tr.t[i]) << '\t' << num(tr.U[i]) << '\t' << num(tr.V[i]) << '\t' << num(tr.G[i]) << '\n';
  emit(c.out, os.str(), out);
  return 0;
}

int cmd_check(const Common& c, double lambda, std::ostream& out) {
  const ScenarioConfig cfg = c.scenario();
  require_model4(cfg, "check");
  if (!(lambda > 0.0)) throw ParameterError("--lambda must be positive");
  const auto reports = condition_reports(cfg, lambda);
  std::ostringstream os;
  os << provenance_header(cfg, "conditions") << "# lambda " << num(lambda) << "\n" << format_conditions(reports);
  emit(c.out, os.str(), out);
  return 0;
}

int cmd_scan(const Common& c, double lambda, std::size_t mode, const std::string& parameter,
             const std::vector<double>& range, std::size_t samples, std::ostream& out) {
  const ScenarioConfig cfg = c.scenario();
  const Model4Params& p = require_model4(cfg, "scan");
  if (!(lambda > 0.0)) throw ParameterError("--lambda must be positive");
  if (mode < 1) throw ParameterError("--mode is 1-based");
  const Grid g = cfg.grid.build();
  const double mu = cfg.diagnostics.mu2 == Mu2Mode::continuum ? neumann_eigenvalue(g, mode)
                                                              : discrete_neumann_eigenvalue(g, mode);
  const auto param = parse_scan_parameter(parameter);
  const auto result = scan_degeneracy(p, lambda, mode, mu, param, range.at(0), range.at(1), samples, worker_count());
  std::ostringstream os;
  os << provenance_header(cfg, "scan");
  os << "# lambda " << num(lambda) << "\n# mode " << mode << "\n# mu " << num(mu) << " ("
     << to_string(cfg.diagnostics.mu2) << ")\n# parameter " << to_string(param) << "\n";
  os << "# roots " << result.roots.size() << "\n";
  for (const auto& r : result.roots)
    os << "# root " << num(r.root) << " bracket " << num(r.bracket_lo) << " " << num(r.bracket_hi) << " residual "
       << num(r.residual) << "\n";
  os << "value\tresidual\tok\terror\n";
  for (const auto& s : result.samples)
    os << num(s.value) << '\t' << num(s.residual) << '\t' << (s.ok ? "yes" : "no") << '\t'
       << (s.error.empty() ? "-" : s.error) << '\n';
  emit(c.out, os.str(), out);
  return 0;
}

int cmd_sweep(const Common& c, const std::string& key, std::vector<double> values, const std::vector<double>& range,
              std::size_t count, std::ostream& out) {
  if (c.config.empty()) throw ConfigError("sweep needs --config");
  if (!range.empty()) {
    if (count < 1) throw ConfigError("--count must be at least 1");
    for (std::size_t i = 0; i < count; ++i)
      values.push_back(count == 1 ? range[0]
                                  : range[0] + (range[1] - range[0]) * static_cast<double>(i) /
                                                   static_cast<double>(count - 1));
  }
  parse_override(key + "=0");  // validates the key shape
  const std::string dir = c.out.empty() ? "sweep" : c.out;
  const auto rows = run_sweep(c.config, c.overrides(), key, values, dir, worker_count());
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.ok ? 0 : 1;
  out << "runs " << rows.size() << ", failed " << failed << "\nsummary " << dir << "/summary.tsv\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation and analysis of mass-conserved reaction-diffusion systems"};
  app.name("polarsim");
  app.require_subcommand(1);

  Common common;
  double lambda = 0.0;
  double u0 = 0.0;
  std::optional<double> t_end;
  double dt = 0.01;
  std::size_t stride = 1;
  std::size_t mode = 2;
  std::string parameter = "D";
  std::vector<double> range;
  std::size_t samples = 200;
  std::string vary;
  std::vector<double> values;
  std::size_t count = 0;

  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write diagnostics");
  common.attach(simulate);
  simulate->get_option("--config")->required();

  auto* equilibrium = app.add_subcommand("equilibrium", "Homogeneous steady state of the fourth model");
  common.attach(equilibrium);
  equilibrium->add_option("--lambda", lambda, "Mass level")->required();

  auto* ode = app.add_subcommand("ode", "Spatially homogeneous trajectory of the fourth model");
  common.attach(ode);
  ode->add_option("--lambda", lambda, "Mass level")->required();
  ode->add_option("--u0", u0, "Initial U in [0, lambda]");
  ode->add_option("--t-end", t_end, "End time (default 50 / min(delta, a0 / tau))");
  ode->add_option("--dt", dt, "RK4 step");
  ode->add_option("--stride", stride, "Write every n-th step");

  auto* check = app.add_subcommand("check", "Evaluate the homogenization conditions");
  common.attach(check);
  check->add_option("--lambda", lambda, "Mass level")->required();

  auto* scan = app.add_subcommand("scan", "Scan the degeneracy residual of a Neumann mode");
  common.attach(scan);
  scan->add_option("--lambda", lambda, "Mass level")->required();
  scan->add_option("--mode", mode, "Mode index j (1-based)");
  scan->add_option("--parameter", parameter, "Scanned parameter")->check(CLI::IsMember({"D", "lambda", "delta"}));
  scan->add_option("--range", range, "Scan interval lo hi")->expected(2)->required();
  scan->add_option("--samples", samples, "Number of samples");

  auto* sweep = app.add_subcommand("sweep", "Run a scenario over a list of parameter values");
  common.attach(sweep);
  sweep->add_option("--vary", vary, "Parameter as section.key")->required();
  auto* values_opt = sweep->add_option("--values", values, "Comma-separated values")->delimiter(',');
  auto* range_opt = sweep->add_option("--range", range, "Interval lo hi")->expected(2);
  sweep->add_option("--count", count, "Points in --range");
  values_opt->excludes(range_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) return cmd_simulate(common, out);
    if (*equilibrium) return cmd_equilibrium(common, lambda, out);
    if (*ode) return cmd_ode(common, lambda, u0, t_end, dt, stride, out);
    if (*check) return cmd_check(common, lambda, out);
    if (*scan) return cmd_scan(common, lambda, mode, parameter, range, samples, out);
    if (*sweep) {
      if (values.empty() && range.empty()) throw ConfigError("sweep needs --values or --range with --count");
      return cmd_sweep(common, vary, values, range, count, out);
    }
  } catch (const std::invalid_argument& e) {
    err << "polarsim: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "polarsim: " << e.what() << "\n";
    return 3;
  }
  return 2;
}

}  // namespace polarsim
