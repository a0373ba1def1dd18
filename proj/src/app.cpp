#include "polarsim/app.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "polarsim/expression.hpp"
#include "polarsim/parallel.hpp"

namespace polarsim {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

template <class T>
void put(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw ConfigError("truncated binary snapshot");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::optional<HomogeneousPoint> first_homogeneous_state(const ModelParams& p, double lambda) {
  const auto states = homogeneous_states(p, lambda);
  if (states.empty()) return std::nullopt;
  return states.front();
}

// Smooth zero-mean profile with |phi| <= 1. Cosine modes integrate to zero
// exactly under the trapezoid rule on vertex grids, so adding A * phi to a
// constant leaves the discrete mean unchanged.
Field perturbation_profile(const Grid& g, PerturbationShape shape, std::mt19937_64& rng) {
  const double pi = std::numbers::pi;
  const double lx = g.length(0);
  const double ly = g.dim() == 2 ? g.length(1) : 1.0;
  if (shape == PerturbationShape::cosine) {
    return Field::from_function(g, [&](double x, double y) {
      return g.dim() == 1 ? std::cos(pi * x / lx) : 0.5 * (std::cos(pi * x / lx) + std::cos(pi * y / ly));
    });
  }
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  struct Mode {
    int p, q;
    double c;
  };
  std::vector<Mode> modes;
  double bound = 0.0;
  const int qmax = g.dim() == 2 ? 3 : 0;
  for (int p = 0; p <= 4; ++p)
    for (int q = 0; q <= qmax; ++q) {
      if (p == 0 && q == 0) continue;
      const double c = coef(rng) / (p + q);
      modes.push_back({p, q, c});
      bound += std::abs(c);
    }
  return Field::from_function(g, [&](double x, double y) {
    double s = 0.0;
    for (const auto& m : modes) s += m.c * std::cos(m.p * pi * x / lx) * std::cos(m.q * pi * y / ly);
    return s / bound;
  });
}

std::string relation(const ConditionReport& r) { return r.strict ? "<" : "<="; }

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "";
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

SimState build_initial_state(const ScenarioConfig& cfg) {
  const Grid g = cfg.grid.build();
  const auto& ic = cfg.initial;
  SimState s{0.0, Field(g), Field(g)};

  switch (ic.kind) {
    case InitialKind::perturbation: {
      const auto star = first_homogeneous_state(cfg.params, ic.lambda);
      if (!star)
        throw ConfigError("initial.lambda: no homogeneous steady state at lambda = " + num(ic.lambda) +
                          "; use type = expression");
      std::mt19937_64 rng(cfg.seed);
      const Field pu = perturbation_profile(g, ic.shape, rng);
      const Field pv = ic.shape == PerturbationShape::random ? perturbation_profile(g, ic.shape, rng) : Field(g);
      for (std::size_t n = 0; n < g.size(); ++n) {
        s.u[n] = star->u * (1.0 + ic.amplitude * pu[n]);
        s.v[n] = star->v * (1.0 + ic.amplitude * pv[n]);
      }
      break;
    }
    case InitialKind::expression: {
      const std::vector<std::string> vars = {"x", "y", "L", "Ly", "lambda", "u_star", "v_star"};
      std::optional<HomogeneousPoint> star;
      if (ic.lambda > 0.0) star = first_homogeneous_state(cfg.params, ic.lambda);
      const double nan = std::numeric_limits<double>::quiet_NaN();
      std::vector<double> values = {0.0, 0.0, g.length(0), g.dim() == 2 ? g.length(1) : 0.0, ic.lambda,
                                    star ? star->u : nan, star ? star->v : nan};
      try {
        const auto eu = Expression::parse(ic.u_expr, vars);
        const auto ev = Expression::parse(ic.v_expr, vars);
        for (std::size_t n = 0; n < g.size(); ++n) {
          values[0] = g.x_of(n);
          values[1] = g.y_of(n);
          s.u[n] = eu.evaluate(values);
          s.v[n] = ev.evaluate(values);
        }
      } catch (const ExpressionError& e) {
        throw ConfigError(std::string("initial: ") + e.what());
      }
      break;
    }
    case InitialKind::file: {
      const std::string head = read_file(ic.path).substr(0, 8);
      s = head == "PSIMSNAP" ? read_snapshot_binary(ic.path) : read_snapshot_text(ic.path, g);
      if (!(s.u.grid() == g)) throw ConfigError("initial.path: snapshot grid does not match [grid]");
      s.t = 0.0;
      break;
    }
  }
  try {
    validate_initial_state(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("initial: ") + e.what());
  }
  return s;
}

std::string provenance_header(const ScenarioConfig& cfg, const std::string& kind) {
  std::ostringstream os;
  const Grid g = cfg.grid.build();
  os << "# polarsim " << kind << "\n";
  os << "# config_hash " << hex64(cfg.hash()) << "\n";
  os << "# model " << model_name(cfg.params) << " " << describe(cfg.params) << "\n";
  os << "# grid " << g.describe() << "\n";
  os << "# solver scheme=" << to_string(cfg.solver.scheme)
     << " dt=" << num(cfg.solver.dt > 0.0 ? cfg.solver.dt : default_time_step(g, cfg.params))
     << " t_end=" << num(cfg.solver.t_end) << " stride=" << cfg.solver.stride << "\n";
  os << "# seed " << cfg.seed << "\n";
  os << "# c4 " << num(cfg.diagnostics.c4) << " (" << (cfg.diagnostics.c4_user ? "user" : "default") << ")\n";
  os << "# sigma ";
  if (cfg.diagnostics.sigma)
    os << num(*cfg.diagnostics.sigma) << " (user)\n";
  else
    os << "auto (sufficient_sigma)\n";
  os << "# mu2 " << num(mu2_for(g, cfg.diagnostics.mu2)) << " (" << to_string(cfg.diagnostics.mu2) << ")\n";
  if (std::holds_alternative<Model2Params>(cfg.params)) os << "# note coupling k taken equal to alpha1\n";
  return os.str();
}

void write_snapshot_text(const std::string& path, const ScenarioConfig& cfg, const SimState& s) {
  std::ostringstream os;
  os << provenance_header(cfg, "snapshot");
  os << "# t " << num(s.t) << "\n";
  const Grid& g = s.u.grid();
  const Field w = transform_w(s, cfg.params);
  os << (g.dim() == 1 ? "x\tu\tv\tw\n" : "x\ty\tu\tv\tw\n");
  for (std::size_t n = 0; n < g.size(); ++n) {
    os << num(g.x_of(n)) << '\t';
    if (g.dim() == 2) os << num(g.y_of(n)) << '\t';
    os << num(s.u[n]) << '\t' << num(s.v[n]) << '\t' << num(w[n]) << '\n';
  }
  write_text(path, os.str());
}

void write_snapshot_binary(const std::string& path, const ScenarioConfig& cfg, const SimState& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  const Grid& g = s.u.grid();
  os.write("PSIMSNAP", 8);
  put<std::uint32_t>(os, 1);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.nodes(0)));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.nodes(1)));
  put<std::uint64_t>(os, cfg.hash());
  put<double>(os, s.t);
  put<double>(os, g.length(0));
  put<double>(os, g.dim() == 2 ? g.length(1) : 0.0);
  for (double x : s.u.values()) put<double>(os, x);
  for (double x : s.v.values()) put<double>(os, x);
}

SimState read_snapshot_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open snapshot '" + path + "'");
  char magic[8];
  if (!is.read(magic, 8) || std::string(magic, 8) != "PSIMSNAP") throw ConfigError("'" + path + "' is not a snapshot");
  if (get<std::uint32_t>(is) != 1) throw ConfigError("unsupported snapshot version in '" + path + "'");
  const auto dim = get<std::uint32_t>(is);
  const auto nx = get<std::uint32_t>(is);
  const auto ny = get<std::uint32_t>(is);
  (void)get<std::uint64_t>(is);
  const double t = get<double>(is);
  const double lx = get<double>(is);
  const double ly = get<double>(is);
  const Grid g = dim == 1 ? Grid::line(lx, nx) : Grid::rectangle(lx, ly, nx, ny);
  SimState s{t, Field(g), Field(g)};
  for (double& x : s.u.values()) x = get<double>(is);
  for (double& x : s.v.values()) x = get<double>(is);
  return s;
}

SimState read_snapshot_text(const std::string& path, const Grid& grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open snapshot '" + path + "'");
  std::string line;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  double t = 0.0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# t ", 0) == 0) t = std::stod(line.substr(4));
      continue;
    }
    std::istringstream ls(line);
    if (columns.empty()) {
      for (std::string c; ls >> c;) columns.push_back(c);
      continue;
    }
    std::vector<double> row;
    for (std::string c; ls >> c;) {
      try {
        row.push_back(std::stod(c));
      } catch (const std::exception&) {
        throw ConfigError("snapshot '" + path + "': malformed value '" + c + "'");
      }
    }
    if (row.size() != columns.size()) throw ConfigError("snapshot '" + path + "': ragged row");
    rows.push_back(std::move(row));
  }
  auto column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw ConfigError("snapshot '" + path + "': missing column " + name);
    return static_cast<std::size_t>(it - columns.begin());
  };
  if (rows.size() != grid.size())
    throw ConfigError("snapshot '" + path + "': " + std::to_string(rows.size()) + " rows for " +
                      std::to_string(grid.size()) + " grid nodes");
  const std::size_t cx = column("x"), cu = column("u"), cv = column("v");
  const std::size_t cy = grid.dim() == 2 ? column("y") : 0;
  const double tol = 1e-9 * std::max(grid.length(0), grid.dim() == 2 ? grid.length(1) : 0.0);
  SimState s{t, Field(grid), Field(grid)};
  for (std::size_t n = 0; n < rows.size(); ++n) {
    if (std::abs(rows[n][cx] - grid.x_of(n)) > tol || (grid.dim() == 2 && std::abs(rows[n][cy] - grid.y_of(n)) > tol))
      throw ConfigError("snapshot '" + path + "': node coordinates do not match the grid at row " +
                        std::to_string(n + 1));
    s.u[n] = rows[n][cu];
    s.v[n] = rows[n][cv];
  }
  return s;
}

std::string format_records(const std::vector<DiagnosticsRecord>& records) {
  std::ostringstream os;
  const auto& cols = record_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "\t" : "") << cols[c];
  os << '\n';
  for (const auto& r : records) {
    const auto vals = record_values(r);
    for (std::size_t c = 0; c < vals.size(); ++c) os << (c ? "\t" : "") << num(vals[c]);
    os << '\n';
  }
  return os.str();
}

std::vector<ConditionReport> condition_reports(const ScenarioConfig& cfg, double lambda) {
  const auto* p = std::get_if<Model4Params>(&cfg.params);
  if (!p) return {};
  const Grid g = cfg.grid.build();
  const double mu2 = mu2_for(g, cfg.diagnostics.mu2);
  const std::string source = to_string(cfg.diagnostics.mu2);
  const auto tech = check_technical(*p, mu2, source);
  std::vector<ConditionReport> out = {tech.printed, tech.squared};
  auto cif = check_if(*p, lambda, mu2, cfg.diagnostics.c4, source);
  cif.note += cfg.diagnostics.c4_user ? "; C4 user" : "; C4 default";
  out.push_back(cif);
  const double sigma = cfg.diagnostics.sigma ? *cfg.diagnostics.sigma : sufficient_sigma(*p, mu2, cfg.diagnostics.c4);
  auto sc = check_sigma_condition(*p, lambda, mu2, sigma, cfg.diagnostics.sigma ? "user" : "sufficient_sigma", source);
  sc.c4 = cfg.diagnostics.c4;
  out.push_back(sc);
  return out;
}

std::string format_conditions(const std::vector<ConditionReport>& reports) {
  std::ostringstream os;
  os << "condition\tlhs\trelation\trhs\tsatisfied\tmu2\tmu2_source\tc4\tsigma\tsigma_source\tnote\n";
  for (const auto& r : reports) {
    os << r.name << '\t' << num(r.lhs) << '\t' << relation(r) << '\t' << num(r.rhs) << '\t'
       << (r.satisfied ? "yes" : "no") << '\t' << num(r.mu2) << '\t' << r.mu2_source << '\t' << num(r.c4) << '\t'
       << num(r.sigma) << '\t' << (r.sigma_source.empty() ? "-" : r.sigma_source) << '\t'
       << (r.note.empty() ? "-" : r.note) << '\n';
  }
  return os.str();
}

ScenarioOutcome run_scenario(const ScenarioConfig& cfg) {
  const SimState initial = build_initial_state(cfg);
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);

  ScenarioOutcome out;
  const double tau = relaxation(cfg.params);
  out.lambda0 = mass_level(initial, tau);
  DiagnosticsRecorder recorder(cfg.params, out.lambda0);

  const bool binary = cfg.output.format == SnapshotFormat::binary;
  std::size_t observed = 0;
  auto snapshot = [&](const SimState& s, const std::string& stem) {
    const std::string path = (dir / (stem + (binary ? ".bin" : ".tsv"))).string();
    binary ? write_snapshot_binary(path, cfg, s) : write_snapshot_text(path, cfg, s);
  };
  auto observer = [&](const SimState& s, std::size_t) {
    recorder.observe(s);
    if (cfg.output.snapshot_every > 0 && observed % cfg.output.snapshot_every == 0) {
      char stem[32];
      std::snprintf(stem, sizeof stem, "snapshot_%06zu", observed);
      snapshot(s, stem);
    }
    ++observed;
  };

  try {
    out.final_state = run(initial, cfg.params, cfg.solver, observer);
    out.ok = true;
  } catch (const SolverError& e) {
    out.error = e.what();
    out.final_state = e.last_good();
  }
  out.records = recorder.finish();

  write_text((dir / "diagnostics.tsv").string(),
             provenance_header(cfg, "diagnostics") + format_records(out.records));
  snapshot(*out.final_state, "final");

  out.decay = estimate_decay_rate(out.records, cfg.diagnostics.decay_column);
  out.omega = omega_limit_check(*out.final_state, cfg.params, out.lambda0, cfg.diagnostics.omega_tol);
  out.conditions = condition_reports(cfg, out.lambda0);
  out.lemma1 = lemma1_estimate_monitor(out.records);
  out.lemma2 = lemma2_constant(out.records);
  for (const auto& r : out.records)
    if (std::isfinite(r.identity_residual)) out.max_identity_residual = std::max(out.max_identity_residual, r.identity_residual);

  write_text((dir / "conditions.tsv").string(),
             provenance_header(cfg, "conditions") +
                 (out.conditions.empty() ? "# no homogenization conditions for " + model_name(cfg.params) + "\n"
                                         : format_conditions(out.conditions)));

  std::ostringstream sm;
  sm << provenance_header(cfg, "summary");
  sm << "status = " << (out.ok ? "completed" : "failed") << "\n";
  if (!out.ok) sm << "error = " << out.error << "\n";
  sm << "t_final = " << num(out.final_state->t) << "\n";
  sm << "records = " << out.records.size() << "\n";
  sm << "lambda0 = " << num(out.lambda0) << "\n";
  sm << "decay_rate = " << num(out.decay.rate) << "\n";
  sm << "decay_converged = " << (out.decay.converged ? "yes" : "no") << "\n";
  sm << "decay_points = " << out.decay.points << "\n";
  sm << "mass_defect = " << num(out.omega.mass_defect) << "\n";
  sm << "in_f_lambda = " << (out.omega.in_f_lambda ? "yes" : "no") << "\n";
  sm << "u_star = " << num(out.omega.u_star) << "\n";
  sm << "v_star = " << num(out.omega.v_star) << "\n";
  sm << "u_distance = " << num(out.omega.u_distance) << "\n";
  sm << "v_distance = " << num(out.omega.v_distance) << "\n";
  sm << "near_equilibrium = " << (out.omega.near_equilibrium ? "yes" : "no") << "\n";
  sm << "lemma1_cumulative = " << num(out.lemma1.cumulative) << "\n";
  sm << "lemma1_supremum = " << num(out.lemma1.supremum) << "\n";
  sm << "lemma2_constant = " << num(out.lemma2) << "\n";
  sm << "max_identity_residual = " << num(out.max_identity_residual) << "\n";
  for (const auto& c : out.conditions) sm << "condition_" << c.name << " = " << (c.satisfied ? "yes" : "no") << "\n";
  write_text((dir / "summary.txt").string(), sm.str());
  return out;
}

std::vector<SweepRow> run_sweep(const std::string& template_path, const RawConfig& overrides, const std::string& key,
                                std::vector<double> values, const std::string& out_dir, unsigned threads) {
  if (values.empty()) throw ConfigError("sweep: no parameter values given");
  std::sort(values.begin(), values.end());
  std::vector<SweepRow> rows(values.size());
  fs::create_directories(out_dir);

  parallel_for(values.size(), threads, [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.value = values[i];
    char name[32];
    std::snprintf(name, sizeof name, "run_%03zu", i);
    row.directory = (fs::path(out_dir) / name).string();
    try {
      RawConfig o = overrides;
      o[key] = num(values[i]);
      ScenarioConfig cfg = load_scenario(template_path, o);
      cfg.output_dir = row.directory;
      row.outcome = run_scenario(cfg);
      row.ok = row.outcome.ok;
      row.error = row.outcome.error;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  });

  std::ostringstream os;
  std::string provenance = read_file(template_path) + "\n" + key;
  for (const auto& [k, v] : overrides) provenance += "\n" + k + "=" + v;
  for (double v : values) provenance += "\n" + num(v);
  os << "# polarsim sweep\n# config_hash " << hex64(fnv1a(provenance)) << "\n# template " << template_path
     << "\n# parameter " << key << "\n";
  os << "value\tstatus\tdecay_rate\tdecay_converged\tmass_defect\tu_distance\tv_distance\tfinal_u_dev_linf\t"
        "directory\terror\n";
  for (const auto& r : rows) {
    const auto& o = r.outcome;
    const double linf = o.records.empty() ? std::numeric_limits<double>::quiet_NaN() : o.records.back().u_dev_linf;
    os << num(r.value) << '\t' << (r.ok ? "completed" : "failed") << '\t' << num(o.decay.rate) << '\t'
       << (o.decay.converged ? "yes" : "no") << '\t' << num(o.omega.mass_defect) << '\t' << num(o.omega.u_distance)
       << '\t' << num(o.omega.v_distance) << '\t' << num(linf) << '\t' << fs::path(r.directory).filename().string()
       << '\t' << (r.error.empty() ? "-" : r.error) << '\n';
  }
  write_text((fs::path(out_dir) / "summary.tsv").string(), os.str());
  return rows;
}

}  // namespace polarsim
