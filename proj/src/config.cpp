#include "polarsim/config.hpp"

#include <charconv>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace polarsim {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Typed access to RawConfig entries; records which keys were consumed.
class Reader {
 public:
  explicit Reader(const RawConfig& raw) : raw_(raw) {}

  std::optional<std::string> text(const std::string& key) {
    used_.insert(key);
    const auto it = raw_.find(key);
    if (it == raw_.end()) return std::nullopt;
    return it->second;
  }

  double real(const std::string& key, double fallback) {
    const auto s = text(key);
    if (!s) return fallback;
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
    if (ec != std::errc() || end != s->data() + s->size() || !std::isfinite(v))
      throw ConfigError(key + ": expected a real number, got '" + *s + "'");
    return v;
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    const auto s = text(key);
    if (!s) return fallback;
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
    if (ec != std::errc() || end != s->data() + s->size())
      throw ConfigError(key + ": expected a nonnegative integer, got '" + *s + "'");
    return v;
  }

  bool present(const std::string& key) const { return raw_.count(key) != 0; }

  void reject_unused() const {
    for (const auto& [key, value] : raw_)
      if (!used_.count(key)) throw ConfigError(key + ": unknown key");
  }

 private:
  const RawConfig& raw_;
  std::set<std::string> used_;
};

template <class Fn>
void with_field(const std::string& section, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(section + ": " + e.what());
  }
}

ModelParams read_model(Reader& r) {
  const std::string name = r.text("model.name").value_or("model4");
  if (name == "model4" || name == "model4-general-m") {
    Model4Params p;
    p.D = r.real("model.D", p.D);
    p.tau = r.real("model.tau", p.tau);
    p.b = r.real("model.b", p.b);
    p.gamma = r.real("model.gamma", p.gamma);
    p.k = r.real("model.k", p.k);
    p.k0 = r.real("model.k0", p.k0);
    p.delta = r.real("model.delta", p.delta);
    if (name == "model4-general-m") {
      p.m = r.real("model.m", 3.0);
    } else if (r.present("model.m")) {
      throw ConfigError("model.m: only valid with name = model4-general-m");
    }
    with_field("model", [&] { p.validate(); });
    return p;
  }
  if (name == "model1") {
    Model1Params p;
    p.D = r.real("model.D", p.D);
    p.tau = r.real("model.tau", p.tau);
    p.a = r.real("model.a", p.a);
    p.b = r.real("model.b", p.b);
    p.k = r.real("model.k", p.k);
    with_field("model", [&] { p.validate(); });
    return p;
  }
  if (name == "model2") {
    Model2Params p;
    p.D = r.real("model.D", p.D);
    p.tau = r.real("model.tau", p.tau);
    p.alpha1 = r.real("model.alpha1", p.alpha1);
    p.alpha2 = r.real("model.alpha2", p.alpha2);
    with_field("model", [&] { p.validate(); });
    return p;
  }
  throw ConfigError("model.name: expected model1, model2, model4 or model4-general-m, got '" + name + "'");
}

GridSpec read_grid(Reader& r) {
  GridSpec g;
  g.dim = static_cast<int>(r.count("grid.dim", 1));
  if (g.dim != 1 && g.dim != 2) throw ConfigError("grid.dim: must be 1 or 2");
  g.lx = r.real("grid.L", g.lx);
  g.nx = r.count("grid.n", g.nx);
  if (g.dim == 2) {
    g.ly = r.real("grid.Ly", g.ly);
    g.ny = r.count("grid.ny", g.ny);
  } else if (r.present("grid.Ly") || r.present("grid.ny")) {
    throw ConfigError("grid.Ly/grid.ny: only valid with dim = 2");
  }
  with_field("grid", [&] { g.build(); });
  return g;
}

SolverConfig read_solver(Reader& r) {
  SolverConfig s;
  s.dt = r.real("solver.dt", s.dt);
  s.t_end = r.real("solver.t_end", s.t_end);
  if (const auto scheme = r.text("solver.scheme")) with_field("solver", [&] { s.scheme = parse_scheme(*scheme); });
  s.retry_limit = static_cast<int>(r.count("solver.retry_limit", static_cast<std::uint64_t>(s.retry_limit)));
  s.stride = r.count("diagnostics.stride", s.stride);
  with_field("solver", [&] { s.validate(); });
  return s;
}

InitialSpec read_initial(Reader& r, const std::string& base_dir) {
  InitialSpec ic;
  const std::string kind = r.text("initial.type").value_or("perturbation");
  ic.lambda = r.real("initial.lambda", ic.lambda);
  if (kind == "perturbation") {
    ic.kind = InitialKind::perturbation;
    if (!(ic.lambda > 0.0)) throw ConfigError("initial.lambda: must be positive");
    ic.amplitude = r.real("initial.amplitude", ic.amplitude);
    if (!(ic.amplitude >= 0.0 && ic.amplitude < 0.45))
      throw ConfigError("initial.amplitude: must lie in [0, 0.45) to keep the state nonnegative");
    const std::string shape = r.text("initial.shape").value_or("cosine");
    if (shape == "cosine")
      ic.shape = PerturbationShape::cosine;
    else if (shape == "random")
      ic.shape = PerturbationShape::random;
    else
      throw ConfigError("initial.shape: expected cosine or random, got '" + shape + "'");
  } else if (kind == "expression") {
    ic.kind = InitialKind::expression;
    const auto u = r.text("initial.u");
    const auto v = r.text("initial.v");
    if (!u || !v) throw ConfigError("initial.u/initial.v: both are required for type = expression");
    ic.u_expr = *u;
    ic.v_expr = *v;
  } else if (kind == "file") {
    ic.kind = InitialKind::file;
    const auto path = r.text("initial.path");
    if (!path) throw ConfigError("initial.path: required for type = file");
    std::filesystem::path p(*path);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    if (!std::filesystem::exists(p)) throw ConfigError("initial.path: file '" + p.string() + "' does not exist");
    ic.path = p.string();
  } else {
    throw ConfigError("initial.type: expected perturbation, expression or file, got '" + kind + "'");
  }
  return ic;
}

DiagnosticsSpec read_diagnostics(Reader& r) {
  DiagnosticsSpec d;
  if (r.present("diagnostics.c4")) {
    d.c4 = r.real("diagnostics.c4", d.c4);
    d.c4_user = true;
    if (!(d.c4 > 0.0)) throw ConfigError("diagnostics.c4: must be positive");
  }
  if (const auto s = r.text("diagnostics.sigma"); s && *s != "auto") {
    d.sigma = r.real("diagnostics.sigma", 0.0);
    if (!(*d.sigma > 0.0)) throw ConfigError("diagnostics.sigma: must be positive");
  }
  if (const auto m = r.text("diagnostics.mu2")) with_field("diagnostics", [&] { d.mu2 = parse_mu2_mode(*m); });
  if (const auto c = r.text("diagnostics.decay_column"))
    with_field("diagnostics", [&] { d.decay_column = parse_norm_column(*c); });
  d.omega_tol = r.real("diagnostics.omega_tol", d.omega_tol);
  if (!(d.omega_tol > 0.0)) throw ConfigError("diagnostics.omega_tol: must be positive");
  return d;
}

OutputSpec read_output(Reader& r) {
  OutputSpec o;
  o.snapshot_every = r.count("output.snapshot_every", 0);
  const std::string fmt = r.text("output.snapshot_format").value_or("text");
  if (fmt == "text")
    o.format = SnapshotFormat::text;
  else if (fmt == "binary")
    o.format = SnapshotFormat::binary;
  else
    throw ConfigError("output.snapshot_format: expected text or binary, got '" + fmt + "'");
  return o;
}

std::string column_name(NormColumn c) {
  switch (c) {
    case NormColumn::u_dev_l2: return "u_dev_l2";
    case NormColumn::u_dev_linf: return "u_dev_linf";
    case NormColumn::v_dev_linf: return "v_dev_linf";
    case NormColumn::w_dev_l2: return "w_dev_l2";
  }
  return "";
}

}  // namespace

RawConfig parse_config_text(const std::string& text, const std::string& origin) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line, section;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto where = [&] { return origin + ":" + std::to_string(number) + ": "; };
    if (const auto c = line.find_first_of("#;"); c != std::string::npos) line.erase(c);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where() + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where() + "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where() + "expected key = value");
    if (section.empty()) throw ConfigError(where() + "key outside of a section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where() + "empty key");
    if (!raw.emplace(section + "." + key, value).second)
      throw ConfigError(where() + section + "." + key + ": duplicate key");
  }
  return raw;
}

Grid GridSpec::build() const {
  return dim == 1 ? Grid::line(lx, nx) : Grid::rectangle(lx, ly, nx, ny);
}

ScenarioConfig build_scenario(const RawConfig& raw, const std::string& base_dir) {
  Reader r(raw);
  ScenarioConfig cfg;
  cfg.params = read_model(r);
  cfg.grid = read_grid(r);
  cfg.solver = read_solver(r);
  cfg.initial = read_initial(r, base_dir);
  cfg.diagnostics = read_diagnostics(r);
  cfg.output = read_output(r);
  cfg.seed = r.count("initial.seed", cfg.seed);
  cfg.output_dir = r.text("output.dir").value_or(cfg.output_dir);
  r.reject_unused();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path, const RawConfig& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  RawConfig raw = parse_config_text(buf.str(), path);
  for (const auto& [k, v] : overrides) raw[k] = v;
  const auto dir = std::filesystem::path(path).parent_path();
  return build_scenario(raw, dir.empty() ? "." : dir.string());
}

std::pair<std::string, std::string> parse_override(const std::string& text) {
  const auto eq = text.find('=');
  const auto dot = text.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("override '" + text + "': expected section.key=value");
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

std::string ScenarioConfig::canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "model " << model_name(params) << " " << describe(params) << "\n";
  os << "grid " << grid.build().describe() << "\n";
  os << "solver dt=" << solver.dt << " t_end=" << solver.t_end << " scheme=" << to_string(solver.scheme)
     << " stride=" << solver.stride << " retry_limit=" << solver.retry_limit << "\n";
  os << "initial ";
  switch (initial.kind) {
    case InitialKind::perturbation:
      os << "perturbation lambda=" << initial.lambda << " amplitude=" << initial.amplitude
         << " shape=" << (initial.shape == PerturbationShape::cosine ? "cosine" : "random");
      break;
    case InitialKind::expression:
      os << "expression lambda=" << initial.lambda << " u=" << initial.u_expr << " v=" << initial.v_expr;
      break;
    case InitialKind::file: {
      std::ifstream in(initial.path, std::ios::binary);
      std::stringstream buf;
      buf << in.rdbuf();
      os << "file content=" << hex64(fnv1a(buf.str()));
      break;
    }
  }
  os << "\n";
  os << "diagnostics c4=" << diagnostics.c4 << " sigma=";
  if (diagnostics.sigma)
    os << *diagnostics.sigma;
  else
    os << "auto";
  os << " mu2=" << to_string(diagnostics.mu2) << " decay_column=" << column_name(diagnostics.decay_column)
     << " omega_tol=" << diagnostics.omega_tol << "\n";
  os << "seed " << seed << "\n";
  return os.str();
}

std::uint64_t ScenarioConfig::hash() const { return fnv1a(canonical()); }

std::string to_string(Mu2Mode m) { return m == Mu2Mode::continuum ? "continuum" : "discrete"; }

Mu2Mode parse_mu2_mode(const std::string& s) {
  if (s == "continuum") return Mu2Mode::continuum;
  if (s == "discrete") return Mu2Mode::discrete;
  throw ConfigError("mu2 must be continuum or discrete (got '" + s + "')");
}

double mu2_for(const Grid& grid, Mu2Mode mode) {
  return mode == Mu2Mode::continuum ? neumann_eigenvalue(grid, 2) : discrete_neumann_eigenvalue(grid, 2);
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace polarsim
