#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "polarsim/diagnostics.hpp"
#include "polarsim/grid.hpp"
#include "polarsim/kinetics.hpp"
#include "polarsim/solver.hpp"

namespace polarsim {

/// Malformed or invalid configuration. The message names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raw "[section]" / "key = value" text, keyed "section.key". '#' and ';'
/// start comments. Duplicate keys and keys outside a section are errors.
using RawConfig = std::map<std::string, std::string>;
RawConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");

struct GridSpec {
  int dim = 1;
  double lx = 1.0;
  double ly = 1.0;
  std::size_t nx = 128;
  std::size_t ny = 32;

  Grid build() const;
};

enum class InitialKind { perturbation, expression, file };
enum class PerturbationShape { cosine, random };
enum class Mu2Mode { continuum, discrete };
enum class SnapshotFormat { text, binary };

struct InitialSpec {
  InitialKind kind = InitialKind::perturbation;
  double lambda = 1.0;  // mass of the perturbed state; also a variable in expressions
  double amplitude = 0.1;
  PerturbationShape shape = PerturbationShape::cosine;
  std::string u_expr;
  std::string v_expr;
  std::string path;  // resolved against the config file directory
};

struct DiagnosticsSpec {
  double c4 = 1.0;
  bool c4_user = false;
  std::optional<double> sigma;  // user override of sufficient_sigma
  Mu2Mode mu2 = Mu2Mode::continuum;
  NormColumn decay_column = NormColumn::u_dev_linf;
  double omega_tol = 1e-6;
};

struct OutputSpec {
  std::size_t snapshot_every = 0;  // in records; 0 writes only the final state
  SnapshotFormat format = SnapshotFormat::text;
};

struct ScenarioConfig {
  ModelParams params = Model4Params{};
  GridSpec grid;
  SolverConfig solver;
  InitialSpec initial;
  DiagnosticsSpec diagnostics;
  OutputSpec output;
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  /// Canonical description of everything that affects the results (the
  /// output directory is excluded). Hashed into every output header.
  std::string canonical() const;
  std::uint64_t hash() const;
};

/// Builds a ScenarioConfig from raw entries, applying defaults. `base_dir`
/// resolves relative file paths. Throws ConfigError.
ScenarioConfig build_scenario(const RawConfig& raw, const std::string& base_dir = ".");

/// Reads and builds a config file. Overrides ("section.key" -> value) are
/// applied on top of the file entries before building.
ScenarioConfig load_scenario(const std::string& path, const RawConfig& overrides = {});

/// Parses "section.key=value".
std::pair<std::string, std::string> parse_override(const std::string& text);

std::string to_string(Mu2Mode m);
Mu2Mode parse_mu2_mode(const std::string& s);

/// mu2 for the chosen mode: the continuum Neumann eigenvalue or the one of
/// the discrete operator on the grid.
double mu2_for(const Grid& grid, Mu2Mode mode);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);

}  // namespace polarsim
