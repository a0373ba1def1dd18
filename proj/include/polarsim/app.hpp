#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "polarsim/config.hpp"
#include "polarsim/diagnostics.hpp"
#include "polarsim/solver.hpp"

namespace polarsim {

/// Whole file as a string; empty if it cannot be opened.
std::string read_file(const std::string& path);

/// Initial state of a scenario. Throws ConfigError when the state cannot be
/// built (no homogeneous state for a perturbation, bad expression, file
/// that does not match the grid, negative values).
SimState build_initial_state(const ScenarioConfig& cfg);

/// '#'-prefixed provenance lines shared by all output files.
std::string provenance_header(const ScenarioConfig& cfg, const std::string& kind);

/// Text snapshot: provenance header, "# t = ..." and columns x [y] u v w.
void write_snapshot_text(const std::string& path, const ScenarioConfig& cfg, const SimState& s);

/// Packed binary snapshot, all fields little-endian:
///   char[8]  "PSIMSNAP"
///   uint32   version (1), dim, nx, ny
///   uint64   config hash
///   double   t, Lx, Ly
///   double   u[nx*ny], v[nx*ny]   (node (i, j) at j*nx + i)
void write_snapshot_binary(const std::string& path, const ScenarioConfig& cfg, const SimState& s);

/// Reads u and v from a text snapshot laid out on `grid`. Throws ConfigError
/// if the node count or coordinates disagree with the grid.
SimState read_snapshot_text(const std::string& path, const Grid& grid);
SimState read_snapshot_binary(const std::string& path);

/// Header row plus one row per record, values at full precision.
std::string format_records(const std::vector<DiagnosticsRecord>& records);

/// Condition reports of the fourth model at the given mass (empty for the
/// other models): technical (both variants), if, and the sigma condition.
std::vector<ConditionReport> condition_reports(const ScenarioConfig& cfg, double lambda);
std::string format_conditions(const std::vector<ConditionReport>& reports);

struct ScenarioOutcome {
  bool ok = false;
  std::string error;  // solver failure message when !ok
  double lambda0 = 0.0;
  std::optional<SimState> final_state;
  std::vector<DiagnosticsRecord> records;
  DecayFit decay;
  OmegaLimitReport omega;
  std::vector<ConditionReport> conditions;
  Lemma1Monitor lemma1;
  double lemma2 = 0.0;
  double max_identity_residual = 0.0;
};

/// Runs a scenario and writes diagnostics.tsv, snapshots, final.tsv (or
/// final.bin), conditions.tsv and summary.txt into cfg.output_dir. A solver
/// failure is returned with ok = false after the partial outputs are
/// written; configuration problems throw ConfigError.
ScenarioOutcome run_scenario(const ScenarioConfig& cfg);

struct SweepRow {
  double value = 0.0;
  std::string directory;
  bool ok = false;
  std::string error;
  ScenarioOutcome outcome;
};

/// Runs the template once per value of `key` ("section.key") on up to
/// `threads` workers, each into its own subdirectory of `out_dir`, and
/// writes out_dir/summary.tsv sorted by value. Failed runs are recorded
/// and the sweep continues.
std::vector<SweepRow> run_sweep(const std::string& template_path, const RawConfig& overrides, const std::string& key,
                                std::vector<double> values, const std::string& out_dir, unsigned threads);

/// Command-line entry point. Exit codes: 0 success, 2 usage or
/// configuration error, 3 runtime failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace polarsim
