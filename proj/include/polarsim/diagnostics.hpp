#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polarsim/grid.hpp"
#include "polarsim/kinetics.hpp"
#include "polarsim/solver.hpp"

namespace polarsim {

/// One row of the diagnostics table. Norms are |Omega|-normalized.
struct DiagnosticsRecord {
  double t = 0.0;
  double lambda = 0.0;  // mean(u + tau v)
  double u_mean = 0.0;
  double v_mean = 0.0;
  double w_mean = 0.0;
  double u_dev_l2 = 0.0;
  double u_dev_linf = 0.0;
  double v_dev_linf = 0.0;
  double w_dev_l2 = 0.0;
  double lyapunov = 0.0;           // model-specific functional, see lyapunov_value()
  double identity_residual = 0.0;  // |dL/dt + dissipation| from neighbouring records
  double equilibrium_distance = 0.0;
  double lemma1_pairing = 0.0;  // (w - mean w, u + tau v - lambda0)
  double v_l2 = 0.0;
};

/// Column names in table order.
const std::vector<std::string>& record_columns();
/// Values of a record in the order of record_columns().
std::vector<double> record_values(const DiagnosticsRecord& r);

enum class NormColumn { u_dev_l2, u_dev_linf, v_dev_linf, w_dev_l2 };
NormColumn parse_norm_column(const std::string& name);
double column_value(const DiagnosticsRecord& r, NormColumn c);

// ---------------------------------------------------------------------------
// Sufficient conditions for homogenization of the fourth model.

struct ConditionReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool strict = false;  // '<' rather than '<='
  bool satisfied = false;
  double mu2 = 0.0;
  std::string mu2_source;
  double c4 = std::numeric_limits<double>::quiet_NaN();
  double sigma = std::numeric_limits<double>::quiet_NaN();
  std::string sigma_source;
  std::string note;
};

/// 2 |xi| a1 < tau^3 (mu2 D + delta) as printed, and the variant
/// 2 xi^2 a1 < tau^3 (mu2 D + delta) that the squared estimate yields.
/// Both are always reported.
struct TechnicalReport {
  ConditionReport printed;
  ConditionReport squared;
};
TechnicalReport check_technical(const Model4Params& p, double mu2, const std::string& mu2_source = "continuum");

/// a1 (1 + 1/(2 tau)) + (4/D) (alpha_sup C4 lambda / mu2)^2 <= (D mu2 + delta) / 2,
/// with alpha_sup = sup a' standing in for b gamma alpha(k).
ConditionReport check_if(const Model4Params& p, double lambda, double mu2, double c4,
                         const std::string& mu2_source = "continuum");

/// sigma = max(2 a1 (1 + 1/(2 tau)), 8 (alpha_sup C4 / mu2)^2).
/// sigma (1 + lambda^2 / D) <= D mu2 + delta then bounds each term of the
/// left side of check_if by half the right side: the first because
/// sigma / 2 >= a1 (1 + 1/(2 tau)), the second because
/// sigma lambda^2 / (2 D) >= (4/D) (alpha_sup C4 lambda / mu2)^2.
double sufficient_sigma(const Model4Params& p, double mu2, double c4);

/// sigma (1 + lambda^2 / D) <= D mu2 + delta.
ConditionReport check_sigma_condition(const Model4Params& p, double lambda, double mu2, double sigma,
                                      const std::string& sigma_source, const std::string& mu2_source = "continuum");

// ---------------------------------------------------------------------------
// Lyapunov functionals and energy identities. Integrals are unnormalized
// for models 1 and 2, |Omega|-normalized for the fourth-model energy.

/// xi int (D/2 |grad u|^2 - Q(u)) + (tau k / 2) ||w||^2.
double lyapunov_model1(const Field& u, const Field& w, const Model1Params& p);
/// int ((alpha + D)/2 |grad w|^2 + (k/2) w^2 + (xi D / 2) |grad z|^2 - xi G(z)), k = alpha1.
double lyapunov_model2(const Field& z, const Field& w, const Model2Params& p);
/// (1/2) ((-Lap)^-1 psi, psi) with psi = u + tau v - lambda. Its time
/// derivative equals -(w - mean w, psi) for the fourth model.
double lemma1_energy(const SimState& s, double tau, double lambda);
/// (w - mean w, u + tau v - lambda), normalized inner product, w = D u + v.
double lemma1_pairing(const SimState& s, double D, double tau, double lambda);

/// Functional of the selected model at a state (lemma1_energy for model 4).
double lyapunov_value(const SimState& s, const ModelParams& p, double lambda);

/// |dL/dt + dissipation| at window[k], with three-point (second-order,
/// nonuniform) differences in time over the three snapshots.
double identity_residual_at(std::span<const SimState> window3, std::size_t k, const ModelParams& p, double lambda);

/// Largest identity residual over the interior snapshots of a run window
/// (centered differences). Needs at least 3 snapshots.
double lyapunov1_identity_residual(std::span<const SimState> window, const Model1Params& p);
double lyapunov2_identity_residual(std::span<const SimState> window, const Model2Params& p);

// ---------------------------------------------------------------------------
// Variational functionals of the stationary problems.

/// int (D/2 |grad v|^2 - Q(v) - (k/tau) lambda v) + (k xi / (2 tau |Omega|)) (int v)^2.
double j_lambda_model1(const Field& v, const Model1Params& p, double lambda);
/// int (D/2 |grad z|^2 - G(z) - k lambda z) + (k xi / (2 |Omega|)) (int z)^2, k = alpha1.
double j_lambda_model2(const Field& z, const Model2Params& p, double lambda);
/// Nodal residual -D Lap u - q(u) - (k/tau)(lambda - xi mean u).
Field stationary_residual_model1(const Field& u, const Model1Params& p, double lambda);
/// Nodal residual -D Lap z - g(z) - k (lambda - xi mean z).
Field stationary_residual_model2(const Field& z, const Model2Params& p, double lambda);

// ---------------------------------------------------------------------------
// Post-processing of record streams.

struct DecayFit {
  double rate = 0.0;       // -slope of log(norm); +inf when converged
  bool converged = false;  // window reached the floor / too few points above it
  std::size_t points = 0;  // records used in the fit
  double t_begin = 0.0;
  double t_end = 0.0;
};

/// Least-squares slope of log(norm) over the trailing `fraction` of the
/// records that precede the first record at or below `floor`. Fewer than
/// 10 usable records gives rate = +inf with converged = true.
DecayFit estimate_decay_rate(std::span<const DiagnosticsRecord> records, NormColumn column = NormColumn::u_dev_l2,
                             double fraction = 0.5, double floor = 1e-12);

/// Homogeneous steady states on the mass line u + tau v = lambda. The
/// fourth model uses solve_equilibrium; models 1 and 2 are scanned and
/// bisected. Empty if none are found.
struct HomogeneousPoint {
  double u = 0.0;
  double v = 0.0;
};
std::vector<HomogeneousPoint> homogeneous_states(const ModelParams& p, double lambda);

struct OmegaLimitReport {
  double lambda = 0.0;
  double mass_defect = 0.0;  // |mean u + tau mean v - lambda| / lambda
  bool in_f_lambda = false;
  bool has_equilibrium = false;
  double u_star = std::numeric_limits<double>::quiet_NaN();
  double v_star = std::numeric_limits<double>::quiet_NaN();
  double u_distance = std::numeric_limits<double>::quiet_NaN();
  double v_distance = std::numeric_limits<double>::quiet_NaN();
  bool near_equilibrium = false;  // reported, not asserted
};

/// F_lambda membership (|mean u + tau mean v - lambda| <= mass_tol lambda)
/// and distances of the final means to the nearest homogeneous steady
/// state (u*(lambda), v*(lambda)).
OmegaLimitReport omega_limit_check(const SimState& final_state, const ModelParams& p, double lambda, double tol,
                                   double mass_tol = 1e-10);

struct Lemma1Monitor {
  double cumulative = 0.0;
  double supremum = 0.0;
  std::vector<double> running;  // cumulative value at each record
};
/// Trapezoid-in-time accumulation of the lemma1_pairing column.
Lemma1Monitor lemma1_estimate_monitor(std::span<const DiagnosticsRecord> records);

/// sup of ||v||_2 / lambda over records with t >= t_min (NaN if none).
double lemma2_constant(std::span<const DiagnosticsRecord> records, double t_min = 1.0);

// ---------------------------------------------------------------------------

/// Builds DiagnosticsRecords from observed states. The identity residual of
/// a record needs its successor, so records are completed one observation
/// late; finish() closes the stream with a one-sided difference.
class DiagnosticsRecorder {
 public:
  DiagnosticsRecorder(ModelParams p, double lambda0);

  void observe(const SimState& s);
  std::vector<DiagnosticsRecord> finish();
  const std::vector<DiagnosticsRecord>& records() const { return records_; }
  double lambda0() const { return lambda0_; }
  std::optional<HomogeneousPoint> reference_state() const { return reference_; }

 private:
  DiagnosticsRecord make_record(const SimState& s) const;

  ModelParams params_;
  double lambda0_;
  std::optional<HomogeneousPoint> reference_;
  std::vector<HomogeneousPoint> reference_states_;  // when several exist, the nearest is used
  std::vector<SimState> window_;  // last up to three observed states
  std::vector<DiagnosticsRecord> records_;
  bool finished_ = false;
};

struct SimulationResult {
  SimState final_state;
  std::vector<DiagnosticsRecord> records;
};

/// solver::run with a DiagnosticsRecorder attached; `extra` sees every
/// observed state as well (snapshots, progress).
SimulationResult simulate(SimState initial, const ModelParams& p, const SolverConfig& cfg,
                          const StateObserver& extra = {});

}  // namespace polarsim
