#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "polarsim/kinetics.hpp"

namespace polarsim {

enum class ModeStability { stable, neutral, unstable, complex };

std::string to_string(ModeStability s);

using Matrix2 = std::array<std::array<double, 2>, 2>;

/// One Neumann mode of the constant-activation linearization
/// d/dt (z, w) = M(mu) (z, w).
struct ModeEigenpair {
  std::size_t j = 0;
  double mu = 0.0;
  Matrix2 matrix{};
  std::array<std::complex<double>, 2> eigenvalues{};
  ModeStability classification = ModeStability::stable;
};

/// M(mu) = [[-D mu - delta, a], [delta / tau, -(mu + a) / tau]] and its
/// eigenvalues. det M = mu (D mu + D a + delta) / tau is used in closed form,
/// so the mu = 0 mode has an exact zero eigenvalue (the conserved direction
/// z + tau w). Eigenvalues within 1e-12 * (D mu + delta + a) of zero are
/// classified neutral.
ModeEigenpair constant_a_mode_matrix(double a, double D, double tau, double delta, double mu, std::size_t j = 0);

/// Left side minus right side of the degeneracy condition of the operator
/// linearized around the homogeneous state u*(lambda). For j >= 2 the
/// nonlocal term carries a'(u*) xi u* / tau; for j = 1 it carries
/// a(u*) xi u* / tau. A zero flags a degenerate mode.
double degeneracy_residual(const Model4Params& p, double lambda, std::size_t j, double mu_j);

enum class ScanParameter { D, lambda, delta };

ScanParameter parse_scan_parameter(const std::string& name);
std::string to_string(ScanParameter s);

struct DegeneracyReport {
  std::size_t j = 0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double residual_lo = 0.0;
  double residual_hi = 0.0;
  double root = 0.0;      // midpoint of the refined bracket
  double residual = 0.0;  // residual at root
};

struct ScanSample {
  double value = 0.0;
  double residual = 0.0;
  bool ok = true;
  std::string error;  // equilibrium failure at this sample, if any
};

struct ScanResult {
  std::vector<ScanSample> samples;
  std::vector<DegeneracyReport> roots;
};

/// Evaluates degeneracy_residual on a uniform grid of the chosen parameter
/// over [lo, hi], brackets every sign change between successful neighbouring
/// samples and bisects each to 1e-8 relative width. Per-sample failures are
/// recorded and the scan continues. Samples are evaluated on up to
/// `threads` workers; the result does not depend on the worker count.
ScanResult scan_degeneracy(const Model4Params& p, double lambda, std::size_t j, double mu_j,
                           ScanParameter parameter, double lo, double hi, std::size_t samples,
                           unsigned threads = 1);

}  // namespace polarsim
