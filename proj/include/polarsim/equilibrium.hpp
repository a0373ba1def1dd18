#pragma once

#include <stdexcept>
#include <vector>

#include "polarsim/kinetics.hpp"

namespace polarsim {

class EquilibriumError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One bisection step on A - B: the bracket before the step and A, B at
/// its midpoint.
struct BracketStep {
  double lo = 0.0;
  double hi = 0.0;
  double mid = 0.0;
  double A = 0.0;
  double B = 0.0;
};

/// Spatially homogeneous steady state of the fourth model on the mass line
/// u + tau v = lambda.
struct HomogeneousEquilibrium {
  double lambda = 0.0;
  double u_star = 0.0;
  double v_star = 0.0;
  double residual = 0.0;  // f(u_star, v_star)
  int sign_changes = 0;   // of A - B on the uniqueness audit grid
  std::vector<BracketStep> trace;
};

/// A(u) = tau delta / b + gamma + k0 + lambda tau delta / (b (u - lambda)).
/// Throws EquilibriumError at the pole u = lambda.
double A_of(const Model4Params& p, double lambda, double u);
/// B(u) = gamma k^m / (k^m + u^m).
double B_of(const Model4Params& p, double u);

/// Unique root of A = B on (0, lambda): bisection on A - B followed by a
/// safeguarded Newton polish of f along the mass line. The number of sign
/// changes of A - B is audited on a uniform grid of audit_points; anything
/// other than exactly one is reported as an error.
HomogeneousEquilibrium solve_equilibrium(const Model4Params& p, double lambda, int audit_points = 10000);

/// u* = a lambda / (a + tau delta) for a constant activation a.
double constant_a_equilibrium(double a, double tau, double delta, double lambda);

/// Solution of the spatially homogeneous reduction
/// dU/dt = -delta U + a(U) (lambda - U) / tau.
struct OdeTrajectory {
  double lambda = 0.0;
  std::vector<double> t;
  std::vector<double> U;
  std::vector<double> V;  // (lambda - U) / tau
  std::vector<double> G;  // primitive_G4(U); nondecreasing along the flow
};

/// Classical RK4 with fixed step dt. A step leaving [0, lambda] by more than
/// 1e-9 (relative to lambda) is retried with the step halved, up to 20
/// times; EquilibriumError after that.
OdeTrajectory integrate_homogeneous_ode(const Model4Params& p, double lambda, double U0, double t_end, double dt);

}  // namespace polarsim
