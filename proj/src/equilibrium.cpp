#include "polarsim/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace polarsim {

namespace {

// f restricted to the mass line u + tau v = lambda.
double f_on_mass_line(const Model4Params& p, double lambda, double u) {
  return (lambda - u) * a_of_u(p, u) / p.tau - p.delta * u;
}

double f_on_mass_line_derivative(const Model4Params& p, double lambda, double u) {
  return (-a_of_u(p, u) + (lambda - u) * a_prime(p, u)) / p.tau - p.delta;
}

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

std::optional<double> rk4_substeps(const Model4Params& p, double lambda, double U, double h, int substeps) {
  const double tol = 1e-9 * lambda;
  auto rhs = [&](double x) -> std::optional<double> {
    if (!(x >= 0.0)) return std::nullopt;
    return primitive_G4_derivative(p, lambda, x);
  };
  for (int s = 0; s < substeps; ++s) {
    const auto k1 = rhs(U);
    if (!k1) return std::nullopt;
    const auto k2 = rhs(U + 0.5 * h * *k1);
    if (!k2) return std::nullopt;
    const auto k3 = rhs(U + 0.5 * h * *k2);
    if (!k3) return std::nullopt;
    const auto k4 = rhs(U + h * *k3);
    if (!k4) return std::nullopt;
    U += h / 6.0 * (*k1 + 2.0 * *k2 + 2.0 * *k3 + *k4);
    if (U < -tol || U > lambda + tol || !std::isfinite(U)) return std::nullopt;
  }
  return U;
}

}  // namespace

double A_of(const Model4Params& p, double lambda, double u) {
  if (u == lambda) throw EquilibriumError("A(u) has a pole at u = lambda");
  return p.tau * p.delta / p.b + p.gamma + p.k0 + lambda * p.tau * p.delta / (p.b * (u - lambda));
}

double B_of(const Model4Params& p, double u) {
  if (u < 0.0) throw ParameterError("u must be nonnegative");
  if (p.m == 2.0) {
    const double k2 = p.k * p.k;
    return p.gamma * k2 / (k2 + u * u);
  }
  return p.gamma / (1.0 + std::pow(u / p.k, p.m));
}

HomogeneousEquilibrium solve_equilibrium(const Model4Params& p, double lambda, int audit_points) {
  p.validate();
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be positive");
  if (!(p.b > 0.0)) throw EquilibriumError("b must be positive for A(u) to exist");
  if (audit_points < 2) throw ParameterError("audit grid needs at least 2 points");

  const double upper = lambda * (1.0 - 1e-12);
  auto phi = [&](double u) { return A_of(p, lambda, u) - B_of(p, u); };

  int changes = 0;
  int last = sign_of(phi(0.0));
  for (int i = 1; i < audit_points; ++i) {
    const double u = upper * static_cast<double>(i) / static_cast<double>(audit_points - 1);
    const int s = sign_of(phi(u));
    if (s != 0 && last != 0 && s != last) ++changes;
    if (s != 0) last = s;
  }
  if (changes == 0)
    throw EquilibriumError("A - B has no sign change on (0, lambda); requires k0 > 0, delta > 0");
  if (changes > 1)
    throw EquilibriumError("A - B changes sign " + std::to_string(changes) +
                           " times on (0, lambda); homogeneous equilibrium is not unique");

  double lo = 0.0;
  double hi = upper;
  if (!(phi(lo) > 0.0 && phi(hi) < 0.0))
    throw EquilibriumError("A - B does not bracket a root on [0, lambda)");
  HomogeneousEquilibrium eq;
  for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * lambda; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double A = A_of(p, lambda, mid);
    const double B = B_of(p, mid);
    eq.trace.push_back({lo, hi, mid, A, B});
    (A - B > 0.0 ? lo : hi) = mid;
  }

  // f and A - B share sign on (0, lambda); polish on f, keeping the bracket.
  double u = 0.5 * (lo + hi);
  for (int it = 0; it < 50; ++it) {
    const double F = f_on_mass_line(p, lambda, u);
    if (F == 0.0) break;
    (F > 0.0 ? lo : hi) = u;
    const double dF = f_on_mass_line_derivative(p, lambda, u);
    double next = u - F / dF;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - u);
    u = next;
    if (step <= 2.0 * std::numeric_limits<double>::epsilon() * u) break;
  }

  eq.lambda = lambda;
  eq.u_star = u;
  eq.v_star = (lambda - u) / p.tau;
  eq.residual = f_model4(p, eq.u_star, eq.v_star);
  eq.sign_changes = changes;
  return eq;
}

double constant_a_equilibrium(double a, double tau, double delta, double lambda) {
  if (!(a > 0.0) || !(tau > 0.0) || !(delta >= 0.0) || !(lambda > 0.0))
    throw ParameterError("constant-a equilibrium needs a, tau, lambda > 0 and delta >= 0");
  return a * lambda / (a + tau * delta);
}

OdeTrajectory integrate_homogeneous_ode(const Model4Params& p, double lambda, double U0, double t_end,
                                        double dt) {
  p.validate();
  if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
  if (!(U0 >= 0.0 && U0 <= lambda)) throw ParameterError("U0 must lie in [0, lambda]");
  if (!(dt > 0.0) || !(t_end >= 0.0)) throw ParameterError("dt must be positive and t_end nonnegative");

  OdeTrajectory tr;
  tr.lambda = lambda;
  auto push = [&](double t, double U) {
    tr.t.push_back(t);
    tr.U.push_back(U);
    tr.V.push_back((lambda - U) / p.tau);
    tr.G.push_back(primitive_G4(p, lambda, std::max(U, 0.0)));
  };

  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  tr.t.reserve(steps + 1);
  push(0.0, U0);
  double U = U0;
  for (std::size_t n = 0; n < steps; ++n) {
    const double t0 = static_cast<double>(n) * dt;
    const double h = std::min(dt, t_end - t0);
    std::optional<double> next;
    for (int halvings = 0; halvings <= 20 && !next; ++halvings)
      next = rk4_substeps(p, lambda, U, h / static_cast<double>(1 << halvings), 1 << halvings);
    if (!next)
      throw EquilibriumError("RK4 step left [0, lambda] after 20 halvings at t = " + std::to_string(t0));
    U = std::clamp(*next, 0.0, lambda);
    push(t0 + h, U);
  }
  return tr;
}

}  // namespace polarsim
