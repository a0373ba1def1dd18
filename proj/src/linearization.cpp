#include "polarsim/linearization.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "polarsim/equilibrium.hpp"
#include "polarsim/parallel.hpp"

namespace polarsim {

std::string to_string(ModeStability s) {
  switch (s) {
    case ModeStability::stable: return "stable";
    case ModeStability::neutral: return "neutral";
    case ModeStability::unstable: return "unstable";
    case ModeStability::complex: return "complex";
  }
  return "unknown";
}

ModeEigenpair constant_a_mode_matrix(double a, double D, double tau, double delta, double mu, std::size_t j) {
  if (!(mu >= 0.0)) throw ParameterError("mu must be nonnegative");
  if (!(tau > 0.0)) throw ParameterError("tau must be positive");

  ModeEigenpair out;
  out.j = j;
  out.mu = mu;
  out.matrix = {{{-D * mu - delta, a}, {delta / tau, -(mu + a) / tau}}};

  const double trace = out.matrix[0][0] + out.matrix[1][1];
  const double det = mu * (D * mu + D * a + delta) / tau;
  const double gap = (D * mu + delta) - (mu + a) / tau;
  const double disc = gap * gap + 4.0 * a * delta / tau;
  const double scale = D * mu + delta + a;
  const double neutral_tol = 1e-12 * scale;

  if (disc < 0.0) {
    const double im = 0.5 * std::sqrt(-disc);
    out.eigenvalues = {std::complex<double>(0.5 * trace, im), std::complex<double>(0.5 * trace, -im)};
    out.classification = ModeStability::complex;
    return out;
  }

  // Large-magnitude root first, the other from the product of the roots.
  const double s = std::sqrt(disc);
  const double big = trace <= 0.0 ? 0.5 * (trace - s) : 0.5 * (trace + s);
  const double small = big != 0.0 ? det / big : 0.5 * (trace >= 0.0 ? trace - s : trace + s);
  out.eigenvalues = {std::complex<double>(big), std::complex<double>(small)};

  bool unstable = false;
  bool neutral = false;
  for (const auto& e : out.eigenvalues) {
    if (std::abs(e.real()) <= neutral_tol)
      neutral = true;
    else if (e.real() > 0.0)
      unstable = true;
  }
  out.classification = unstable ? ModeStability::unstable : neutral ? ModeStability::neutral : ModeStability::stable;
  return out;
}

double degeneracy_residual(const Model4Params& p, double lambda, std::size_t j, double mu_j) {
  if (j < 1) throw ParameterError("mode index is 1-based");
  const auto eq = solve_equilibrium(p, lambda);
  const double u = eq.u_star;
  const double a = a_of_u(p, u);
  const double ap = a_prime(p, u);
  const double xi = p.xi();
  // The mean of the homogeneous u* over Omega is u* itself.
  const double nonlocal = (j == 1 ? a : ap) * xi * u / p.tau;
  const double lhs = p.D * mu_j + p.delta + p.D * a + p.D * ap * u + nonlocal;
  const double rhs = ap * lambda / p.tau;
  return lhs - rhs;
}

ScanParameter parse_scan_parameter(const std::string& name) {
  if (name == "D") return ScanParameter::D;
  if (name == "lambda") return ScanParameter::lambda;
  if (name == "delta") return ScanParameter::delta;
  throw ParameterError("scan parameter must be one of D, lambda, delta (got '" + name + "')");
}

std::string to_string(ScanParameter s) {
  switch (s) {
    case ScanParameter::D: return "D";
    case ScanParameter::lambda: return "lambda";
    case ScanParameter::delta: return "delta";
  }
  return "unknown";
}

ScanResult scan_degeneracy(const Model4Params& p, double lambda, std::size_t j, double mu_j,
                           ScanParameter parameter, double lo, double hi, std::size_t samples,
                           unsigned threads) {
  if (samples < 2) throw ParameterError("scan needs at least 2 samples");
  if (!(lo > 0.0) || !(hi > lo)) throw ParameterError("scan range must be positive and increasing");

  auto evaluate = [&](double value) {
    Model4Params q = p;
    double lam = lambda;
    switch (parameter) {
      case ScanParameter::D: q.D = value; break;
      case ScanParameter::lambda: lam = value; break;
      case ScanParameter::delta: q.delta = value; break;
    }
    return degeneracy_residual(q, lam, j, mu_j);
  };

  ScanResult result;
  result.samples.resize(samples);
  parallel_for(samples, threads, [&](std::size_t i) {
    ScanSample& s = result.samples[i];
    s.value = i + 1 == samples ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(samples - 1);
    try {
      s.residual = evaluate(s.value);
    } catch (const std::exception& e) {
      s.ok = false;
      s.error = e.what();
    }
  });

  std::vector<ScanSample> refinement_failures;
  for (std::size_t i = 0; i + 1 < samples; ++i) {
    const ScanSample& a = result.samples[i];
    const ScanSample& b = result.samples[i + 1];
    if (!a.ok || !b.ok) continue;
    DegeneracyReport rep;
    rep.j = j;
    if (a.residual == 0.0) {
      rep.bracket_lo = rep.bracket_hi = rep.root = a.value;
      result.roots.push_back(rep);
      continue;
    }
    if (b.residual == 0.0 || (a.residual > 0.0) == (b.residual > 0.0)) continue;

    double x0 = a.value, x1 = b.value;
    double r0 = a.residual, r1 = b.residual;
    rep.residual_lo = r0;
    rep.residual_hi = r1;
    try {
      while (x1 - x0 > 1e-8 * std::max(std::abs(x0), std::abs(x1))) {
        const double mid = 0.5 * (x0 + x1);
        const double rm = evaluate(mid);
        if (rm == 0.0) {
          x0 = x1 = mid;
          r0 = r1 = 0.0;
          break;
        }
        if ((rm > 0.0) == (r0 > 0.0)) {
          x0 = mid;
          r0 = rm;
        } else {
          x1 = mid;
          r1 = rm;
        }
      }
      rep.bracket_lo = x0;
      rep.bracket_hi = x1;
      rep.residual_lo = r0;
      rep.residual_hi = r1;
      rep.root = 0.5 * (x0 + x1);
      rep.residual = evaluate(rep.root);
      result.roots.push_back(rep);
    } catch (const std::exception& e) {
      refinement_failures.push_back({0.5 * (x0 + x1), 0.0, false, std::string("refinement: ") + e.what()});
    }
  }
  // The last sample is checked for an exact zero too.
  if (const auto& last = result.samples[samples - 1]; last.ok && last.residual == 0.0) {
    DegeneracyReport rep;
    rep.j = j;
    rep.bracket_lo = rep.bracket_hi = rep.root = last.value;
    result.roots.push_back(rep);
  }
  result.samples.insert(result.samples.end(), refinement_failures.begin(), refinement_failures.end());
  return result;
}

}  // namespace polarsim
